"""Command-line harness: build, verify, sweep, scaling and cantor subcommands.

Exit codes: 0 success, 1 certification failure, 2 bad parameters,
3 ball-count constant above the acceptance bound, 4 scaling slope off,
5 Cantor lower bounds not diverging.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import click

from .cantor import build_implicit, certificate, read_plan
from .errors import CertificationFailure, FrostprojError
from .projection import direction_sweep, scaling_exponent, sweep_count
from .sticks import Arrangement, build_arrangement, dump_arrangement, load_arrangement
from .verify import SamplingPolicy, arrangement_index, overlap_histogram, verify_kt

C_ACCEPT = 200.0
SLOPE_TOL = 0.05
SCHEMA = 1


class Abort(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def parse_levels(text: str) -> list[int]:
    """``"8"`` or an inclusive range ``"6:11"``."""
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":", 1))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise Abort(2, f"--k must be an integer or LO:HI, got {text!r}") from None


def tag(t: float) -> str:
    return f"{t:.6g}"


def summary(arr: Arrangement) -> dict:
    return {
        "schema": SCHEMA,
        "t": arr.t,
        "k": arr.k,
        "regime": arr.regime,
        "pset_size": arr.pset_size,
        "pset_size_times_delta_t": arr.pset_size * arr.delta ** arr.t,
        "max_multiplicity": arr.max_multiplicity,
        "materialized": arr.materialized,
        "sticks": arr.n_sticks,
    }


def need(value, flag: str):
    if value is None:
        raise Abort(2, f"{flag} is required")
    return value


def run(fn):
    """Map library errors to exit codes; no output files are left on failure."""
    try:
        code = fn()
    except Abort as e:
        click.echo(str(e), err=True)
        sys.exit(e.code)
    except CertificationFailure as e:
        click.echo(f"certification failed: {e}", err=True)
        sys.exit(1)
    except (FrostprojError, ValueError) as e:
        click.echo(str(e), err=True)
        sys.exit(2)
    sys.exit(code or 0)


@click.group()
def main():
    """Stick arrangements, their certificates, and nested Cantor measures."""


common_out = click.option("--out", "out", type=click.Path(file_okay=False), default=".", show_default=True,
                          help="Output directory.")


@main.command()
@click.option("--t", "t", type=float, required=True)
@click.option("--k", "k", type=str, required=True, help="Level or inclusive range LO:HI.")
@common_out
def build(t, k, out):
    """Build arrangements and write them with a JSON summary."""

    def go():
        results = []
        files = []
        for lv in parse_levels(k):
            arr = build_arrangement(2.0 ** -lv, t)
            files.append((Path(out) / f"arrangement_t{tag(t)}_k{lv}.txt", dump_arrangement(arr)))
            results.append(summary(arr))
        for path, text in files:
            write_atomic(path, text)
        doc = results[0] if len(results) == 1 else {"schema": SCHEMA, "arrangements": results}
        name = f"build_t{tag(t)}_k{k.replace(':', '-')}.json"
        write_atomic(Path(out) / name, to_json(doc))
        click.echo(to_json(doc), nl=False)

    run(go)


@main.command()
@click.option("--arrangement", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--t", "t", type=float, default=None)
@click.option("--k", "k", type=int, default=None)
@click.option("--Delta", "Delta", type=float, default=1.0, show_default=True, help="Upper scale.")
@click.option("--seed", type=int, default=0xF05, show_default=True)
@click.option("--extra-centers", type=int, default=10_000, show_default=True)
@common_out
def verify(arrangement, t, k, Delta, seed, extra_centers, out):
    """Ball-count verification between scales delta and Delta; exit 3 above the bound."""

    def go():
        if arrangement is not None:
            arr = load_arrangement(Path(arrangement).read_text())
        else:
            arr = build_arrangement(2.0 ** -need(k, "--k"), need(t, "--t"))
        if extra_centers < 0:
            raise Abort(2, "--extra-centers must be >= 0")
        if not arr.delta <= Delta <= 1.0:
            raise Abort(2, f"--Delta must lie in [delta, 1] = [{arr.delta!r}, 1]")
        policy = SamplingPolicy(extra=extra_centers, seed=seed)
        rep = verify_kt(arrangement_index(arr), arr.delta, Delta, arr.t, policy)
        stem = f"kt_t{tag(arr.t)}_k{arr.k}"
        rows = [(r.r, r.max_ratio, r.witness_x, r.witness_y, r.witness_count) for r in rep.table]
        doc = {
            "schema": SCHEMA,
            "delta": rep.delta,
            "Delta": rep.Delta,
            "t": rep.t,
            "c_star": rep.C_star,
            "certified_c": rep.certified_c,
            "samples": rep.samples,
            "exhaustive": rep.exhaustive,
            "witness": {"x": rep.witness[0], "y": rep.witness[1], "r": rep.witness[2], "count": rep.witness[3]},
            "overlap_histogram": {str(m): c for m, c in sorted(overlap_histogram(arr).items())},
            "accepted": rep.C_star <= C_ACCEPT,
        }
        write_atomic(Path(out) / f"{stem}.csv", to_csv(["r", "max_ratio", "witness_x", "witness_y", "witness_count"], rows))
        write_atomic(Path(out) / f"{stem}.json", to_json(doc))
        click.echo(f"c_star={rep.C_star:.6g} certified_c={rep.certified_c} samples={rep.samples}")
        if rep.C_star > C_ACCEPT:
            click.echo(f"c_star exceeds {C_ACCEPT:g}", err=True)
            return 3
        return 0

    run(go)


SWEEP_HEADER = ["phi", "lp_norm", "cert_mass", "cert_width_over_delta", "holder_lb", "stick_id"]


def _sweep_one(t, lv, p, count, subbins, norms):
    arr = build_arrangement(2.0 ** -lv, t)
    n = sweep_count(arr) if count is None else count
    return arr, direction_sweep(arr, p, n, subbins, norms=norms)


def _check_p(p):
    if p is None or not p > 1:
        raise Abort(2, "--p must exceed 1")


@main.command()
@click.option("--t", "t", type=float, required=True)
@click.option("--k", "k", type=str, required=True)
@click.option("--p", "p", type=float, required=True)
@click.option("--sweep-count", type=int, default=None, help="Directions; default max(4m, 720).")
@click.option("--subbins", type=int, default=8, show_default=True)
@common_out
def sweep(t, k, p, sweep_count, subbins, out):
    """Per-direction projection norms and concentration certificates as CSV."""

    def go():
        _check_p(p)
        if subbins < 1:
            raise Abort(2, "--subbins must be >= 1")
        for lv in parse_levels(k):
            _, table = _sweep_one(t, lv, p, sweep_count, subbins, True)
            write_atomic(Path(out) / f"sweep_t{tag(t)}_k{lv}_p{tag(p)}.csv", to_csv(SWEEP_HEADER, table.rows()))
            click.echo(f"k={lv} rows={len(table)}")

    run(go)


def _fit(points, expected):
    slope, icept, resid = scaling_exponent([(2.0 ** -kk, v) for kk, v in points])
    return {"points": [[kk, v] for kk, v in points], "slope": slope, "intercept": icept,
            "expected_slope": expected, "residual": resid}


def _read_series(path: str) -> list[tuple[float, float]]:
    """CSV rows ``delta,value``; a header row is skipped."""
    pts = []
    for row in csv.reader(Path(path).read_text().splitlines()):
        if not row or row[0].strip().startswith("#"):
            continue
        try:
            d, v = float(row[0]), float(row[1])
        except ValueError:
            continue
        if d <= 0:
            raise Abort(2, f"non-positive delta {d} in series")
        pts.append((-math.log2(d), v))
    return pts


@main.command()
@click.option("--t", "t", type=float, required=True)
@click.option("--k", "k", type=str, default=None, help="Inclusive ladder LO:HI.")
@click.option("--p", "p", type=float, default=8.0, show_default=True)
@click.option("--series", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Fit a given delta,value CSV instead of building arrangements.")
@click.option("--sweep-count", type=int, default=None)
@common_out
def scaling(t, k, p, series, sweep_count, out):
    """Fit the minimal certificate mass against delta; exit 4 if the slope is off t/2."""

    def go():
        _check_p(p)
        mass_expected = t / 2.0
        if series is not None:
            doc = {"schema": SCHEMA, "t": t, "p": p, "series": "given", **_fit(_read_series(series), mass_expected)}
        else:
            mass_pts, lb_pts = [], []
            for lv in parse_levels(need(k, "--k")):
                _, table = _sweep_one(t, lv, p, sweep_count, 8, False)
                mass_pts.append((lv, float(table.cert_mass.min())))
                lb_pts.append((lv, float(table.holder_lb.min())))
            doc = {"schema": SCHEMA, "t": t, "p": p, "series": "cert_mass", **_fit(mass_pts, mass_expected),
                   "holder_lb": _fit(lb_pts, 1.0 / p - (2.0 - t) / 2.0)}
        name = "scaling_given.json" if series is not None else f"scaling_t{tag(t)}_p{tag(p)}.json"
        write_atomic(Path(out) / name, to_json(doc))
        click.echo(f"slope={doc['slope']:.6g} expected={mass_expected:.6g} residual={doc['residual']:.3g}")
        if abs(doc["slope"] - mass_expected) > SLOPE_TOL:
            click.echo(f"slope differs from {mass_expected:g} by more than {SLOPE_TOL}", err=True)
            return 4
        return 0

    run(go)


@main.command()
@click.option("--plan", "plan_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--relax-form7", is_flag=True, help="Toy mode: reuse a0 at every level.")
@click.option("--sweep-count", type=int, default=720, show_default=True)
@common_out
def cantor(plan_file, relax_form7, sweep_count, out):
    """Per-level lower bounds for a nested construction; exit 5 unless they diverge."""

    def go():
        plan = read_plan(Path(plan_file).read_text(), relax_form7)
        ic = build_implicit(plan)
        doc = certificate(ic, count=sweep_count)
        write_atomic(Path(out) / f"certificate_{Path(plan_file).stem}.json", to_json(doc))
        for n, log2_lb, src in doc["lb_log2"]:
            click.echo(f"level {n}: log2 lb = {log2_lb:.6g} ({src})")
        bad = [lv["n"] for lv in doc["levels"] if lv["c_star"] is not None and lv["c_star"] > C_ACCEPT]
        if bad:
            click.echo(f"levels {bad} exceed the ball-count bound", err=True)
            return 3
        if not doc["diverging"]:
            click.echo("lower bounds do not grow by a factor 2 per level", err=True)
            return 5
        return 0

    run(go)


if __name__ == "__main__":
    main()
