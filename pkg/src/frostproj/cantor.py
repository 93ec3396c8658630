"""Multi-scale Cantor measures built by nesting one arrangement per level.

Level ``n`` uses squares of side ``2**-a_n`` inside each surviving square of
the previous level, so a square at cumulative depth ``A_j`` is alive exactly
when every ancestor's relative cell belongs to that level's pattern.  Counts
and masses are exact integers and fractions; scales are carried as exponents.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import FrostprojError, ParameterOrder, ScaleTooCoarse, TooLarge, UnalignedScale
from .geometry import DyadicSquare
from .projection import DiscreteMeasure, concentrations, lp_norm, pushforward
from .sticks import (
    LATTICE_MAX_T,
    MIN_LEVEL,
    Arrangement,
    build_arrangement,
    min_level,
)
from .verify import arrangement_index, verify_kt

EXPLICIT_LIMIT = 10_000_000
PROBE_LIMIT = 100_000
# levels with more sticks than this are described by bounds only
BUILD_STICK_LIMIT = 2_000_000
# slack added to the analytic interval width (cells) for quantised stick directions
WIDTH_SLACK = 0.01


@dataclass(frozen=True)
class ScalePlan:
    t: Fraction
    u: Fraction
    v: Fraction
    p: Fraction
    exponents: tuple[int, ...]
    relax_form7: bool = False

    @property
    def depth(self) -> int:
        return len(self.exponents) - 1

    @property
    def cumulative(self) -> tuple[int, ...]:
        out, acc = [], 0
        for a in self.exponents:
            acc += a
            out.append(acc)
        return tuple(out)

    def nesting_holds(self, n: int) -> bool:
        """``2 A_{n-1} <= a_n (v - u) / 2`` in exact arithmetic."""
        prev = self.cumulative[n - 1]
        return 2 * prev <= self.exponents[n] * (self.v - self.u) / 2

    def as_dict(self) -> dict:
        return {
            "t": str(self.t), "u": str(self.u), "v": str(self.v), "p": str(self.p),
            "exponents": list(self.exponents), "cumulative": list(self.cumulative),
            "relax_form7": self.relax_form7,
        }


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def plan_scales(t, u, v, p, a0: int, depth: int, relax_form7: bool = False) -> ScalePlan:
    """Exponents ``a_n = ceil(4 A_{n-1} / (v - u))`` starting from ``a0``.

    With ``relax_form7`` every level reuses ``a0`` and only ``1 <= u < 2`` and
    ``p > 1`` are required; such plans are toys and are marked non-conforming.
    """
    t, u, v, p = (_frac(x) for x in (t, u, v, p))
    if relax_form7:
        if not (1 <= u < 2 and p > 1 and a0 >= 1 and depth >= 0):
            raise ParameterOrder(f"toy plan needs 1 <= u < 2, p > 1, a0 >= 1; got u={u}, p={p}, a0={a0}")
        return ScalePlan(t, u, v, p, tuple([int(a0)] * (depth + 1)), True)
    if not (1 <= t < u < v < 2):
        raise ParameterOrder(f"need 1 <= t < u < v < 2, got t={t}, u={u}, v={v}")
    threshold = Fraction(2) / (2 - v)
    if not p > threshold:
        raise ParameterOrder(f"need p > 2/(2-v) = {threshold} ({float(threshold):.6g}), got p={p}")
    if a0 < 2 or depth < 1:
        raise ParameterOrder(f"need a0 >= 2 and depth >= 1, got a0={a0}, depth={depth}")
    exps = [int(a0)]
    total = int(a0)
    for _ in range(depth):
        q = Fraction(4) / (v - u) * total
        a = -((-q.numerator) // q.denominator)
        exps.append(a)
        total += a
    plan = ScalePlan(t, u, v, p, tuple(exps))
    cum = plan.cumulative
    for n in range(1, depth + 1):
        assert plan.nesting_holds(n), f"nesting inequality fails at level {n}"
        assert Fraction(exps[n], cum[n - 1]) >= 2
        if n >= 2:
            assert Fraction(exps[n], cum[n - 1]) >= Fraction(exps[n - 1], cum[n - 2])
    return plan


def read_plan(text: str, relax_form7: bool = False) -> ScalePlan:
    """Parse ``key=value`` lines: t, u, v, p, a0, depth and optional relax_form7."""
    vals = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        vals[key.strip()] = val.strip()
    missing = {"t", "u", "v", "p", "a0", "depth"} - vals.keys()
    if missing:
        raise ParameterOrder(f"plan file lacks {sorted(missing)}")
    relax = relax_form7 or vals.get("relax_form7", "false").lower() == "true"
    return plan_scales(vals["t"], vals["u"], vals["v"], vals["p"], int(vals["a0"]), int(vals["depth"]), relax)


@dataclass(frozen=True)
class LevelBounds:
    """Bounds valid for any arrangement the stick builder produces at ``(a, u)``.

    ``log2_*`` fields allow exponents far beyond floating-point range.
    """

    count_lb: int | None
    log2_count_lb: float
    log2_pset_ub: float
    width_ub: float  # in cells


def level_bounds(a: int, u: float) -> LevelBounds:
    """Stick size, square count and concentration width bounds at ``delta = 2**-a``.

    A stick of ``N = delta^(-u/2)`` cells' length covers at least ``N + 2``
    squares and at most ``sqrt2 N + 4``; there are ``ceil(pi N)`` sticks;
    the nearest stick is within ``pi/(2m)`` of any direction, so its squares
    project into ``N pi/(2m) + 2 sqrt2 <= 1/2 + 2 sqrt2`` cells.
    """
    log2_n = a * u / 2.0
    if log2_n < 900:
        n = 2.0 ** log2_n
        m = math.ceil(math.pi * n)
        count = math.floor(n)
        log2_count = math.log2(count)
        log2_pset = min(math.log2(m * (math.sqrt(2.0) * n + 4.0)), 2.0 * a)
        width = n * math.pi / (2.0 * m) + 2.0 * math.sqrt(2.0) + WIDTH_SLACK
        return LevelBounds(count, log2_count, log2_pset, width)
    # N > 2**900: additive constants vanish below float resolution of the logs
    log2_pset = math.log2(math.pi * math.sqrt(2.0)) + 2.0 * log2_n + 1e-9
    return LevelBounds(None, log2_n - 1e-9, log2_pset, 0.5 + 2.0 * math.sqrt(2.0) + WIDTH_SLACK)


@dataclass
class LevelSpec:
    n: int
    a: int
    status: str  # explicit | implicit | analytic | coarse
    arrangement: Arrangement | None = None
    pattern: np.ndarray | None = None
    pset_size: int | None = None
    minimal_a: int | None = None
    c_star: float | None = None
    _grid: np.ndarray | None = field(default=None, repr=False)

    @property
    def failed(self) -> bool:
        return self.status == "coarse"

    def grid(self) -> np.ndarray:
        """Boolean occupancy of the ``2**a x 2**a`` pattern."""
        if self._grid is None:
            g = np.zeros((1 << self.a, 1 << self.a), dtype=bool)
            g[self.pattern[:, 0], self.pattern[:, 1]] = True
            self._grid = g
        return self._grid


def minimal_exponent(u: float) -> int:
    return MIN_LEVEL if u <= LATTICE_MAX_T else min_level(u)


def build_level(n: int, a: int, u: float) -> LevelSpec:
    if a < minimal_exponent(u):
        return LevelSpec(n, a, "coarse", minimal_a=minimal_exponent(u))
    if math.pi * 2.0 ** (a * u / 2.0) > BUILD_STICK_LIMIT:
        return LevelSpec(n, a, "analytic")
    try:
        arr = build_arrangement(2.0 ** -a, u)
    except (ScaleTooCoarse, TooLarge):
        return LevelSpec(n, a, "analytic", minimal_a=minimal_exponent(u))
    if not arr.materialized:
        return LevelSpec(n, a, "implicit", arrangement=arr, pset_size=arr.pset_size)
    inside = (arr.pset >= 0).all() and (arr.pset < (1 << a)).all()
    if not inside:
        raise FrostprojError(f"level {n} squares leave the unit square")
    return LevelSpec(n, a, "explicit", arrangement=arr, pattern=arr.pset, pset_size=arr.pset_size)


@dataclass
class ImplicitCantor:
    plan: ScalePlan | None
    levels: list[LevelSpec]

    @property
    def exponents(self) -> list[int]:
        return [lv.a for lv in self.levels]

    @property
    def cumulative(self) -> list[int]:
        return list(np.cumsum(self.exponents).tolist())

    @property
    def conforming(self) -> bool:
        return self.plan is not None and not self.plan.relax_form7

    def m(self, n: int) -> int:
        """Exact ``prod_{k <= n} |P_k|``; ``m(-1) = 1``."""
        out = 1
        for lv in self.levels[: n + 1]:
            if lv.pset_size is None:
                raise ValueError(f"level {lv.n} has no exact square count")
            out *= lv.pset_size
        return out

    def log2_m_upper(self, n: int) -> float:
        """``log2 m(n)``, using the analytic upper bound on levels without exact counts."""
        total = 0.0
        u = float(self.plan.u) if self.plan is not None else 1.0
        for lv in self.levels[: n + 1]:
            total += math.log2(lv.pset_size) if lv.pset_size is not None else level_bounds(lv.a, u).log2_pset_ub
        return total

    def explicit_depth(self) -> int:
        """Deepest ``n`` such that levels ``0..n`` all have explicit patterns (-1 if none)."""
        d = -1
        for lv in self.levels:
            if lv.pattern is None:
                break
            d = lv.n
        return d

    @classmethod
    def from_patterns(cls, exponents, patterns) -> "ImplicitCantor":
        """Synthetic toy from explicit per-level cell patterns."""
        levels = []
        for n, (a, pat) in enumerate(zip(exponents, patterns)):
            pat = np.unique(np.asarray(pat, dtype=np.int64).reshape(-1, 2), axis=0)
            if ((pat < 0) | (pat >= (1 << a))).any():
                raise ValueError(f"pattern {n} leaves the unit square")
            levels.append(LevelSpec(n, int(a), "explicit", pattern=pat, pset_size=len(pat)))
        return cls(None, levels)


def build_implicit(plan: ScalePlan) -> ImplicitCantor:
    """One arrangement per level at parameter ``u``; fine levels keep only bounds."""
    u = float(plan.u)
    cache: dict[int, LevelSpec] = {}
    levels = []
    for n, a in enumerate(plan.exponents):
        if a not in cache:
            cache[a] = build_level(n, a, u)
        levels.append(dataclasses.replace(cache[a], n=n))
    return ImplicitCantor(plan, levels)


def mass_of_square(ic: ImplicitCantor, q: DyadicSquare) -> Fraction:
    """Exact mass of an aligned square: ``1/m_j`` if its ancestor chain is alive, else 0."""
    cum = ic.cumulative
    if q.k not in cum:
        raise UnalignedScale(f"level {q.k} is not one of the cumulative exponents {cum}")
    j = cum.index(q.k)
    if not (0 <= q.i < (1 << q.k) and 0 <= q.j < (1 << q.k)):
        return Fraction(0)
    for lv in range(j + 1):
        shift = q.k - cum[lv]
        mask = (1 << ic.levels[lv].a) - 1
        ri, rj = (q.i >> shift) & mask, (q.j >> shift) & mask
        if ic.levels[lv].pattern is None:
            raise ValueError(f"level {lv} has no explicit pattern")
        if not ic.levels[lv].grid()[ri, rj]:
            return Fraction(0)
    return Fraction(1, ic.m(j))


def alive_mask(ic: ImplicitCantor, j: int, cells: np.ndarray) -> np.ndarray:
    """Vectorised aliveness of cells at cumulative level ``A_j``."""
    cum = ic.cumulative
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    side = 1 << cum[j]
    ok = (cells >= 0).all(axis=1) & (cells < side).all(axis=1)
    for lv in range(j + 1):
        shift = cum[j] - cum[lv]
        mask = (1 << ic.levels[lv].a) - 1
        ri = (cells[:, 0] >> shift) & mask
        rj = (cells[:, 1] >> shift) & mask
        ok &= ic.levels[lv].grid()[ri, rj]
    return ok


def alive_cells(ic: ImplicitCantor, depth: int, limit: int = EXPLICIT_LIMIT) -> np.ndarray:
    total = ic.m(depth)
    if total > limit:
        raise TooLarge(f"{total} squares at depth {depth} exceed {limit}")
    cells = ic.levels[0].pattern.copy()
    for lv in ic.levels[1: depth + 1]:
        cells = ((cells[:, None, :] << lv.a) + lv.pattern[None, :, :]).reshape(-1, 2)
    order = np.lexsort((cells[:, 1], cells[:, 0]))
    return cells[order]


def materialize_toy(ic: ImplicitCantor, depth: int | None = None) -> DiscreteMeasure:
    """Every alive square at the deepest (or given) level, uniformly weighted."""
    depth = ic.explicit_depth() if depth is None else depth
    if depth < 0:
        raise ValueError("no explicit levels")
    return DiscreteMeasure.uniform(ic.cumulative[depth], alive_cells(ic, depth))


@dataclass
class ProbeResult:
    max_ratio: float
    witness: tuple[float, float, float]
    mass: Fraction
    samples: int
    radii: list[float]


def _ball_hits(cells: np.ndarray, k: int, x: float, y: float, r: float) -> np.ndarray:
    """Closed squares meeting the closed ball; ties are kept (an overcount only)."""
    s = 2.0 ** -k
    lo_x = cells[:, 0] * s
    lo_y = cells[:, 1] * s
    dx = np.maximum(np.maximum(lo_x - x, x - lo_x - s), 0.0)
    dy = np.maximum(np.maximum(lo_y - y, y - lo_y - s), 0.0)
    return dx * dx + dy * dy <= r * r * (1.0 + 1e-12)


def ball_mass_upper(ic: ImplicitCantor, x: float, y: float, r: float, depth: int) -> tuple[int, int]:
    """``(count, level)`` such that ``mu(B(x, r)) <= count / m_level``.

    Descends through alive squares meeting the ball while the next level has
    at most ``PROBE_LIMIT`` candidates.
    """
    cum = ic.cumulative
    cells = ic.levels[0].pattern[_ball_hits(ic.levels[0].pattern, cum[0], x, y, r)]
    level = 0
    while level < depth:
        nxt = ic.levels[level + 1]
        if len(cells) * len(nxt.pattern) > PROBE_LIMIT or len(cells) == 0:
            break
        kids = ((cells[:, None, :] << nxt.a) + nxt.pattern[None, :, :]).reshape(-1, 2)
        cells = kids[_ball_hits(kids, cum[level + 1], x, y, r)]
        level += 1
    return len(cells), level


def frostman_probe(ic: ImplicitCantor, t_prime: float, samples: int = 10_000, seed: int = 0xF05) -> ProbeResult:
    """Largest observed ``mu(B(x, r)) / r^t'``.

    Radii are ``2**-j`` from 1 down to four times the deepest explicit side, so
    the square-covering slack stays bounded.  ``samples`` counts ``(x, r)``
    pairs; half the centres are points of random alive chains, half uniform.
    """
    depth = ic.explicit_depth()
    if depth < 0:
        raise ValueError("probe needs at least one explicit level")
    cum = ic.cumulative
    radii = [2.0 ** -j for j in range(0, max(cum[depth] - 2, 0) + 1)]
    ncent = max(2, -(-samples // len(radii)))
    rng = np.random.default_rng(seed)
    chain = ncent // 2
    pts = np.zeros((chain, 2), dtype=np.int64)
    for lv in ic.levels[: depth + 1]:
        pick = lv.pattern[rng.integers(0, len(lv.pattern), size=chain)]
        pts = (pts << lv.a) + pick
    centres = np.vstack([(pts + 0.5) * 2.0 ** -cum[depth], rng.random((ncent - chain, 2))])
    best = (-1.0, (0.0, 0.0, 1.0), Fraction(0))
    for x, y in centres:
        for r in radii:
            count, level = ball_mass_upper(ic, float(x), float(y), r, depth)
            if count == 0:
                continue
            mass = Fraction(count, ic.m(level))
            ratio = float(mass) / r ** t_prime
            if ratio > best[0]:
                best = (ratio, (float(x), float(y), r), mass)
    return ProbeResult(max(best[0], 0.0), best[1], best[2], len(centres) * len(radii), radii)


@dataclass
class LevelLowerBound:
    n: int
    log2_lb: float
    min_phi: float | None
    source: str  # certificate | bounds

    @property
    def value(self) -> float:
        try:
            return 2.0 ** self.log2_lb
        except OverflowError:
            return math.inf


def level_lower_bounds(ic: ImplicitCantor, n: int, p: float, phis) -> np.ndarray:
    """``log2`` of ``(mass_n(phi) / m_{n-1}) / (Delta_{n-1} |I_n(phi)|)^((p-1)/p)`` per angle.

    Built levels use concentration certificates of their arrangement;
    levels too fine to build use :func:`level_bounds` for every angle.  A
    square count that is only bounded enters ``m_{n-1}`` as its upper bound,
    which keeps the result a lower bound.
    """
    q = (p - 1.0) / p
    phis = np.atleast_1d(np.asarray(phis, dtype=np.float64))
    prev_a = ic.cumulative[n - 1] if n > 0 else 0
    lv = ic.levels[n]
    if lv.arrangement is None:
        u = float(ic.plan.u) if ic.plan is not None else 1.0
        b = level_bounds(lv.a, u)
        log2_mass = b.log2_count_lb - b.log2_pset_ub
        log2_width = math.log2(b.width_ub) - lv.a - prev_a
        return np.full(len(phis), log2_mass - ic.log2_m_upper(n - 1) - q * log2_width)
    certs = concentrations(lv.arrangement, phis)
    mass = np.array([c.mass for c in certs])
    width = np.array([c.width for c in certs])
    exact_m = all(v.pset_size is not None for v in ic.levels[:n])
    if exact_m and prev_a <= 900 and ic.m(n - 1) < 1e300:
        lbs = (mass / float(ic.m(n - 1))) / (2.0 ** -prev_a * width) ** q
        return np.log2(lbs)
    return np.log2(mass) - ic.log2_m_upper(n - 1) - q * (np.log2(width) - prev_a)


def divergence_certificate(ic: ImplicitCantor, n: int, p: float, count: int = 720, phis=None) -> LevelLowerBound:
    """Smallest level-``n`` lower bound over ``count`` equally spaced angles (or ``phis``)."""
    lv = ic.levels[n]
    if lv.arrangement is None:
        return LevelLowerBound(n, float(level_lower_bounds(ic, n, p, [0.0])[0]), None, "bounds")
    phis = np.arange(count) * (math.pi / count) if phis is None else np.asarray(phis, dtype=np.float64)
    logs = level_lower_bounds(ic, n, p, phis)
    w = int(np.argmin(logs))
    return LevelLowerBound(n, float(logs[w]), float(phis[w]), "certificate")


def cross_validate(ic: ImplicitCantor, p: float, directions: int = 50, checks: int = 2000,
                   seed: int = 0xF05, subbins: int = 8) -> dict:
    """Compare implicit queries with the enumerated measure at the deepest small level.

    Masses of random alive and dead squares must match enumeration exactly,
    and the projected L^p norm must dominate the level lower bound.
    """
    depth = ic.explicit_depth()
    while depth >= 0 and ic.m(depth) > EXPLICIT_LIMIT:
        depth -= 1
    if depth < 0:
        raise TooLarge("no explicit level small enough to enumerate")
    k = ic.cumulative[depth]
    cells = alive_cells(ic, depth)
    total = len(cells)
    rng = np.random.default_rng(seed)
    alive = {(int(i), int(j)) for i, j in cells[rng.integers(0, total, size=checks)]}
    probe = rng.integers(0, 1 << k, size=(checks, 2))
    keys = cells[:, 0] * (1 << k) + cells[:, 1]
    pk = probe[:, 0] * (1 << k) + probe[:, 1]
    lookup = np.isin(pk, keys)
    mismatches = 0
    expect = Fraction(1, ic.m(depth))
    for i, j in alive:
        mismatches += mass_of_square(ic, DyadicSquare(k, i, j)) != expect
    for (i, j), hit in zip(probe.tolist(), lookup):
        mismatches += mass_of_square(ic, DyadicSquare(k, i, j)) != (expect if hit else 0)
    mismatches += total != ic.m(depth)
    phis = (np.arange(directions) + 0.5) * (math.pi / directions)
    log_lb = level_lower_bounds(ic, depth, p, phis)
    mu = DiscreteMeasure.uniform(k, cells)
    norms = np.array([lp_norm(pushforward(mu, phi, subbins), p) for phi in phis])
    dominated = bool(np.all(norms * (1 + 1e-6) >= 2.0 ** log_lb))
    return {
        "depth": depth, "level": k, "squares": total,
        "mass_checks": len(alive) + len(probe), "mass_mismatches": int(mismatches),
        "directions": directions, "min_norm_over_lb": float(np.min(norms / 2.0 ** log_lb)),
        "norms_dominate": dominated,
    }


def certificate(ic: ImplicitCantor, p: float | None = None, count: int = 720, check_levels: bool = True) -> dict:
    """Per-level summary and lower bounds, ready for JSON."""
    p = float(ic.plan.p) if p is None else p
    levels = []
    seen: dict[int, float] = {}
    for lv in ic.levels:
        if check_levels and lv.status == "explicit" and lv.arrangement is not None and lv.c_star is None:
            arr = lv.arrangement
            if id(arr) not in seen:
                seen[id(arr)] = verify_kt(arrangement_index(arr), arr.delta, 1.0, arr.t).C_star
            lv.c_star = seen[id(arr)]
        levels.append({
            "n": lv.n, "a_n": lv.a, "status": lv.status,
            "pset_size": lv.pset_size, "c_star": lv.c_star, "minimal_a": lv.minimal_a,
        })
    bounds = [divergence_certificate(ic, lv.n, p, count) for lv in ic.levels]
    logs = [b.log2_lb for b in bounds]
    diverging = len(logs) >= 2 and all(b - a >= 1.0 for a, b in zip(logs, logs[1:]))
    out = {
        "schema": 1,
        "plan": ic.plan.as_dict() if ic.plan is not None else None,
        "conforming": ic.conforming,
        "nesting_condition": [ic.plan.nesting_holds(n) for n in range(1, ic.plan.depth + 1)] if ic.plan is not None else [],
        "levels": levels,
        "lb": [[b.n, b.min_phi, b.value if math.isfinite(b.value) else None] for b in bounds],
        "lb_log2": [[b.n, b.log2_lb, b.source] for b in bounds],
        "diverging": diverging,
    }
    if not ic.conforming:
        out["cross_validation"] = cross_validate(ic, p)
    return out
