"""Projections of square measures onto lines and concentration certificates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CertificationFailure, DegenerateSeries
from .geometry import DyadicSquare
from .sticks import Arrangement

WIDTH_CAP = 6.0
COUNT_FACTOR = 0.7


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted dyadic squares of one level; weights sum to one."""

    k: int
    cells: np.ndarray
    weights: np.ndarray

    @property
    def delta(self) -> float:
        return 2.0 ** -self.k

    @classmethod
    def uniform(cls, k: int, cells) -> "DiscreteMeasure":
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        return cls(k, cells, np.full(len(cells), 1.0 / len(cells)))

    @classmethod
    def from_squares(cls, squares: list[DyadicSquare], weights=None) -> "DiscreteMeasure":
        k = squares[0].k
        if any(q.k != k for q in squares):
            raise ValueError("squares must share one level")
        cells = np.asarray([(q.i, q.j) for q in squares], dtype=np.int64)
        if weights is None:
            return cls.uniform(k, cells)
        w = np.asarray(weights, dtype=np.float64)
        return cls(k, cells, w / w.sum())

    @classmethod
    def of_arrangement(cls, arr: Arrangement) -> "DiscreteMeasure":
        if arr.pset is None:
            raise ValueError("arrangement square set is not materialized")
        return cls.uniform(arr.k, arr.pset)


@dataclass(frozen=True)
class ProjHistogram:
    origin: float
    width: float
    densities: np.ndarray
    phi: float

    @property
    def mass(self) -> float:
        return float(self.densities.sum() * self.width)

    def edges(self) -> np.ndarray:
        return self.origin + self.width * np.arange(len(self.densities) + 1)


def trapezoid_cdf(x, a: float, b: float):
    """CDF of the sum of independent uniforms on ``[0, a]`` and ``[0, b]``."""
    a, b = min(a, b), max(a, b)
    x = np.clip(x, 0.0, a + b)
    if a == 0.0:
        return x / b
    rise = x * x / (2.0 * a * b)
    flat = (x - 0.5 * a) / b
    fall = 1.0 - (a + b - x) ** 2 / (2.0 * a * b)
    return np.where(x <= a, rise, np.where(x <= b, flat, fall))


def _offsets(cells: np.ndarray, phi: float, delta: float):
    """Left end of each square's projection, and the two trapezoid legs."""
    s, c = math.sin(phi), math.cos(phi)
    xs = -s * delta * cells[:, 0]
    ys = c * delta * cells[:, 1]
    lo = np.minimum(xs, xs - s * delta) + np.minimum(ys, ys + c * delta)
    return lo, abs(c) * delta, abs(s) * delta


def pushforward(mu: DiscreteMeasure, phi: float, subbins: int = 8) -> ProjHistogram:
    """Exact bin masses of the projected measure onto ``u_perp(phi)``.

    Each square projects to a trapezoid; its mass in a bin is a difference of
    the trapezoid CDF at the bin edges.  Bins have width ``delta/subbins`` and
    start at a multiple of ``delta``, so halving the width nests the bins.
    """
    if subbins < 1:
        raise ValueError("subbins must be >= 1")
    delta = mu.delta
    w = delta / subbins
    lo, a, b = _offsets(mu.cells, phi, delta)
    origin = math.floor(lo.min() / delta) * delta
    first = np.floor((lo - origin) / w).astype(np.int64)
    span = int(math.ceil((a + b) / w)) + 2
    nbins = int(first.max()) + span + 1
    out = np.zeros(nbins)
    step = max(1, (1 << 21) // span)
    offs = np.arange(span)
    for i in range(0, len(lo), step):
        f = first[i:i + step, None] + offs[None, :]
        rel = origin + f * w - lo[i:i + step, None]
        cdf = trapezoid_cdf(np.concatenate([rel, rel[:, -1:] + w], axis=1), a, b)
        mass = np.diff(cdf, axis=1) * mu.weights[i:i + step, None]
        out += np.bincount(f.ravel(), weights=mass.ravel(), minlength=nbins)
    return ProjHistogram(origin, w, out / w, phi)


def lp_norm(h: ProjHistogram, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    d = h.densities
    if p == 1:
        return float(d.sum() * h.width)
    top = d.max(initial=0.0)
    if top == 0.0:
        return 0.0
    # factor out the peak so large p does not overflow
    return float(top * (h.width * np.sum((d / top) ** p)) ** (1.0 / p))


@dataclass(frozen=True)
class ConcentrationCert:
    phi: float
    lo: float
    hi: float
    stick_id: int
    square_count: int
    mass: float
    exact: bool = True

    @property
    def width(self) -> float:
        return self.hi - self.lo


def angular_gap(a, b):
    d = np.mod(np.abs(np.asarray(a) - np.asarray(b)), math.pi)
    return np.minimum(d, math.pi - d)


def nearest_sticks(arr: Arrangement, phis) -> np.ndarray:
    """Stick whose direction is closest to each angle (mod pi), ties to the lower id."""
    phis = np.atleast_1d(np.asarray(phis, dtype=np.float64))
    dirs = arr.directions[arr.dir_index]
    order = np.lexsort((np.arange(len(dirs)), dirs))
    sd = dirs[order]
    n = len(sd)
    pos = np.searchsorted(sd, np.mod(phis, math.pi))
    cand = np.stack([order[(pos + o) % n] for o in (-2, -1, 0, 1)], axis=1)
    gap = angular_gap(phis[:, None], dirs[cand])
    best = gap.min(axis=1, keepdims=True)
    tied = gap <= best + 1e-12
    ids = np.where(tied, cand, np.iinfo(np.int64).max)
    return ids.min(axis=1)


def _certify(arr: Arrangement, certs: list[ConcentrationCert]) -> None:
    need = COUNT_FACTOR * arr.delta ** (-arr.t / 2.0) - 2.0
    for c in certs:
        if c.width > WIDTH_CAP * arr.delta * (1 + 1e-12) or c.square_count < need:
            raise CertificationFailure(
                f"phi={c.phi!r} stick={c.stick_id}: width {c.width / arr.delta:.4f} delta "
                f"(cap {WIDTH_CAP}), count {c.square_count} (need >= {need:.2f})"
            )


def concentrations(arr: Arrangement, phis, check: bool = True) -> list[ConcentrationCert]:
    """Certificates for many directions at once (see :func:`concentration`)."""
    phis = np.atleast_1d(np.asarray(phis, dtype=np.float64))
    sid = nearest_sticks(arr, phis)
    sizes = arr.stick_sizes()
    total = arr.pset_size
    lo = np.empty(len(phis))
    hi = np.empty(len(phis))
    delta = arr.delta
    if arr.materialized:
        for s in np.unique(sid):
            which = np.nonzero(sid == s)[0]
            _, i, j = arr.stick_squares([s])
            cells = np.column_stack([i, j])
            for w in which:
                left, a, b = _offsets(cells, phis[w], delta)
                lo[w] = left.min()
                hi[w] = (left + a + b).max()
    else:
        a, b = arr.endpoints()
        sn, cs = np.sin(phis), np.cos(phis)
        pa = -sn * a[sid, 0] + cs * a[sid, 1]
        pb = -sn * b[sid, 0] + cs * b[sid, 1]
        w = delta * (np.abs(sn) + np.abs(cs))
        lo = np.minimum(pa, pb) - w
        hi = np.maximum(pa, pb) + w
    certs = [
        ConcentrationCert(float(phis[q]), float(lo[q]), float(hi[q]), int(sid[q]), int(sizes[sid[q]]),
                          float(sizes[sid[q]]) / total, arr.materialized)
        for q in range(len(phis))
    ]
    if check:
        _certify(arr, certs)
    return certs


def concentration(arr: Arrangement, phi: float) -> ConcentrationCert:
    """Interval containing the projection of the stick nearest to ``phi``.

    On materialised arrangements the interval is the exact hull of the
    projected squares.  Otherwise it is the projected segment widened by one
    square width on each side, which contains every square meeting it.
    Raises :class:`CertificationFailure` when the interval is wider than
    ``6 delta`` or the stick has too few squares.
    """
    return concentrations(arr, [phi])[0]


def holder_lower_bound(cert: ConcentrationCert, p: float) -> float:
    """``mass / |I|^((p-1)/p)``: no density with this mass on ``I`` has smaller L^p norm."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    if cert.mass <= 0 or cert.width <= 0:
        raise ValueError("need positive mass and interval length")
    return cert.mass / cert.width ** ((p - 1.0) / p)


@dataclass
class SweepTable:
    phi: np.ndarray
    lp_norm: np.ndarray
    cert_mass: np.ndarray
    cert_width_over_delta: np.ndarray
    holder_lb: np.ndarray
    stick_id: np.ndarray

    def rows(self):
        for q in range(len(self.phi)):
            yield (float(self.phi[q]), float(self.lp_norm[q]), float(self.cert_mass[q]),
                   float(self.cert_width_over_delta[q]), float(self.holder_lb[q]), int(self.stick_id[q]))

    def __len__(self) -> int:
        return len(self.phi)


def sweep_count(arr: Arrangement) -> int:
    return max(4 * arr.m, 720)


def direction_sweep(arr: Arrangement, p: float, count: int | None = None, subbins: int = 8,
                    norms: bool = True) -> SweepTable:
    """Evaluate ``phi_s = s pi / count`` for ``s < count``.

    ``lp_norm`` is NaN when ``norms`` is off or the square set is implicit.
    """
    count = sweep_count(arr) if count is None else count
    if count < 4 * arr.m:
        raise ValueError(f"sweep needs at least 4m = {4 * arr.m} directions")
    phis = np.arange(count) * (math.pi / count)
    certs = concentrations(arr, phis)
    width = np.array([c.width for c in certs])
    mass = np.array([c.mass for c in certs])
    lb = mass / width ** ((p - 1.0) / p)
    lps = np.full(count, np.nan)
    if norms and arr.materialized:
        mu = DiscreteMeasure.of_arrangement(arr)
        for q, phi in enumerate(phis):
            lps[q] = lp_norm(pushforward(mu, phi, subbins), p)
    return SweepTable(phis, lps, mass, width / arr.delta, lb, np.array([c.stick_id for c in certs]))


def scaling_exponent(series) -> tuple[float, float, float]:
    """Least-squares fit of ``log2(value)`` against ``log2(delta)``.

    Returns ``(slope, intercept, max_abs_residual)``.
    """
    pts = [(float(d), float(v)) for d, v in series]
    if len(pts) < 3:
        raise DegenerateSeries("need at least three points")
    if any(v <= 0 or d <= 0 for d, v in pts):
        raise DegenerateSeries("values must be positive")
    x = np.log2([d for d, _ in pts])
    y = np.log2([v for _, v in pts])
    if np.ptp(x) == 0:
        raise DegenerateSeries("all points share one scale")
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + icept))))
    return float(slope), float(icept), resid
