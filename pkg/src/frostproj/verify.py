"""Counting squares in closed balls and estimating (delta, t) constants.

Queries are answered column by column.  A ball meets the cells of column
``c`` in one contiguous row range, which is computed exactly with integer
arithmetic once the centre and radius are expressed in units of
``delta / 2**s``.  Per-column counts then come from prefix sums.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import MixedScales
from .geometry import DyadicSquare, column_range_count, column_rows, last_column, normalize_offsets
from .sticks import Arrangement

# random extra centres are placed on this sub-grid of each cell
SUB_BITS = 4
DENSE_LIMIT = 1 << 25
CHUNK = 1 << 22


def isqrt_floor(v: np.ndarray) -> np.ndarray:
    """Elementwise integer square root of nonnegative int64 values."""
    h = np.floor(np.sqrt(v.astype(np.float64))).astype(np.int64)
    for _ in range(2):
        h = np.where(h * h > v, h - 1, h)
        h = np.where((h + 1) * (h + 1) <= v, h + 1, h)
    return h


def ball_rows(cols, cx, cy, rr, s: int):
    """Rows of column ``cols`` whose closed cell meets the closed ball.

    ``cx, cy, rr`` are integers in units of ``2**-s`` cells.  Returns
    ``(jlo, jhi)``; the range is empty (``jlo > jhi``) when the column misses.
    """
    unit = np.int64(1) << s
    left = cols * unit
    dx = np.maximum(np.maximum(left - cx, cx - left - unit), 0)
    reach = rr * rr - dx * dx
    hit = reach >= 0
    h = isqrt_floor(np.where(hit, reach, 0))
    jlo = -((-(cy - h)) // unit) - 1
    jhi = (cy + h) // unit
    return np.where(hit, jlo, 1), np.where(hit, jhi, 0)


class BucketIndex:
    """Cells of one dyadic level, indexed for column range counts.

    Small bounding boxes get a dense prefix table (O(1) per column query);
    larger ones fall back to a sorted key array and binary search.
    """

    def __init__(self, k: int, cells: np.ndarray):
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        if len(cells):
            cells = np.unique(cells, axis=0)
        self.k = k
        self.cells = cells
        self.n = len(cells)
        if self.n == 0:
            self.i0 = self.j0 = 0
            self.width = self.height = 1
        else:
            self.i0, self.j0 = (int(v) for v in cells.min(axis=0))
            self.width = int(cells[:, 0].max()) - self.i0 + 1
            self.height = int(cells[:, 1].max()) - self.j0 + 1
        ci = cells[:, 0] - self.i0
        cj = cells[:, 1] - self.j0
        self.keys = ci * self.height + cj
        self.prefix = None
        if self.width * (self.height + 1) <= DENSE_LIMIT:
            occ = np.zeros((self.width, self.height + 1), dtype=np.int32)
            occ[ci, cj + 1] = 1
            self.prefix = np.cumsum(occ, axis=1, dtype=np.int32)

    @property
    def delta(self) -> float:
        return 2.0 ** -self.k

    def lookup(self, i: int, j: int) -> int:
        """Position of cell ``(i, j)`` in ``cells``, or -1."""
        a, b = i - self.i0, j - self.j0
        if not (0 <= a < self.width and 0 <= b < self.height):
            return -1
        key = a * self.height + b
        pos = int(np.searchsorted(self.keys, key))
        return pos if pos < self.n and self.keys[pos] == key else -1

    def column_counts(self, cols, jlo, jhi) -> np.ndarray:
        """Number of indexed cells in column ``cols`` with row in ``[jlo, jhi]``."""
        a = np.asarray(cols, dtype=np.int64) - self.i0
        lo = np.clip(np.asarray(jlo, dtype=np.int64) - self.j0, 0, self.height)
        hi = np.clip(np.asarray(jhi, dtype=np.int64) - self.j0 + 1, 0, self.height)
        ok = (a >= 0) & (a < self.width) & (hi > lo)
        a = np.where(ok, a, 0)
        hi = np.where(ok, hi, lo)
        if self.prefix is not None:
            return self.prefix[a, hi].astype(np.int64) - self.prefix[a, lo]
        base = a * self.height
        return np.searchsorted(self.keys, base + hi) - np.searchsorted(self.keys, base + lo)

    def count_many(self, cx, cy, rr, s: int) -> np.ndarray:
        """Exact closed-ball counts for integer centres/radii in ``2**-s`` cell units."""
        cx = np.asarray(cx, dtype=np.int64)
        cy = np.asarray(cy, dtype=np.int64)
        rr = np.broadcast_to(np.asarray(rr, dtype=np.int64), cx.shape)
        out = np.zeros(len(cx), dtype=np.int64)
        if self.n == 0 or len(cx) == 0:
            return out
        unit = 1 << s
        reach = int(rr.max()) // unit + 2
        width = 2 * reach + 1
        step = max(1, CHUNK // width)
        span = np.arange(-reach, reach + 1, dtype=np.int64)
        for lo in range(0, len(cx), step):
            sl = slice(lo, lo + step)
            cols = (cx[sl] // unit)[:, None] + span[None, :]
            jlo, jhi = ball_rows(cols, cx[sl, None], cy[sl, None], rr[sl, None], s)
            out[sl] = self.column_counts(cols, jlo, jhi).sum(axis=1)
        return out

    def count_ball(self, x, r: float) -> int:
        return count_ball(self, x, r)


def build_index(squares, delta: float | None = None) -> BucketIndex:
    """Index a list of :class:`DyadicSquare` (or an ``(N, 2)`` cell array at ``delta``)."""
    if isinstance(squares, np.ndarray):
        if delta is None:
            raise ValueError("a bare cell array needs delta")
        return BucketIndex(_level(delta), squares)
    squares = list(squares)
    levels = {q.k for q in squares}
    if len(levels) > 1:
        raise MixedScales(f"squares at levels {sorted(levels)}")
    if delta is not None:
        k = _level(delta)
        if levels and levels != {k}:
            raise MixedScales(f"squares at level {levels.pop()} but delta=2^-{k}")
    elif levels:
        k = levels.pop()
    else:
        raise ValueError("empty square list needs delta")
    return BucketIndex(k, np.asarray([(q.i, q.j) for q in squares], dtype=np.int64).reshape(-1, 2))


def _level(delta: float) -> int:
    k = round(-math.log2(delta))
    if 2.0 ** -k != delta:
        raise ValueError(f"delta={delta} is not dyadic")
    return k


def _exact_sub_units(x, r, k: int):
    """Express a centre and radius as integers in ``2**-(k+s)`` units, choosing ``s``."""
    vals = [Fraction(x[0]) * 2 ** k, Fraction(x[1]) * 2 ** k, Fraction(r) * 2 ** k]
    s = max(0, max(v.denominator.bit_length() - 1 for v in vals))
    return [int(v * 2 ** s) for v in vals], s


def count_ball(index, x, r: float) -> int:
    """Exact number of indexed squares whose closed square meets ``B(x, r)``.

    Arbitrary float inputs are handled with Python integers, so there is no
    rounding anywhere; only columns within ``ceil(r / delta) + 1`` of ``x`` are visited.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if isinstance(index, StickIndex):
        (cx, cy, rr), s = _exact_sub_units(x, r, index.k)
        if s <= SUB_BITS:
            sh = SUB_BITS - s
            return int(index.count_many([cx << sh], [cy << sh], rr << sh, SUB_BITS)[0])
        raise ValueError("implicit index needs centres on the 2^-4 sub-grid")
    (cx, cy, rr), s = _exact_sub_units(x, r, index.k)
    unit = 1 << s
    total = 0
    for c in range(cx // unit - rr // unit - 2, cx // unit + rr // unit + 3):
        left = c * unit
        dx = max(left - cx, cx - left - unit, 0)
        reach = rr * rr - dx * dx
        if reach < 0:
            continue
        h = math.isqrt(reach)
        jlo = -((h - cy) // unit) - 1
        jhi = (cy + h) // unit
        total += int(index.column_counts([c], [jlo], [jhi])[0])
    return total


# ---------------------------------------------------------------------------
# implicit index over pairwise disjoint sticks
# ---------------------------------------------------------------------------


class StickIndex:
    """Ball counts for a union of pairwise disjoint sticks, without listing cells.

    Sticks wholly inside a ball contribute their closed-form size, sticks
    crossing the boundary are split into columns whose stick portion lies
    inside the ball (summed in closed form) and a few boundary columns that
    are intersected with the ball's row ranges exactly.
    """

    def __init__(self, arr: Arrangement):
        if not arr.disjoint:
            raise ValueError("implicit counting needs pairwise disjoint sticks")
        self.arr = arr
        self.k = arr.k
        self.fbits = arr.fbits
        self.vx = arr.vertex[:, 0].copy()
        self.vy = arr.vertex[:, 1].copy()
        self.px, self.py, self.fx, self.fy = normalize_offsets(arr.offset[:, 0], arr.offset[:, 1])
        self.last = last_column(self.px, self.fbits)
        self.size = arr.stick_sizes()
        self.n = int(self.size.sum())
        scale = 2.0 ** -self.fbits
        self.ex = self.px * scale
        self.ey = self.py * scale
        # bucket grid over stick bounding boxes
        sx = np.where(self.fx, -self.ex, self.ex)
        sy = np.where(self.fy, -self.ey, self.ey)
        self.bucket = max(8, int(math.ceil(max(self.ex.max(initial=1), self.ey.max(initial=1)))))
        b = self.bucket
        x0 = np.floor((self.vx + np.minimum(sx, 0) - 2) / b).astype(np.int64)
        x1 = np.floor((self.vx + np.maximum(sx, 0) + 2) / b).astype(np.int64)
        y0 = np.floor((self.vy + np.minimum(sy, 0) - 2) / b).astype(np.int64)
        y1 = np.floor((self.vy + np.maximum(sy, 0) + 2) / b).astype(np.int64)
        self.bx0, self.by0 = int(x0.min(initial=0)), int(y0.min(initial=0))
        self.gw = int(x1.max(initial=0)) - self.bx0 + 1
        self.gh = int(y1.max(initial=0)) - self.by0 + 1
        owners, keys = [], []
        for dx in range(int((x1 - x0).max(initial=0)) + 1):
            for dy in range(int((y1 - y0).max(initial=0)) + 1):
                ok = (x0 + dx <= x1) & (y0 + dy <= y1)
                ids = np.nonzero(ok)[0]
                owners.append(ids)
                keys.append((x0[ids] + dx - self.bx0) * self.gh + (y0[ids] + dy - self.by0))
        owners = np.concatenate(owners) if owners else np.zeros(0, dtype=np.int64)
        keys = np.concatenate(keys) if keys else np.zeros(0, dtype=np.int64)
        order = np.argsort(keys, kind="stable")
        self.bucket_sticks = owners[order]
        self.bucket_ptr = np.searchsorted(keys[order], np.arange(self.gw * self.gh + 1))

    @property
    def delta(self) -> float:
        return 2.0 ** -self.k

    def candidates(self, x: float, y: float, rad: float) -> np.ndarray:
        b = self.bucket
        ax0 = max(int(math.floor((x - rad) / b)) - self.bx0, 0)
        ax1 = min(int(math.floor((x + rad) / b)) - self.bx0, self.gw - 1)
        ay0 = max(int(math.floor((y - rad) / b)) - self.by0, 0)
        ay1 = min(int(math.floor((y + rad) / b)) - self.by0, self.gh - 1)
        if ax0 > ax1 or ay0 > ay1:
            return np.zeros(0, dtype=np.int64)
        if (ax1 - ax0 + 1) * (ay1 - ay0 + 1) * 4 >= self.gw * self.gh:
            return np.arange(len(self.size))
        parts = []
        for a in range(ax0, ax1 + 1):
            lo = self.bucket_ptr[a * self.gh + ay0]
            hi = self.bucket_ptr[a * self.gh + ay1 + 1]
            parts.append(self.bucket_sticks[lo:hi])
        return np.unique(np.concatenate(parts))

    def count_many(self, cx, cy, rr, s: int) -> np.ndarray:
        cx = np.atleast_1d(np.asarray(cx, dtype=np.int64))
        cy = np.atleast_1d(np.asarray(cy, dtype=np.int64))
        rr = np.broadcast_to(np.asarray(rr, dtype=np.int64), cx.shape)
        return np.array([self._count_one(int(a), int(b), int(c), s) for a, b, c in zip(cx, cy, rr)], dtype=np.int64)

    def _count_one(self, cx: int, cy: int, rr: int, s: int) -> int:
        unit = 1 << s
        x, y, rho = cx / unit, cy / unit, rr / unit
        ids = self.candidates(x, y, rho + 2.0)
        if len(ids) == 0:
            return 0
        tol = 1e-6 * (1.0 + rho)
        # centre in each stick's normalised frame (cell units, anchor at 0)
        qx = x - self.vx[ids]
        qy = y - self.vy[ids]
        qx = np.where(self.fx[ids], -qx, qx)
        qy = np.where(self.fy[ids], -qy, qy)
        ex, ey = self.ex[ids], self.ey[ids]
        len2 = ex * ex + ey * ey
        tau = np.clip((qx * ex + qy * ey) / np.where(len2 > 0, len2, 1.0), 0.0, 1.0)
        dmin = np.hypot(qx - tau * ex, qy - tau * ey)
        dmax = np.maximum(np.hypot(qx, qy), np.hypot(qx - ex, qy - ey))
        root2 = math.sqrt(2.0)
        inside = dmax + root2 + tol <= rho
        border = ~inside & (dmin <= rho + root2 + tol)
        total = int(self.size[ids[inside]].sum())
        if not border.any():
            return total
        sel = ids[border]
        qx, qy, ex, ey, len2 = qx[border], qy[border], ex[border], ey[border], len2[border]
        px, py, last = self.px[sel], self.py[sel], self.last[sel]

        def chord(radius):
            bq = qx * ex + qy * ey
            cq = qx * qx + qy * qy - radius * radius
            disc = bq * bq - len2 * cq
            ok = (disc >= 0) & (len2 > 0)
            sq = np.sqrt(np.where(ok, disc, 0.0))
            t1 = np.clip((bq - sq) / np.where(len2 > 0, len2, 1.0), 0.0, 1.0)
            t2 = np.clip((bq + sq) / np.where(len2 > 0, len2, 1.0), 0.0, 1.0)
            return ok & (t2 >= t1), t1 * ex, t2 * ex

        ok_in, xa, xb = chord(max(rho - tol, 0.0))
        ok_out, xe1, xe2 = chord(rho + root2 + tol)
        ok_in &= ex > 0
        c1 = np.where(xa <= 0, -1, np.ceil(xa)).astype(np.int64)
        c2 = np.where(ex <= xb, last, np.floor(xb) - 1).astype(np.int64)
        c2 = np.minimum(c2, last)
        # double-check the extreme points of the full block in floating point with margin
        lx = np.maximum(c1, 0).astype(np.float64)
        rx = np.minimum(c2 + 1.0, ex)
        slope = np.where(ex > 0, ey / np.where(ex > 0, ex, 1.0), 0.0)
        dl = np.hypot(lx - qx, slope * lx - qy)
        dr = np.hypot(rx - qx, slope * rx - qy)
        full = ok_in & (c1 <= c2) & (dl <= rho - tol) & (dr <= rho - tol)
        c1 = np.where(full, c1, 0)
        c2 = np.where(full, c2, -1)
        total += int(column_range_count(px, py, self.fbits, c1, c2).sum())
        e1 = np.clip(np.ceil(xe1) - 1, -1, last).astype(np.int64)
        e2 = np.clip(np.floor(xe2), -1, last).astype(np.int64)
        e1 = np.where(ex > 0, e1, -1)
        e2 = np.where(ex > 0, e2, np.minimum(last, 0))
        e2 = np.where(ok_out, e2, e1 - 1)
        # explicit columns: [e1, c1-1] and [c2+1, e2] when a full block exists, else [e1, e2]
        lo_a, hi_a = e1, np.where(full, np.minimum(c1 - 1, e2), e2)
        lo_b, hi_b = np.where(full, np.maximum(c2 + 1, e1), 0), np.where(full, e2, -1)
        total += self._explicit(sel, lo_a, hi_a, cx, cy, rr, s)
        total += self._explicit(sel, lo_b, hi_b, cx, cy, rr, s)
        return total

    def _explicit(self, sel, lo, hi, cx, cy, rr, s) -> int:
        n = np.maximum(hi - lo + 1, 0)
        if n.sum() == 0:
            return 0
        rep = np.repeat(np.arange(len(sel)), n)
        start = np.cumsum(n) - n
        col = np.arange(int(n.sum()), dtype=np.int64) - np.repeat(start, n) + np.repeat(lo, n)
        sid = sel[rep]
        unit = np.int64(1) << s
        qx = cx - self.vx[sid] * unit
        qy = cy - self.vy[sid] * unit
        qx = np.where(self.fx[sid], -qx, qx)
        qy = np.where(self.fy[sid], -qy, qy)
        slo, shi = column_rows(self.px[sid], self.py[sid], self.fbits, col)
        blo, bhi = ball_rows(col, qx, qy, rr, s)
        return int(np.maximum(np.minimum(shi, bhi) - np.maximum(slo, blo) + 1, 0).sum())

    def count_ball(self, x, r: float) -> int:
        return count_ball(self, x, r)


def arrangement_index(arr: Arrangement):
    """Materialised arrangements get a :class:`BucketIndex`, large disjoint ones a :class:`StickIndex`."""
    if arr.materialized:
        return BucketIndex(arr.k, arr.pset)
    return StickIndex(arr)


# ---------------------------------------------------------------------------
# (delta, t) constant estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingPolicy:
    """Which centres ``verify_kt`` evaluates.

    ``thin``: at radius ``rho`` only one centre per block of side ``rho/thin``
    is used (one per cell below ``thin`` cells).  Implicit indexes cannot list
    every cell, so they use ``stick_samples`` sticks with three centres each
    and at most ``implicit_extra`` random centres.
    """

    extra: int = 10_000
    seed: int = 0xF05
    thin: int = 16
    stick_samples: int = 128
    implicit_extra: int = 1_000


@dataclass
class RadiusRow:
    r: float
    max_ratio: float
    witness_x: float
    witness_y: float
    witness_count: int


@dataclass
class KTReport:
    delta: float
    Delta: float
    t: float
    C_star: float
    witness: tuple[float, float, float, int]
    samples: int
    table: list[RadiusRow] = field(default_factory=list)
    certified_c: float | None = None
    exhaustive: bool = True


def overlap_histogram(arr: Arrangement) -> dict[int, int]:
    if arr.multiplicity is None:
        if arr.disjoint:
            return {1: int(arr.pset_size)}
        raise ValueError("multiplicities unknown for this arrangement")
    return dict(sorted(Counter(arr.multiplicity.tolist()).items()))


def _random_centres(n: int, seed: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    side = 1 << (k + SUB_BITS)
    pts = rng.integers(0, side, size=(n, 2), dtype=np.int64)
    return pts[:, 0], pts[:, 1]


def _stick_centres(index: StickIndex, count: int) -> tuple[np.ndarray, np.ndarray]:
    arr = index.arr
    ids = np.unique(np.linspace(0, arr.n_sticks - 1, min(count, arr.n_sticks)).round().astype(np.int64))
    a, b = arr.endpoints()
    pts = []
    for frac in (0.02, 0.5, 0.98):
        p = a[ids] + frac * (b[ids] - a[ids])
        pts.append(np.floor(p / arr.delta).astype(np.int64))
    cells = np.unique(np.concatenate(pts), axis=0)
    half = 1 << (SUB_BITS - 1)
    return (cells[:, 0] << SUB_BITS) + half, (cells[:, 1] << SUB_BITS) + half


def verify_kt(index, delta: float, Delta: float, t: float, policy: SamplingPolicy = SamplingPolicy()) -> KTReport:
    """Largest observed ``|P cap B(x, r)| / (r/delta)^t`` over dyadic radii in ``[delta, Delta]``.

    With a :class:`BucketIndex` every square centre is used (thinned at large
    radii), and radii continue up to ``3 Delta`` so that ``certified_c`` bounds
    the ratio over *all* balls: any ball ``B(x, r)`` meeting the set lies in
    a ball of radius below ``6 r`` around an evaluated centre.
    """
    if not delta <= Delta <= 1.0:
        raise ValueError("need delta <= Delta <= 1")
    k = index.k
    s = SUB_BITS
    half = 1 << (s - 1)
    jmax = int(math.floor(math.log2(Delta / delta) + 1e-12))
    exhaustive = isinstance(index, BucketIndex)
    if exhaustive:
        jext = max(jmax, math.ceil(math.log2(3.0 * Delta / delta) - 1e-12))
        cells = index.cells
        ex, ey = _random_centres(policy.extra, policy.seed, k)
    else:
        jext = jmax
        sx, sy = _stick_centres(index, policy.stick_samples)
        ex, ey = _random_centres(min(policy.extra, policy.implicit_extra), policy.seed, k)
    table: list[RadiusRow] = []
    best = (0.0, (0.0, 0.0, delta, 0))
    samples = 0
    c_ext = 0.0
    total = index.n
    for j in range(jext + 1):
        rr = np.int64(1) << (j + s)
        if exhaustive:
            blk = max(1, (1 << j) // policy.thin)
            if blk > 1 and len(cells):
                key = (cells[:, 0] // blk) * (1 << 40) + cells[:, 1] // blk
                _, first = np.unique(key, return_index=True)
                use = cells[np.sort(first)]
            else:
                use = cells
            cx = np.concatenate([(use[:, 0] << s) + half, ex])
            cy = np.concatenate([(use[:, 1] << s) + half, ey])
        else:
            cx = np.concatenate([sx, ex])
            cy = np.concatenate([sy, ey])
        if j > jmax and 2.0 ** j >= 2.0 * 2.0 ** k:
            counts = np.full(len(cx), total, dtype=np.int64)
        else:
            counts = index.count_many(cx, cy, rr, s)
        ratios = counts / float(2 ** j) ** t
        w = int(np.argmax(ratios)) if len(ratios) else 0
        top = float(ratios[w]) if len(ratios) else 0.0
        c_ext = max(c_ext, top)
        if j > jmax:
            continue
        samples += len(cx)
        wx = float(cx[w]) * 2.0 ** -(k + s) if len(cx) else 0.0
        wy = float(cy[w]) * 2.0 ** -(k + s) if len(cy) else 0.0
        r = delta * 2.0 ** j
        wc = int(counts[w]) if len(counts) else 0
        table.append(RadiusRow(r, top, wx, wy, wc))
        if top > best[0]:
            best = (top, (wx, wy, r, wc))
    certified = 6.0 ** t * c_ext if exhaustive else None
    return KTReport(delta, Delta, t, best[0], best[1], samples, table, certified, exhaustive)
