"""Dyadic grid geometry.

Squares are closed for intersection purposes, segments are closed, balls are
closed.  All grid predicates are decided exactly: floats are dyadic rationals,
so they are lifted to ``Fraction`` or to scaled integers before comparison.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np


class DyadicSquare(NamedTuple):
    """The cell ``[i, i+1) x [j, j+1)`` scaled by ``2**-k``."""

    k: int
    i: int
    j: int

    @property
    def side(self) -> float:
        return 2.0 ** -self.k

    @property
    def center(self) -> tuple[float, float]:
        s = self.side
        return ((self.i + 0.5) * s, (self.j + 0.5) * s)

    def corners(self) -> list[tuple[float, float]]:
        s = self.side
        x0, y0 = self.i * s, self.j * s
        return [(x0, y0), (x0 + s, y0), (x0, y0 + s), (x0 + s, y0 + s)]


class Segment(NamedTuple):
    a: tuple[float, float]
    b: tuple[float, float]

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


def scale(k: int) -> float:
    """Return ``2**-k`` after checking that ``k`` is a usable level."""
    if int(k) != k or k < 1:
        raise ValueError(f"scale exponent must be an integer >= 1, got {k!r}")
    return 2.0 ** -int(k)


def level_of(delta: float) -> int:
    """Inverse of :func:`scale`; rejects anything that is not ``2**-k``."""
    mant, exp = math.frexp(delta)
    if mant != 0.5 or exp > 0:
        raise ValueError(f"{delta!r} is not a dyadic scale 2**-k with k >= 1")
    return 1 - exp


def unit(phi: float) -> tuple[float, float]:
    return (math.cos(phi), math.sin(phi))


def normal(phi: float) -> tuple[float, float]:
    return (-math.sin(phi), math.cos(phi))


def project_scalar(x, phi: float) -> float:
    s, c = math.sin(phi), math.cos(phi)
    return -s * x[0] + c * x[1]


def project_square(q: DyadicSquare, phi: float) -> tuple[float, float]:
    """Exact extent of the projection of the closed square, as ``(lo, hi)``."""
    vals = [project_scalar(p, phi) for p in q.corners()]
    return (min(vals), max(vals))


def square_ball_intersects(q: DyadicSquare, x, r: float) -> bool:
    """Closed square meets closed ball ``B(x, r)``, decided in exact arithmetic."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    s = Fraction(1, 2 ** q.k)
    lo_x, lo_y = q.i * s, q.j * s
    px, py = Fraction(x[0]), Fraction(x[1])
    dx = max(lo_x - px, Fraction(0), px - lo_x - s)
    dy = max(lo_y - py, Fraction(0), py - lo_y - s)
    return dx * dx + dy * dy <= Fraction(r) ** 2


def _ceil(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def _floor(q: Fraction) -> int:
    return q.numerator // q.denominator


def supercover(seg: Segment, delta: float, clip: bool = True) -> list[DyadicSquare]:
    """Every dyadic square of side ``delta`` whose closure meets the closed segment.

    Works column by column: over the x-extent of one column the segment covers
    a y-interval, and the cells meeting it are the rows whose closed range
    overlaps that interval.  Exact for any float endpoints.  With ``clip`` only
    cells of the unit square are returned.
    """
    k = level_of(delta)
    inv = 2 ** k
    ax, ay = Fraction(seg.a[0]) * inv, Fraction(seg.a[1]) * inv
    bx, by = Fraction(seg.b[0]) * inv, Fraction(seg.b[1]) * inv
    if bx < ax:
        ax, ay, bx, by = bx, by, ax, ay
    out = []
    for c in range(_ceil(ax) - 1, _floor(bx) + 1):
        xl, xr = max(Fraction(c), ax), min(Fraction(c + 1), bx)
        if bx == ax:
            ylo, yhi = min(ay, by), max(ay, by)
        else:
            slope = (by - ay) / (bx - ax)
            y0, y1 = ay + slope * (xl - ax), ay + slope * (xr - ax)
            ylo, yhi = min(y0, y1), max(y0, y1)
        for j in range(_ceil(ylo) - 1, _floor(yhi) + 1):
            out.append(DyadicSquare(k, c, j))
    if clip:
        out = [q for q in out if 0 <= q.i < inv and 0 <= q.j < inv]
    return sorted(out)


# ---------------------------------------------------------------------------
# Vectorised rasterisation of anchored segments.
#
# A stick is stored as an integer grid vertex V (in cells) plus an offset P in
# fine units of 2**-F cells.  Reflecting so that P >= 0 componentwise keeps the
# grid invariant (the anchor is a vertex), and the closed supercover of the
# segment [0, P] is then a union of column intervals with integer bounds.
# ---------------------------------------------------------------------------


def fine_bits(cells_per_stick: float) -> int:
    """Fine-unit resolution that keeps ``Py * X`` products inside int64."""
    lb = math.ceil(math.log2(cells_per_stick + 2.0))
    return max(0, min(24, 30 - lb))


def normalize_offsets(px, py):
    """Reflect offsets into the first quadrant; returns ``(px, py, flip_x, flip_y)``."""
    px = np.asarray(px, dtype=np.int64)
    py = np.asarray(py, dtype=np.int64)
    fx = px < 0
    fy = py < 0
    return np.abs(px), np.abs(py), fx, fy


def last_column(px, fbits):
    return np.asarray(px, dtype=np.int64) >> fbits


def column_rows(px, py, fbits: int, col):
    """Row interval ``[jlo, jhi]`` of the normalized stick in column ``col``.

    All arguments broadcast; ``px, py >= 0`` and ``-1 <= col <= px >> fbits``.
    """
    px = np.asarray(px, dtype=np.int64)
    py = np.asarray(py, dtype=np.int64)
    col = np.asarray(col, dtype=np.int64)
    one = np.int64(1) << fbits
    xl = np.maximum(col * one, 0)
    xr = np.minimum((col + 1) * one, px)
    vertical = px == 0
    den = np.where(vertical, 1, px) << fbits
    jlo = -((-py * xl) // den) - 1
    jhi = (py * xr) // den
    jlo = np.where(vertical, -1, jlo)
    jhi = np.where(vertical, py >> fbits, jhi)
    return jlo, jhi


def multiples_in(lo, hi, q):
    """Number of multiples of ``q`` in ``[lo, hi]`` (zero when empty)."""
    n = hi // q - (lo - 1) // q
    return np.where(hi >= lo, n, 0)


def column_range_count(px, py, fbits: int, c1, c2):
    """Cells of the normalized stick in columns ``c1..c2`` (inclusive).

    Uses the telescoping identity: consecutive columns share a boundary row
    unless the segment crosses that vertical grid line at an integer height.
    """
    px = np.asarray(px, dtype=np.int64)
    py = np.asarray(py, dtype=np.int64)
    c1 = np.asarray(c1, dtype=np.int64)
    c2 = np.asarray(c2, dtype=np.int64)
    jlo1, _ = column_rows(px, py, fbits, c1)
    _, jhi2 = column_rows(px, py, fbits, c2)
    ncols = c2 - c1 + 1
    g = np.gcd(np.where(px == 0, 1, px), py)
    q = np.where(px == 0, 1, px // np.maximum(g, 1))
    z = multiples_in(c1 + 1, c2, q)
    total = jhi2 - jlo1 + ncols + z
    # a vertical stick has two identical full-height columns
    vert = (jhi2 - jlo1 + 1) * ncols
    total = np.where(px == 0, vert, total)
    return np.where(c2 >= c1, total, 0)


def stick_cell_count(px, py, fbits: int):
    """Closed-form size of the supercover of ``[0, P]``."""
    px, py, _, _ = normalize_offsets(px, py)
    return column_range_count(px, py, fbits, np.full_like(px, -1), last_column(px, fbits))


def stick_cells(vx, vy, px, py, fbits: int):
    """Enumerate supercover cells of many anchored sticks at once.

    Returns ``(owner, i, j)`` arrays; ``owner`` indexes the input sticks.
    """
    vx = np.asarray(vx, dtype=np.int64)
    vy = np.asarray(vy, dtype=np.int64)
    apx, apy, fx, fy = normalize_offsets(px, py)
    ncol = last_column(apx, fbits) + 2
    owner = np.repeat(np.arange(len(apx)), ncol)
    start = np.cumsum(ncol) - ncol
    col = np.arange(int(ncol.sum()), dtype=np.int64) - np.repeat(start, ncol) - 1
    jlo, jhi = column_rows(apx[owner], apy[owner], fbits, col)
    nrow = jhi - jlo + 1
    owner2 = np.repeat(owner, nrow)
    rstart = np.cumsum(nrow) - nrow
    row = np.arange(int(nrow.sum()), dtype=np.int64) - np.repeat(rstart, nrow) + np.repeat(jlo, nrow)
    col2 = np.repeat(col, nrow)
    col2 = np.where(fx[owner2], -col2 - 1, col2)
    row = np.where(fy[owner2], -row - 1, row)
    return owner2, col2 + vx[owner2], row + vy[owner2]
