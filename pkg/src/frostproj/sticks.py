"""Stick arrangements: direction net, disc packing and stick placement.

Every stick is stored exactly: an integer grid vertex (the snapped anchor) plus
an integer offset in fine units of ``2**-fbits`` cells.  Squares are derived
from that data with exact integer arithmetic, so two builds with the same
``(t, k)`` agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import RegimeMismatch, ScaleTooCoarse, TooLarge
from .geometry import (
    DyadicSquare,
    Segment,
    column_range_count,
    fine_bits,
    last_column,
    multiples_in,
    normalize_offsets,
    scale,
    stick_cell_count,
    stick_cells,
)

OVERLAP_CAP = 8
# above this many stick cells the square set is kept implicit
MATERIALIZE_LIMIT = 30_000_000
MIN_LEVEL = 6
# the grid-lattice fallback is only used where one stick per site is the
# intended construction
LATTICE_MAX_T = 4.0 / 3.0 + 1e-12


def stick_length(delta: float, t: float) -> float:
    return delta ** (1.0 - t / 2.0)


def net_size(delta: float, t: float) -> int:
    return math.ceil(math.pi * delta ** (-t / 2.0))


def direction_net(delta: float, t: float) -> np.ndarray:
    """Angles ``(i + 1/2) pi / m`` on the half circle, ``m = ceil(pi delta^(-t/2))``."""
    if not 1.0 <= t < 2.0:
        raise ValueError(f"t must lie in [1, 2), got {t}")
    if delta > 0.25:
        raise ValueError("direction net needs delta <= 1/4")
    m = net_size(delta, t)
    return (np.arange(m) + 0.5) * (math.pi / m)


def min_level(t: float) -> int:
    """Smallest k for which the disc lattice fits at exponent t."""
    return max(MIN_LEVEL, math.ceil(math.log2(21.0) / (1.0 - t / 2.0) - 1e-12))


@dataclass(frozen=True)
class DiscLayout:
    centers: np.ndarray
    radius: float
    spacing: float
    per_axis: int

    @property
    def n(self) -> int:
        return len(self.centers)


def build_discs(delta: float, t: float) -> DiscLayout:
    """Square lattice of discs of radius ``10 ell`` with centre spacing ``21 ell``.

    The lattice is centred and kept ``2 delta`` away from the boundary, so that
    snapped sticks never leave the unit square.
    """
    ell = stick_length(delta, t)
    s = 21.0 * ell
    if s > 1.0:
        raise ScaleTooCoarse(
            f"disc spacing 21*delta^(1-t/2) = {s:.4g} exceeds 1 at t={t}; "
            f"use delta <= 2^-{min_level(t)}"
        )
    r = 10.0 * ell
    free = 1.0 - 2.0 * r - 4.0 * delta
    g = int(math.floor(free / s)) + 1 if free >= 0 else 1
    off = r + 2.0 * delta + (free - (g - 1) * s) / 2.0
    coords = off + s * np.arange(g)
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    centers = np.column_stack([xx.ravel(), yy.ravel()])
    return DiscLayout(centers, r, s, g)


@dataclass(frozen=True)
class Stick:
    id: int
    dir_index: int
    segment: Segment
    anchor: tuple[float, float] | None
    disc_id: int | None
    k: int
    vertex: tuple[int, int]
    offset: tuple[int, int]
    fbits: int

    @property
    def squares(self) -> list[DyadicSquare]:
        _, i, j = stick_cells([self.vertex[0]], [self.vertex[1]], [self.offset[0]], [self.offset[1]], self.fbits)
        order = np.lexsort((j, i))
        return [DyadicSquare(self.k, int(a), int(b)) for a, b in zip(i[order], j[order])]


@dataclass
class Arrangement:
    """A stick arrangement and the square set it covers.

    ``pset`` is an ``(N, 2)`` array of cell indices sorted by ``(i, j)``, or
    ``None`` when the set is too large to hold; in that case the sticks are
    certified pairwise disjoint and ``pset_size`` is exact.
    """

    t: float
    k: int
    regime: str
    directions: np.ndarray
    dir_index: np.ndarray
    vertex: np.ndarray
    offset: np.ndarray
    fbits: int
    head_at_vertex: bool
    disc_id: np.ndarray
    anchors: np.ndarray | None = None
    discs: DiscLayout | None = None
    pset: np.ndarray | None = None
    multiplicity: np.ndarray | None = None
    pset_size: int = 0
    disjoint: bool = False
    _sticks: list | None = field(default=None, repr=False)

    @property
    def delta(self) -> float:
        return 2.0 ** -self.k

    @property
    def ell(self) -> float:
        return stick_length(self.delta, self.t)

    @property
    def m(self) -> int:
        return len(self.directions)

    @property
    def n_sticks(self) -> int:
        return len(self.dir_index)

    @property
    def materialized(self) -> bool:
        return self.pset is not None

    @property
    def max_multiplicity(self) -> int:
        if self.multiplicity is None:
            return 1 if self.disjoint else -1
        return int(self.multiplicity.max(initial=0))

    def stick_sizes(self) -> np.ndarray:
        return stick_cell_count(self.offset[:, 0], self.offset[:, 1], self.fbits)

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Float segment endpoints ``(a, b)``, each of shape ``(n, 2)``."""
        d = self.delta
        v = self.vertex * d
        w = v + self.offset * (d / 2.0 ** self.fbits)
        return (w, v) if self.head_at_vertex else (v, w)

    @property
    def sticks(self) -> list[Stick]:
        if self._sticks is None:
            a, b = self.endpoints()
            out = []
            for s in range(self.n_sticks):
                anchor = None if self.anchors is None else (float(self.anchors[s, 0]), float(self.anchors[s, 1]))
                disc = int(self.disc_id[s])
                out.append(Stick(
                    id=s,
                    dir_index=int(self.dir_index[s]),
                    segment=Segment((float(a[s, 0]), float(a[s, 1])), (float(b[s, 0]), float(b[s, 1]))),
                    anchor=anchor,
                    disc_id=None if disc < 0 else disc,
                    k=self.k,
                    vertex=(int(self.vertex[s, 0]), int(self.vertex[s, 1])),
                    offset=(int(self.offset[s, 0]), int(self.offset[s, 1])),
                    fbits=self.fbits,
                ))
            self._sticks = out
        return self._sticks

    def stick_squares(self, ids) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cells of the given sticks as ``(owner, i, j)``; ``owner`` indexes ``ids``."""
        ids = np.atleast_1d(np.asarray(ids, dtype=np.int64))
        return stick_cells(self.vertex[ids, 0], self.vertex[ids, 1], self.offset[ids, 0], self.offset[ids, 1], self.fbits)

    def pset_squares(self) -> list[DyadicSquare]:
        if self.pset is None:
            raise TooLarge(f"square set of {self.pset_size} cells is not materialized")
        return [DyadicSquare(self.k, int(i), int(j)) for i, j in self.pset]


def _quantize(vec: np.ndarray, fbits: int, cells: float) -> np.ndarray:
    return np.rint(vec * (cells * 2.0 ** fbits)).astype(np.int64)


def _avoid_vertices(offset: np.ndarray, fbits: int) -> np.ndarray:
    """Nudge offsets by one fine unit until no stick passes through an interior vertex.

    A segment from a vertex with small-denominator slope crosses further grid
    vertices, and every such crossing adds two corner cells.  A one-unit nudge
    changes the direction by about ``2**-fbits / ell`` radians.
    """
    px, py, fx, fy = normalize_offsets(offset[:, 0], offset[:, 1])
    px = np.where(px == 0, 1, px)
    for _ in range(64):
        g = np.gcd(px, py)
        q = px // g
        bad = multiples_in(np.ones_like(px), last_column(px, fbits), q) > 0
        if not bad.any():
            break
        py = np.where(bad, py + 1, py)
    else:  # pragma: no cover - each step strictly increases the denominators hit
        raise RuntimeError("could not move sticks off grid vertices")
    return np.column_stack([np.where(fx, -px, px), np.where(fy, -py, py)])


def _finish(arr: Arrangement) -> Arrangement:
    """Compute the square set, or certify disjointness when it is too big."""
    sizes = arr.stick_sizes()
    total = int(sizes.sum())
    if total <= MATERIALIZE_LIMIT:
        owner, i, j = arr.stick_squares(np.arange(arr.n_sticks))
        side = np.int64(1) << (arr.k + 3)
        key = (i + 4) * side + (j + 4)
        uniq, counts = np.unique(key, return_counts=True)
        pset = np.column_stack([uniq // side - 4, uniq % side - 4])
        arr.pset = pset
        arr.multiplicity = counts
        arr.pset_size = len(pset)
        arr.disjoint = bool(counts.max(initial=1) == 1)
        return arr
    if not arr.disjoint:
        raise TooLarge(f"{total} stick cells and no disjointness certificate")
    arr.pset_size = total
    return arr


def _centred_sticks(sites: np.ndarray, phis: np.ndarray, delta: float, t: float):
    k = round(-math.log2(delta))
    ell = stick_length(delta, t)
    fb = fine_bits(ell / delta)
    u = np.column_stack([np.cos(phis), np.sin(phis)])
    start = sites - 0.5 * ell * u
    vertex = np.rint(start / delta).astype(np.int64)
    offset = _avoid_vertices(_quantize(u, fb, ell / delta), fb)
    return k, fb, vertex, offset


def arrange_low(delta: float, t: float, discs: DiscLayout | None = None) -> Arrangement:
    """One stick per disc on a sub-lattice of the disc lattice."""
    phis = direction_net(delta, t)
    m = len(phis)
    discs = build_discs(delta, t) if discs is None else discs
    g = discs.per_axis
    if m > discs.n:
        raise RegimeMismatch(f"{m} directions but only {discs.n} discs")
    stride = 1
    while (-(-g // (stride + 1))) ** 2 >= m:
        stride += 1
    keep = [b * g + a for b in range(0, g, stride) for a in range(0, g, stride)][:m]
    sites = discs.centers[keep]
    k, fb, vertex, offset = _centred_sticks(sites, phis, delta, t)
    arr = Arrangement(
        t=t, k=k, regime="low", directions=phis, dir_index=np.arange(m), vertex=vertex,
        offset=offset, fbits=fb, head_at_vertex=False, disc_id=np.asarray(keep, dtype=np.int64),
        discs=discs, disjoint=True,
    )
    return _finish(arr)


def _coprime_stride(m: int) -> int:
    s = max(1, round(m / ((1 + 5 ** 0.5) / 2)))
    while math.gcd(s, m) != 1:
        s += 1
    return s


def _point_segment(x, y, ax, ay, bx, by) -> float:
    dx, dy = bx - ax, by - ay
    n = dx * dx + dy * dy
    tau = 0.0 if n == 0 else min(1.0, max(0.0, ((x - ax) * dx + (y - ay) * dy) / n))
    return math.hypot(x - ax - tau * dx, y - ay - tau * dy)


def segment_distance(p1, q1, p2, q2) -> float:
    """Euclidean distance between closed segments ``[p1, q1]`` and ``[p2, q2]``."""
    (ax, ay), (bx, by), (cx, cy), (dx, dy) = p1, q1, p2, q2

    def orient(px, py, qx, qy, rx, ry):
        return (qx - px) * (ry - py) - (qy - py) * (rx - px)

    if (orient(ax, ay, bx, by, cx, cy) * orient(ax, ay, bx, by, dx, dy) < 0
            and orient(cx, cy, dx, dy, ax, ay) * orient(cx, cy, dx, dy, bx, by) < 0):
        return 0.0
    return min(_point_segment(ax, ay, cx, cy, dx, dy), _point_segment(bx, by, cx, cy, dx, dy),
               _point_segment(cx, cy, ax, ay, bx, by), _point_segment(dx, dy, ax, ay, bx, by))


def _min_shift(ha, hb, gap: float) -> float:
    """Smallest horizontal shift putting segment ``c +- hb`` at distance ``gap`` from ``0 +- ha``.

    The distance is convex in the shift and zero at shift 0, so bisection works.
    """
    ax, ay = float(ha[0]), float(ha[1])
    bx, by = float(hb[0]), float(hb[1])
    lo, hi = 0.0, abs(ax) + abs(bx) + gap * 1.001
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if segment_distance((-ax, -ay), (ax, ay), (mid - bx, -by), (mid + bx, by)) >= gap:
            hi = mid
        else:
            lo = mid
    return hi


def _shelf_layout(phis: np.ndarray, ell: float, gap: float, lo: float, hi: float) -> np.ndarray | None:
    """Centres for sticks packed on horizontal shelves, or ``None`` if they do not fit.

    Sticks go to shelves tallest first; within a shelf they are ordered by
    direction and pushed together until neighbours are ``gap`` apart.  The
    leftover room is then spread evenly in both axes.
    """
    avail = hi - lo
    half = 0.5 * ell * np.column_stack([np.cos(phis), np.sin(phis)])
    height = 2.0 * np.abs(half[:, 1]) + gap
    shifts: dict[tuple[int, int], float] = {}

    def shift(a, b):
        if (a, b) not in shifts:
            shifts[a, b] = _min_shift(half[a], half[b], gap)
        return shifts[a, b]

    def lay(ids):
        ids = sorted(ids, key=lambda i: phis[i])
        xs = [abs(half[ids[0], 0]) + gap / 2.0]
        for a, b in zip(ids, ids[1:]):
            xs.append(xs[-1] + shift(a, b))
        return ids, xs, xs[-1] + abs(half[ids[-1], 0]) + gap / 2.0

    order = [int(i) for i in np.lexsort((np.arange(len(phis)), -height))]
    shelves = []
    start = 0
    while start < len(order):
        # largest prefix of the remaining sticks that fits on one shelf
        if lay(order[start:start + 1])[2] > avail:
            return None
        good, bad = start + 1, len(order) + 1
        while bad - good > 1:
            mid = (good + bad) // 2
            if lay(order[start:mid])[2] <= avail:
                good = mid
            else:
                bad = mid
        shelves.append(lay(order[start:good]))
        start = good
    tall = [height[ids].max() for ids, _, _ in shelves]
    spare = avail - sum(tall)
    if spare < 0:
        return None
    vgap = spare / len(shelves)
    centers = np.empty((len(phis), 2))
    y = lo + vgap / 2.0
    for (ids, xs, w), th in zip(shelves, tall):
        extra = (avail - w) / len(ids)
        for q, (i, x) in enumerate(zip(ids, xs)):
            centers[i] = (lo + extra * (q + 0.5) + x, y + th / 2.0)
        y += th + vgap
    return centers


def arrange_packed(delta: float, t: float) -> Arrangement | None:
    """Pairwise disjoint sticks packed on shelves.

    Neighbouring sticks are kept ``3 delta`` apart, so after snapping any two
    sticks are more than ``delta sqrt 2`` apart and share no square.  Returns
    ``None`` when the shelves do not fit in the unit square.
    """
    phis = direction_net(delta, t)
    m = len(phis)
    ell = stick_length(delta, t)
    centers = _shelf_layout(phis, ell, 3.0 * delta, 2.0 * delta, 1.0 - 2.0 * delta)
    if centers is None:
        return None
    k, fb, vertex, offset = _centred_sticks(centers, phis, delta, t)
    arr = Arrangement(
        t=t, k=k, regime="low", directions=phis, dir_index=np.arange(m), vertex=vertex,
        offset=offset, fbits=fb, head_at_vertex=False, disc_id=np.full(m, -1, dtype=np.int64),
    )
    arr = _finish(arr)
    return arr if arr.disjoint else None


def arrange_lattice(delta: float, t: float) -> Arrangement:
    """One stick per site of a ``g x g`` grid filling the unit square.

    Used when the disc lattice cannot hold one disc per direction at this
    scale.  Directions are spread over the sites with a stride coprime to
    ``m`` so that neighbouring sites carry far-apart directions.
    """
    phis = direction_net(delta, t)
    m = len(phis)
    ell = stick_length(delta, t)
    free = 1.0 - ell - 4.0 * delta
    if free <= 0:
        raise ScaleTooCoarse(f"stick length {ell:.4g} leaves no room at delta={delta}")
    g = math.ceil(math.sqrt(m))
    sp = free / g
    coords = 0.5 * ell + 2.0 * delta + (np.arange(g) + 0.5) * sp
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    sites = np.column_stack([xx.ravel(), yy.ravel()])[:m]
    stride = _coprime_stride(m)
    order = (np.arange(m) * stride) % m
    # stick s sits at the site whose turn carries direction s
    site_of_dir = np.empty(m, dtype=np.int64)
    site_of_dir[order] = np.arange(m)
    k, fb, vertex, offset = _centred_sticks(sites[site_of_dir], phis, delta, t)
    arr = Arrangement(
        t=t, k=k, regime="low", directions=phis, dir_index=np.arange(m), vertex=vertex,
        offset=offset, fbits=fb, head_at_vertex=False, disc_id=np.full(m, -1, dtype=np.int64),
    )
    return _finish(arr)


def lattice_spacing(delta: float, t: float) -> float:
    m = net_size(delta, t)
    return (1.0 - stick_length(delta, t) - 4.0 * delta) / math.ceil(math.sqrt(m))


def arrange_high(delta: float, t: float, discs: DiscLayout | None = None) -> Arrangement:
    """Cartwheels: directions ``i = j mod n`` go to disc ``j``.

    Each stick ends at its anchor ``c_j + R u(phi_i)`` and points back towards
    the centre; the anchor is then snapped to the nearest grid vertex.
    """
    phis = direction_net(delta, t)
    m = len(phis)
    discs = build_discs(delta, t) if discs is None else discs
    n = discs.n
    if m < n:
        raise RegimeMismatch(f"{m} directions for {n} discs")
    k = round(-math.log2(delta))
    ell = stick_length(delta, t)
    fb = fine_bits(ell / delta)
    ids = np.arange(m)
    disc = ids % n
    u = np.column_stack([np.cos(phis), np.sin(phis)])
    anchors = discs.centers[disc] + discs.radius * u
    vertex = np.rint(anchors / delta).astype(np.int64)
    offset = _avoid_vertices(-_quantize(u, fb, ell / delta), fb)
    arr = Arrangement(
        t=t, k=k, regime="high", directions=phis, dir_index=ids, vertex=vertex, offset=offset,
        fbits=fb, head_at_vertex=True, disc_id=disc.astype(np.int64), anchors=anchors, discs=discs,
    )
    arr.disjoint = cartwheel_disjoint(arr)
    return _finish(arr)


def cartwheel_disjoint(arr: Arrangement) -> bool:
    """Sufficient condition for pairwise disjoint supercovers in a cartwheel.

    Two sticks of one disc whose directions differ by ``a`` are at distance at
    least ``2 (R - ell) sin(a/2)`` before snapping; snapping and quantisation
    move each by under ``delta``.  Cells shared by two sticks force a distance
    of at most ``delta sqrt 2``.  Distinct discs are ``ell`` apart.
    """
    if arr.discs is None:
        return False
    n = arr.discs.n
    gap = n * math.pi / arr.m
    if gap > math.pi / 2:
        return n == arr.m
    d = arr.delta
    sep = 2.0 * (arr.discs.radius - arr.ell) * math.sin(gap / 2.0) - 2.0 * d
    return sep > math.sqrt(2.0) * d * (1.0 + 1e-9) and arr.ell > 4 * d


def build_arrangement(delta: float, t: float) -> Arrangement:
    """Build the arrangement for ``(delta, t)``.

    Dispatch is on the direction count ``m`` against the disc count ``n``.
    When the disc lattice does not fit and ``t <= 4/3`` the sticks are
    shelf-packed without overlaps if possible, else placed one per site of a
    plain grid lattice.
    """
    if not 1.0 <= t < 2.0:
        raise ValueError(f"t must lie in [1, 2), got {t}")
    k = round(-math.log2(delta))
    scale(k)
    if 2.0 ** -k != delta:
        raise ValueError(f"delta={delta} is not dyadic")
    if k < MIN_LEVEL:
        raise ScaleTooCoarse(f"delta must be <= 2^-{MIN_LEVEL}, got 2^-{k}")
    try:
        discs = build_discs(delta, t)
    except ScaleTooCoarse:
        if t > LATTICE_MAX_T:
            raise
        packed = arrange_packed(delta, t)
        return packed if packed is not None else arrange_lattice(delta, t)
    if net_size(delta, t) <= discs.n:
        return arrange_low(delta, t, discs)
    return arrange_high(delta, t, discs)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

HEADER = "frostman-arrangement v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dump_arrangement(arr: Arrangement) -> str:
    head = f"{HEADER}; t={_fmt(arr.t)}; k={arr.k}; regime={arr.regime}"
    if not arr.materialized:
        head += "; pset=implicit"
    lines = [head]
    a, b = arr.endpoints()
    for s in range(arr.n_sticks):
        lines.append(
            f"stick {s} {int(arr.dir_index[s])} {_fmt(a[s, 0])} {_fmt(a[s, 1])} {_fmt(b[s, 0])} {_fmt(b[s, 1])}"
        )
    if arr.materialized:
        lines.extend(f"sq {int(i)} {int(j)}" for i, j in arr.pset)
    return "\n".join(lines) + "\n"


def _exact_units(x: str, per_unit: int) -> int:
    v = Fraction(float(x)) * per_unit
    if v.denominator != 1:
        raise ValueError(f"coordinate {x} is not on the stick grid")
    return int(v)


def load_arrangement(text: str) -> Arrangement:
    """Parse the text format.  Square lines, when present, are authoritative."""
    rows = text.splitlines()
    if not rows or not rows[0].startswith(HEADER):
        raise ValueError("missing arrangement header")
    meta = dict(p.strip().split("=", 1) for p in rows[0].split(";")[1:])
    t, k, regime = float(meta["t"]), int(meta["k"]), meta["regime"]
    delta = 2.0 ** -k
    fb = fine_bits(stick_length(delta, t) / delta)
    head_at_vertex = regime == "high"
    dirs, verts, offs, sq = [], [], [], []
    for line in rows[1:]:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "stick":
            ax, ay, bx, by = (_exact_units(p, 2 ** (k + fb)) for p in parts[3:7])
            if head_at_vertex:
                (vx, vy), (wx, wy) = (bx, by), (ax, ay)
            else:
                (vx, vy), (wx, wy) = (ax, ay), (bx, by)
            if vx % (1 << fb) or vy % (1 << fb):
                raise ValueError(f"stick {parts[1]} is not anchored at a grid vertex")
            dirs.append(int(parts[2]))
            verts.append((vx >> fb, vy >> fb))
            offs.append((wx - vx, wy - vy))
        elif parts[0] == "sq":
            sq.append((int(parts[1]), int(parts[2])))
        else:
            raise ValueError(f"unrecognised line: {line!r}")
    phis = direction_net(delta, t) if k >= 2 and 1.0 <= t < 2.0 else np.zeros(0)
    arr = Arrangement(
        t=t, k=k, regime=regime, directions=phis,
        dir_index=np.asarray(dirs, dtype=np.int64),
        vertex=np.asarray(verts, dtype=np.int64).reshape(-1, 2),
        offset=np.asarray(offs, dtype=np.int64).reshape(-1, 2),
        fbits=fb, head_at_vertex=head_at_vertex,
        disc_id=np.full(len(dirs), -1, dtype=np.int64),
    )
    if sq:
        pset = np.asarray(sorted(set(sq)), dtype=np.int64)
        arr.pset = pset
        arr.pset_size = len(pset)
        if arr.n_sticks:
            owner, i, j = arr.stick_squares(np.arange(arr.n_sticks))
            side = np.int64(1) << (k + 3)
            key = (i + 4) * side + (j + 4)
            uniq, counts = np.unique(key, return_counts=True)
            got = np.column_stack([uniq // side - 4, uniq % side - 4])
            if not np.array_equal(got, pset):
                raise ValueError("square lines disagree with the sticks")
            arr.multiplicity = counts
            arr.disjoint = bool(counts.max(initial=1) == 1)
        else:
            arr.multiplicity = np.ones(len(pset), dtype=np.int64)
        return arr
    if meta.get("pset") == "implicit":
        if regime == "high" and 1.0 <= t < 2.0:
            arr.discs = build_discs(delta, t)
            arr.disc_id = arr.dir_index % arr.discs.n
            arr.disjoint = cartwheel_disjoint(arr)
        return _finish(arr)
    arr.pset = np.zeros((0, 2), dtype=np.int64)
    arr.multiplicity = np.zeros(0, dtype=np.int64)
    return arr


def from_squares(k: int, t: float, squares) -> Arrangement:
    """A stick-free arrangement holding an explicit square set (test fixtures)."""
    pset = np.asarray(sorted(set(map(tuple, squares))), dtype=np.int64).reshape(-1, 2)
    return Arrangement(
        t=t, k=k, regime="low", directions=np.zeros(0), dir_index=np.zeros(0, dtype=np.int64),
        vertex=np.zeros((0, 2), dtype=np.int64), offset=np.zeros((0, 2), dtype=np.int64),
        fbits=0, head_at_vertex=False, disc_id=np.zeros(0, dtype=np.int64),
        pset=pset, multiplicity=np.ones(len(pset), dtype=np.int64), pset_size=len(pset),
    )
