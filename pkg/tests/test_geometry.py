import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frostproj.geometry import (
    DyadicSquare,
    Segment,
    level_of,
    normal,
    project_scalar,
    project_square,
    square_ball_intersects,
    stick_cells,
    stick_cell_count,
    supercover,
    unit,
)


def cell_scan(seg: Segment, delta: float) -> list[DyadicSquare]:
    """Every grid cell near the segment whose closure meets it, by exact clipping."""
    k = level_of(delta)
    (ax, ay), (bx, by) = seg
    ax, ay, bx, by = (Fraction(v) for v in (ax, ay, bx, by))
    d = Fraction(delta)
    out = []
    lo_i, hi_i = math.floor(min(ax, bx) / d) - 1, math.floor(max(ax, bx) / d) + 1
    lo_j, hi_j = math.floor(min(ay, by) / d) - 1, math.floor(max(ay, by) / d) + 1
    for i, j in product(range(lo_i, hi_i + 1), range(lo_j, hi_j + 1)):
        x0, x1, y0, y1 = i * d, (i + 1) * d, j * d, (j + 1) * d
        # Liang-Barsky on the closed square
        s0, s1 = Fraction(0), Fraction(1)
        ok = True
        for p, q in ((-(bx - ax), ax - x0), (bx - ax, x1 - ax), (-(by - ay), ay - y0), (by - ay, y1 - ay)):
            if p == 0:
                ok &= q >= 0
            elif p < 0:
                s0 = max(s0, q / p)
            else:
                s1 = min(s1, q / p)
        if ok and s0 <= s1:
            out.append(DyadicSquare(k, i, j))
    return sorted(out)


def test_supercover_inside_one_cell():
    assert supercover(Segment((0, 0), (0, 0.249)), 0.25) == [DyadicSquare(2, 0, 0)]


def test_supercover_horizontal():
    got = supercover(Segment((0.1, 0.1), (0.6, 0.1)), 0.25)
    assert [(q.i, q.j) for q in got] == [(0, 0), (1, 0), (2, 0)]


def test_supercover_through_corner_hits_all_four():
    got = supercover(Segment((0.01, 0.01), (0.99, 0.99)), 0.5)
    assert {(q.i, q.j) for q in got} == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_supercover_clips_to_unit_square():
    seg = Segment((0.0, 0.0), (0.0, 0.249))
    assert len(supercover(seg, 0.25, clip=False)) == 4
    assert all(0 <= q.i < 4 and 0 <= q.j < 4 for q in supercover(Segment((-0.3, 0.5), (1.3, 0.6)), 0.25))


def test_supercover_degenerate_on_vertex():
    got = supercover(Segment((0.5, 0.5), (0.5, 0.5)), 0.25)
    assert {(q.i, q.j) for q in got} == {(1, 1), (1, 2), (2, 1), (2, 2)}


coord = st.floats(min_value=-0.2, max_value=1.2, allow_nan=False).map(lambda v: round(v * 4096) / 4096)


@settings(max_examples=300, deadline=None)
@given(coord, coord, coord, coord, st.integers(2, 6))
def test_supercover_matches_cell_scan(ax, ay, bx, by, k):
    seg = Segment((ax, ay), (bx, by))
    assert supercover(seg, 2.0 ** -k, clip=False) == cell_scan(seg, 2.0 ** -k)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.integers(2, 8))
def test_supercover_contains_cells_of_points_on_segment(ax, ay, bx, by, k):
    delta = 2.0 ** -k
    cells = {(q.i, q.j) for q in supercover(Segment((ax, ay), (bx, by)), delta, clip=False)}
    rng = np.random.default_rng(0)
    for s in rng.random(8):
        z = (Fraction(ax) + Fraction(s) * (Fraction(bx) - Fraction(ax)),
             Fraction(ay) + Fraction(s) * (Fraction(by) - Fraction(ay)))
        assert (math.floor(z[0] / Fraction(delta)), math.floor(z[1] / Fraction(delta))) in cells


def test_supercover_consistency_many_samples():
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(100):
        a, b = rng.random(2), rng.random(2)
        delta = 2.0 ** -int(rng.integers(3, 8))
        cells = {(q.i, q.j) for q in supercover(Segment(tuple(a), tuple(b)), delta)}
        for s in rng.random(12):
            z = a + s * (b - a)
            assert (int(z[0] // delta), int(z[1] // delta)) in cells
            hits += 1
    assert hits >= 1000


def test_supercover_cardinality_off_vertices():
    rng = np.random.default_rng(11)
    for _ in range(500):
        a, b = rng.random(2), rng.random(2)
        delta = 2.0 ** -int(rng.integers(3, 9))
        n = len(supercover(Segment(tuple(a), tuple(b)), delta))
        assert n <= (abs(b[0] - a[0]) + abs(b[1] - a[1])) / delta + 4


def test_project_scalar_examples():
    assert project_scalar((0.3, 0.7), 0.0) == pytest.approx(0.7)
    assert project_scalar((1, 0), math.pi / 2) == pytest.approx(-1.0)
    assert project_scalar((1, 1), math.pi / 4) == pytest.approx(0.0, abs=1e-15)


def test_unit_and_normal_are_unit():
    for phi in np.linspace(0, math.pi, 17):
        assert math.hypot(*unit(phi)) == pytest.approx(1.0, abs=1e-15)
        assert math.hypot(*normal(phi)) == pytest.approx(1.0, abs=1e-15)


def test_project_square_examples():
    q = DyadicSquare(2, 0, 0)
    assert project_square(q, 0.0) == pytest.approx((0.0, 0.25))
    lo, hi = project_square(q, math.pi / 4)
    assert lo == pytest.approx(-math.sqrt(2) / 8) and hi == pytest.approx(math.sqrt(2) / 8)
    lo, hi = project_square(q, math.pi / 2)
    assert lo == pytest.approx(-0.25) and hi == pytest.approx(0.0, abs=1e-16)


def test_project_square_is_corner_extremes():
    rng = np.random.default_rng(3)
    for _ in range(200):
        q = DyadicSquare(5, int(rng.integers(0, 32)), int(rng.integers(0, 32)))
        phi = rng.random() * math.pi
        vals = [project_scalar(c, phi) for c in q.corners()]
        lo, hi = project_square(q, phi)
        assert lo == pytest.approx(min(vals), abs=1e-15)
        assert hi == pytest.approx(max(vals), abs=1e-15)


def test_projection_is_lipschitz():
    rng = np.random.default_rng(4)
    for _ in range(500):
        x, y, phi = rng.random(2), rng.random(2), rng.random() * math.pi
        assert abs(project_scalar(x, phi) - project_scalar(y, phi)) <= np.linalg.norm(x - y) + 1e-15


def test_square_ball_examples():
    q = DyadicSquare(2, 0, 0)
    assert square_ball_intersects(q, (0.5, 0.125), 0.25)
    assert not square_ball_intersects(q, (0.5, 0.5), 0.1)
    assert square_ball_intersects(DyadicSquare(7, 3, 3), (3.5 / 128, 3.2 / 128), 0.0)


def test_level_of_rejects_non_dyadic():
    assert level_of(0.125) == 3
    with pytest.raises(ValueError):
        level_of(0.3)


def test_stick_cells_match_supercover():
    rng = np.random.default_rng(5)
    fbits = 12
    for _ in range(300):
        vx, vy = rng.integers(0, 64, size=2)
        px, py = rng.integers(0, 40 << fbits, size=2)
        owner, i, j = stick_cells([vx], [vy], [px], [py], fbits)
        got = sorted(zip(i.tolist(), j.tolist()))
        d = 2.0 ** -8
        seg = Segment((vx * d, vy * d), ((vx + px * 2.0 ** -fbits) * d, (vy + py * 2.0 ** -fbits) * d))
        want = [(q.i, q.j) for q in supercover(seg, d, clip=False)]
        assert got == want
        assert stick_cell_count([px], [py], fbits)[0] == len(want)
