import math

import numpy as np
import pytest

from frostproj.errors import MixedScales
from frostproj.geometry import DyadicSquare, square_ball_intersects
from frostproj.sticks import arrange_high, dump_arrangement, from_squares, load_arrangement
from frostproj.verify import (
    BucketIndex,
    SamplingPolicy,
    StickIndex,
    arrangement_index,
    build_index,
    count_ball,
    overlap_histogram,
    verify_kt,
)


def brute(squares, x, r):
    return sum(square_ball_intersects(q, x, r) for q in squares)


def test_build_index_examples():
    assert build_index([], 0.25).n == 0
    quarter = [DyadicSquare(1, i, j) for i in range(2) for j in range(2)]
    idx = build_index(quarter)
    assert idx.n == 4
    with pytest.raises(MixedScales):
        build_index([DyadicSquare(1, 0, 0), DyadicSquare(2, 0, 0)])


def test_count_ball_examples():
    grid = [DyadicSquare(2, i, j) for i in range(4) for j in range(4)]
    assert count_ball(build_index(grid), (0.5, 0.5), 0.01) == 4
    assert count_ball(build_index([DyadicSquare(3, 0, 0)]), (0.9, 0.9), 0.1) == 0


def test_count_ball_rejects_negative_radius():
    with pytest.raises(ValueError):
        count_ball(build_index([DyadicSquare(3, 0, 0)]), (0.5, 0.5), -1.0)


def test_count_ball_matches_brute_force():
    rng = np.random.default_rng(2024)
    cases = 0
    for _ in range(25):
        k = int(rng.integers(2, 7))
        side = 1 << k
        n = int(rng.integers(0, min(1000, side * side) + 1))
        cells = np.unique(rng.integers(0, side, size=(n, 2)), axis=0)
        squares = [DyadicSquare(k, int(i), int(j)) for i, j in cells]
        idx = build_index(squares, 2.0 ** -k)
        for _ in range(45):
            if rng.random() < 0.4:
                # centres and radii on the grid exercise boundary ties
                x = tuple(rng.integers(0, 4 * side, size=2) / (4 * side))
                r = int(rng.integers(0, 4 * side)) / (4 * side)
            else:
                x = tuple(rng.random(2) * 1.2 - 0.1)
                r = float(rng.random() * 0.6)
            assert count_ball(idx, x, r) == brute(squares, x, r)
            cases += 1
    assert cases >= 1000


def test_count_ball_monotone_in_radius(arrangement):
    idx = arrangement_index(arrangement(1.0, 8))
    x = (0.37, 0.61)
    counts = [count_ball(idx, x, r) for r in np.linspace(0, 0.8, 60)]
    assert counts == sorted(counts)


def test_sparse_and_dense_storage_agree():
    rng = np.random.default_rng(9)
    k = 14
    cells = np.unique(rng.integers(0, 1 << k, size=(3000, 2)), axis=0)
    idx = BucketIndex(k, cells)
    small = BucketIndex(k, cells[(cells < 1000).all(axis=1)])
    for _ in range(300):
        x = tuple(rng.random(2) * 1000 / (1 << k))
        r = float(rng.random() * 200 / (1 << k))
        sq = [DyadicSquare(k, int(i), int(j)) for i, j in small.cells]
        want = brute(sq, x, r)
        assert count_ball(small, x, r) == want
        assert count_ball(idx, x, r) >= want


@pytest.mark.parametrize("t,k", [(1.0, 10), (1.0, 11), (1.2, 11)])
def test_stick_index_matches_bucket_index(arrangement, t, k):
    arr = arrangement(t, k)
    assert arr.disjoint
    sticks, buckets = StickIndex(arr), BucketIndex(arr.k, arr.pset)
    rng = np.random.default_rng(k)
    side = 1 << (k + 4)
    a, _ = arr.endpoints()
    near = np.floor(a[rng.integers(0, arr.n_sticks, 300)] * side).astype(np.int64)
    cx = np.concatenate([rng.integers(0, side, 300), near[:, 0]])
    cy = np.concatenate([rng.integers(0, side, 300), near[:, 1]])
    for rr in (0, 8, 16, 37, 200, 1024, 5000, 40_000):
        got = sticks.count_many(cx, cy, rr, 4)
        want = buckets.count_many(cx, cy, rr, 4)
        assert np.array_equal(got, want)


def test_full_grid_is_two_dimensional():
    k = 4
    cells = [(i, j) for i in range(16) for j in range(16)]
    rep = verify_kt(BucketIndex(k, np.array(cells)), 2.0 ** -k, 1.0, 2.0)
    assert 1.0 <= rep.C_star <= 16 * math.pi


def test_single_stick_is_one_dimensional(arrangement):
    arr = arrangement(1.0, 8)
    stick = arr.sticks[0]
    idx = build_index(stick.squares)
    rep = verify_kt(idx, arr.delta, arr.delta ** 0.5, 1.0)
    assert rep.C_star <= 12


def clump(k=12, t=1.0):
    delta = 2.0 ** -k
    want = int(4 * delta ** -t)
    radius = 2 * delta ** (-t / 2)  # in cells
    c = 1 << (k - 1)
    span = np.arange(c - int(radius) - 1, c + int(radius) + 2)
    ii, jj = np.meshgrid(span, span, indexing="ij")
    cells = np.column_stack([ii.ravel(), jj.ravel()])
    d = np.hypot(cells[:, 0] + 0.5 - c, cells[:, 1] + 0.5 - c)
    return cells[np.argsort(d, kind="stable")[:want]]


def test_clump_is_rejected():
    cells = clump()
    assert len(cells) == 16384
    rep = verify_kt(BucketIndex(12, cells), 2.0 ** -12, 1.0, 1.0)
    assert rep.C_star > 100
    x, y, r, count = rep.witness
    assert count == count_ball(BucketIndex(12, cells), (x, y), r)


@pytest.mark.parametrize("t,k", [(1.0, 8), (1.2, 9), (4 / 3, 10)])
def test_single_scale_bound(arrangement, t, k):
    arr = arrangement(t, k)
    rep = verify_kt(arrangement_index(arr), arr.delta, arr.delta, t)
    assert rep.C_star <= 9


def test_report_invariants(arrangement):
    arr = arrangement(1.2, 8)
    rep = verify_kt(arrangement_index(arr), arr.delta, 1.0, 1.2)
    assert rep.C_star >= 1 - 1e-9
    assert rep.certified_c >= rep.C_star
    assert [r.r for r in rep.table] == sorted(r.r for r in rep.table)
    assert rep.exhaustive


def test_extra_centres_only_increase(arrangement):
    arr = arrangement(1.0, 7)
    idx = arrangement_index(arr)
    base = verify_kt(idx, arr.delta, 1.0, 1.0, SamplingPolicy(extra=0)).C_star
    more = verify_kt(idx, arr.delta, 1.0, 1.0, SamplingPolicy(extra=5000)).C_star
    assert more >= base


def test_overlap_histograms(arrangement):
    arr = arrangement(1.0, 8)
    assert overlap_histogram(arr) == {1: arr.pset_size}
    lines = dump_arrangement(arrangement(1.0, 6)).splitlines()
    stick = next(line for line in lines if line.startswith("stick 0 "))
    twin = "stick 1 " + stick.split(" ", 2)[2]
    one = load_arrangement("\n".join([lines[0], stick]) + "\n")
    _, i, j = one.stick_squares([0])
    text = "\n".join([lines[0], stick, twin] + [f"sq {a} {b}" for a, b in sorted(zip(i.tolist(), j.tolist()))])
    two = load_arrangement(text + "\n")
    assert overlap_histogram(two) == {2: len(i)}


def test_implicit_cartwheel_overlap_and_kt():
    arr = arrange_high(2.0 ** -18, 1.5)
    assert overlap_histogram(arr) == {1: arr.pset_size}
    rep = verify_kt(arrangement_index(arr), arr.delta, 1.0, 1.5)
    assert not rep.exhaustive and rep.certified_c is None
    assert rep.C_star <= 200


def test_from_squares_fixture():
    arr = from_squares(5, 1.0, [(1, 2), (1, 2), (3, 4)])
    assert arr.pset_size == 2
