import math

import numpy as np
import pytest

from frostproj.errors import DegenerateSeries
from frostproj.projection import (
    WIDTH_CAP,
    ConcentrationCert,
    DiscreteMeasure,
    concentration,
    concentrations,
    direction_sweep,
    holder_lower_bound,
    lp_norm,
    pushforward,
    scaling_exponent,
    sweep_count,
    trapezoid_cdf,
)


def one_square(k=6):
    return DiscreteMeasure.uniform(k, [(10, 20)])


def test_axis_projection_of_one_square():
    h = pushforward(one_square(), 0.0, subbins=1)
    delta = 2.0 ** -6
    nz = h.densities[h.densities > 0]
    assert len(nz) == 1 and nz[0] == pytest.approx(1 / delta)
    assert h.mass == pytest.approx(1.0)
    assert lp_norm(h, 2) == pytest.approx(delta ** -0.5)


def test_diagonal_projection_is_a_triangle():
    delta = 2.0 ** -6
    h = pushforward(one_square(), math.pi / 4, subbins=8)
    peak = math.sqrt(2) / delta
    assert h.densities.max() == pytest.approx(peak, rel=0.1)
    assert h.densities.max() <= peak * (1 + 1e-12)


def test_triangle_l2_converges():
    delta = 2.0 ** -6
    exact = math.sqrt(2 * math.sqrt(2) / (3 * delta))
    errs = [abs(lp_norm(pushforward(one_square(), math.pi / 4, s), 2) - exact) for s in (4, 8, 16)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] / exact < 0.01


def test_lebesgue_projects_to_lebesgue():
    k = 5
    cells = [(i, j) for i in range(32) for j in range(32)]
    h = pushforward(DiscreteMeasure.uniform(k, cells), 0.0, subbins=2)
    inside = (h.edges()[:-1] >= 0) & (h.edges()[1:] <= 1)
    assert np.allclose(h.densities[inside], 1.0)
    assert np.allclose(h.densities[~inside], 0.0)
    for p in (1.5, 2, 8):
        assert lp_norm(h, p) == pytest.approx(1.0)


def test_trapezoid_cdf_limits():
    x = np.linspace(-1, 3, 101)
    c = trapezoid_cdf(x, 0.5, 1.5)
    assert c[0] == 0 and c[-1] == pytest.approx(1.0)
    assert np.all(np.diff(c) >= -1e-15)
    assert trapezoid_cdf(np.array([0.5]), 0.0, 1.0)[0] == pytest.approx(0.5)


def test_mass_conservation(arrangement):
    mu = DiscreteMeasure.of_arrangement(arrangement(1.2, 8))
    for phi in np.linspace(0, math.pi, 23, endpoint=False):
        assert pushforward(mu, phi).mass == pytest.approx(1.0, abs=1e-9)


def test_refinement_does_not_lower_norm(arrangement):
    mu = DiscreteMeasure.of_arrangement(arrangement(1.0, 7))
    for phi in (0.1, 0.7, 2.0):
        prev = lp_norm(pushforward(mu, phi, 1), 4)
        for s in (2, 4, 8, 16):
            cur = lp_norm(pushforward(mu, phi, s), 4)
            assert cur >= prev - 1e-9
            prev = cur


def test_lp_norm_rejects_small_p():
    with pytest.raises(ValueError):
        lp_norm(pushforward(one_square(), 0.0), 0.5)


def test_concentration_on_stick_direction(arrangement):
    arr = arrangement(1.0, 9)
    for s in range(0, arr.n_sticks, 7):
        phi = float(arr.directions[arr.dir_index[s]])
        c = concentration(arr, phi)
        # each closed square meeting the line projects within one square width of it
        assert c.width <= 2 * arr.delta * (abs(math.sin(phi)) + abs(math.cos(phi))) * (1 + 1e-9)


def test_concentration_between_directions(arrangement):
    arr = arrangement(1.2, 9)
    mids = arr.directions + math.pi / (2 * arr.m)
    for c in concentrations(arr, mids):
        assert c.width <= arr.delta * (math.pi / 2 + 2 * math.sqrt(2)) + 1e-15
        assert c.width < WIDTH_CAP * arr.delta


def test_projected_stick_stays_thin(arrangement):
    """Exact projected diameter of each stick near its own direction."""
    arr = arrangement(4 / 3, 9)
    rng = np.random.default_rng(0)
    for s in rng.choice(arr.n_sticks, 40, replace=False):
        _, i, j = arr.stick_squares([s])
        phi0 = arr.directions[arr.dir_index[s]]
        for off in np.linspace(-1, 1, 5) * math.pi / (2 * arr.m):
            phi = phi0 + off
            sn, cs = math.sin(phi), math.cos(phi)
            corners = [(-sn * (i + a) + cs * (j + b)) * arr.delta for a in (0, 1) for b in (0, 1)]
            lo = min(c.min() for c in corners)
            hi = max(c.max() for c in corners)
            assert hi - lo <= WIDTH_CAP * arr.delta


def test_tie_goes_to_lower_stick(arrangement):
    arr = arrangement(1.0, 8)
    order = np.argsort(arr.directions[arr.dir_index])
    a, b = order[0], order[1]
    mid = 0.5 * (arr.directions[arr.dir_index[a]] + arr.directions[arr.dir_index[b]])
    assert concentration(arr, mid).stick_id == min(a, b)


def test_implicit_enclosure_contains_exact_interval(arrangement):
    arr = arrangement(1.0, 9)
    phis = np.linspace(0, math.pi, 50, endpoint=False)
    exact = concentrations(arr, phis)
    arr.pset, saved = None, arr.pset
    try:
        loose = concentrations(arr, phis, check=False)
    finally:
        arr.pset = saved
    for e, l in zip(exact, loose):
        assert l.lo <= e.lo + 1e-15 and e.hi <= l.hi + 1e-15
        assert not l.exact


def test_holder_examples():
    assert holder_lower_bound(ConcentrationCert(0.0, 0.0, 1.0, 0, 1, 1.0), 3) == pytest.approx(1.0)
    delta, t, p = 2.0 ** -10, 1.0, 8
    cert = ConcentrationCert(0.0, 0.0, delta, 0, 1, delta ** (t / 2))
    assert holder_lower_bound(cert, p) == pytest.approx(delta ** (1 / p - (2 - t) / 2))
    with pytest.raises(ValueError):
        holder_lower_bound(cert, 1.0)


def test_sweep_contract(arrangement):
    arr = arrangement(1.0, 8)
    table = direction_sweep(arr, 8)
    assert len(table) == sweep_count(arr) == max(4 * arr.m, 720)
    assert np.all(table.holder_lb <= table.lp_norm * (1 + 1e-6))
    with pytest.raises(ValueError):
        direction_sweep(arr, 8, count=arr.m)


def test_scaling_examples():
    series = [(2.0 ** -k, 2.0 ** (-0.75 * k)) for k in range(6, 12)]
    slope, _, resid = scaling_exponent(series)
    assert slope == pytest.approx(0.75) and resid < 1e-12
    slope, _, _ = scaling_exponent([(2.0 ** -k, 3.0) for k in range(6, 12)])
    assert slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegenerateSeries):
        scaling_exponent([(0.5, 1.0), (0.25, 2.0)])
    with pytest.raises(DegenerateSeries):
        scaling_exponent([(0.5, 1.0), (0.5, 2.0), (0.5, 3.0)])
