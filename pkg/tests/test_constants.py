import numpy as np
import pytest

from core.errors import ParameterError
from core.functional import Params, energy, lagrange_multiplier, multiplier_bound
from core.grid import Field, build_grid, random_bumps, scaled_eigenfunction, unit_eigenpair
from modules.constants import (
    barrier,
    barrier_curvature,
    barrier_derivative,
    default_hls_constant,
    gn_constant,
    gn_from_ground_state,
    gradient_bound,
    hls_constant_estimate,
    hls_quotient,
    psi_upper_bound,
    rho_star,
    thresholds,
    weinstein_quotient,
    x_star,
)

# Mass of the two-dimensional cubic ground state
TOWNES_MASS = 11.700896


def _thresholds(rho, R, alpha=-0.01, c_hls=1.0):
    lam = unit_eigenpair(build_grid("disk", 1.0, 33).shape, 33).lambda1
    prm = Params(p=6.0, alpha=alpha, rho=rho)
    return prm, thresholds(prm, R, lam, np.pi / 4.0, c_hls=c_hls)


def test_cubic_constant_matches_townes_mass():
    assert gn_constant(4.0) == pytest.approx(2.0 / TOWNES_MASS, rel=1e-2)


@pytest.mark.parametrize("p", [4.0, 6.0])
def test_ascent_and_shooting_constants_agree(p):
    assert gn_constant(p) == pytest.approx(gn_from_ground_state(p), rel=1e-2)


def test_gn_constant_guard():
    with pytest.raises(ParameterError):
        gn_constant(2.0)


@pytest.mark.parametrize("p", [4.0, 6.0])
def test_gn_inequality_on_random_fields(disk33, p):
    rng = np.random.default_rng(2024)
    c_p = gn_constant(p)
    for _ in range(200):
        u = random_bumps(disk33, rng, count=int(rng.integers(1, 4)))
        assert weinstein_quotient(u, p) <= c_p


def test_weinstein_quotient_of_zero_field(disk17):
    with pytest.raises(ParameterError):
        weinstein_quotient(Field(disk17, np.zeros(disk17.size)), 6.0)


def test_barrier_maximum_at_x_star():
    prm = Params(p=6.0, alpha=-0.01, rho=2.0)
    c_p = gn_constant(6.0)
    xs = x_star(6.0, 2.0, c_p)
    assert abs(barrier_derivative(xs, prm, c_p)) < 1e-10 * xs
    assert barrier_curvature(xs, prm, c_p) < 0
    assert barrier(xs, prm, 16.0, c_p) > barrier(0.9 * xs, prm, 16.0, c_p)
    assert barrier(xs, prm, 16.0, c_p) > barrier(1.1 * xs, prm, 16.0, c_p)


def test_threshold_barrier_value_matches_closed_form():
    prm, thr = _thresholds(rho=1.0, R=16.0)
    assert thr.f_at_xstar == pytest.approx(float(barrier(thr.x_star, prm, 16.0, thr.C_p)), rel=1e-12)


def test_R0_equals_one_at_rho_star():
    lam = unit_eigenpair(build_grid("disk", 1.0, 33).shape, 33).lambda1
    c_p = gn_constant(6.0)
    rs = rho_star(6.0, lam, c_p)
    thr = thresholds(Params(p=6.0, alpha=-0.01, rho=rs), 4.0, lam, np.pi / 4.0, c_hls=1.0)
    assert thr.R0 == pytest.approx(1.0, abs=1e-10)
    assert thr.rho_star == pytest.approx(rs)


def test_alpha0_times_log_decays_monotonically():
    values = []
    for R in (10.0, 1e2, 1e3, 1e4):
        _, thr = _thresholds(rho=1.0, R=R)
        values.append(thr.alpha0 * np.log1p(R))
    assert all(v > 0 for v in values)
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-5


def test_small_domain_is_not_admissible():
    _, thr = _thresholds(rho=8.0, R=2.0)
    assert not thr.defined
    assert not thr.admissible
    assert thr.to_dict()["admissible"] is False


def test_large_domain_is_admissible():
    _, thr = _thresholds(rho=1.0, R=16.0)
    assert thr.defined and thr.alpha_star > 0
    assert thr.alpha_star == min(thr.alpha0, thr.alpha1)


def test_thresholds_reject_nonpositive_R():
    with pytest.raises(ParameterError):
        _thresholds(rho=1.0, R=0.0)


def test_hls_estimate_needs_enough_trials(disk17):
    with pytest.raises(ParameterError):
        hls_constant_estimate(disk17, trials=50)


def test_default_hls_estimate_is_inflated():
    est = default_hls_constant()
    assert est.raw > 0
    assert est.value == pytest.approx(2.0 * est.raw)
    assert est.trials == 200


def test_split_mass_lowers_hls_quotient():
    grid = build_grid("disk", 4.0, 81)
    x, y = grid.coords
    sigma = 0.15
    one = Field(grid, np.exp(-(x ** 2 + y ** 2) / (2 * sigma ** 2)))
    two = Field(grid, np.exp(-((x - 1.2) ** 2 + y ** 2) / (2 * sigma ** 2))
                + np.exp(-((x + 1.2) ** 2 + y ** 2) / (2 * sigma ** 2)))
    assert hls_quotient(two) < hls_quotient(one)


def test_eigenfunction_energy_below_upper_estimate():
    grid = build_grid("disk", 16.0, 65)
    lam = unit_eigenpair(grid.shape, 65).lambda1
    prm = Params(p=6.0, alpha=-0.01, rho=1.0)
    thr = thresholds(prm, 16.0, lam, grid.shape.area)
    psi = scaled_eigenfunction(grid, 1.0)
    assert energy(psi, prm).total <= psi_upper_bound(prm, 16.0, lam, grid.shape.area, thr)


def test_multiplier_bound_dominates_multiplier(disk33, rng):
    prm = Params(p=6.0, alpha=-0.5, rho=1.0)
    c_p, c_83 = gn_constant(6.0), gn_constant(8.0 / 3.0)
    c_hls = default_hls_constant().value
    for _ in range(10):
        u = random_bumps(disk33, rng, rho=1.0)
        assert abs(lagrange_multiplier(u, prm)) <= multiplier_bound(u, prm, 1.0, c_p, c_hls, c_83)


def test_gradient_bound_grows_with_energy():
    prm = Params(p=6.0, alpha=-0.1, rho=1.0)
    c_p = gn_constant(6.0)
    low, high = gradient_bound(prm, 0.5, c_p), gradient_bound(prm, 1.5, c_p)
    assert high - low == pytest.approx(2.0 * 4.0 / 2.0, rel=1e-12)
    assert low > 0
