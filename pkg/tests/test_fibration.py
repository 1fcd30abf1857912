import numpy as np
import pytest

from core.errors import BracketError, ConstraintError, ParameterError, ResolutionError
from core.functional import Params, energy, pohozaev_interior
from core.grid import Field, build_grid, random_bumps
from modules.fibration import (
    FiberInvariants,
    dilate,
    fiber_derivative,
    fiber_energy,
    fiber_pohozaev,
    fiber_scan,
    pohozaev_time,
    scan_invariants,
)

PRM = Params(p=6.0, alpha=-0.01, rho=1.0)


def _gaussian(grid, sigma):
    x, y = grid.coords
    return Field(grid, np.exp(-(x ** 2 + y ** 2) / (2 * sigma ** 2))).normalized(1.0)


@pytest.mark.parametrize("seed", range(50))
def test_single_critical_time_on_pohozaev_manifold(disk33, seed):
    u = random_bumps(disk33, np.random.default_rng(seed), rho=1.0)
    scan = fiber_scan(u, PRM)
    assert scan.sign_changes == 1
    assert scan.unique and scan.strict_max

    moved = dilate(u, scan.t_u)
    assert abs(pohozaev_interior(moved, PRM)) < 1e-8 * moved.gradient_sq


def test_fiber_map_matches_energy_of_dilations(bump_field):
    inv = FiberInvariants.of(bump_field, PRM.p)
    for t in (0.3, 1.0, 2.5):
        moved = dilate(bump_field, t)
        assert fiber_energy(inv, PRM, t) == pytest.approx(energy(moved, PRM).total, rel=1e-10)
        assert fiber_pohozaev(inv, PRM, t) == pytest.approx(pohozaev_interior(moved, PRM), rel=1e-10, abs=1e-12)


def test_invariants_follow_scaling_laws(bump_field):
    t = 1.7
    direct = FiberInvariants.of(dilate(bump_field, t), PRM.p)
    law = FiberInvariants.of(bump_field, PRM.p).dilated(t, PRM.p)
    assert direct.K == pytest.approx(law.K, rel=1e-12)
    assert direct.P == pytest.approx(law.P, rel=1e-12)
    assert direct.X == pytest.approx(law.X, abs=1e-9)
    assert direct.rho == pytest.approx(law.rho, rel=1e-13)


def test_derivative_is_scaled_pohozaev(bump_field):
    inv = FiberInvariants.of(bump_field, PRM.p)
    t = np.array([0.5, 2.0])
    np.testing.assert_allclose(fiber_derivative(inv, PRM, t) * t, fiber_pohozaev(inv, PRM, t))
    eps = 1e-6
    fd = (fiber_energy(inv, PRM, 2.0 + eps) - fiber_energy(inv, PRM, 2.0 - eps)) / (2 * eps)
    assert fiber_derivative(inv, PRM, 2.0) == pytest.approx(fd, rel=1e-6)


def test_pohozaev_time_agrees_with_scan(bump_field):
    inv = FiberInvariants.of(bump_field, PRM.p)
    assert pohozaev_time(inv, PRM) == pytest.approx(fiber_scan(bump_field, PRM).t_u, rel=1e-10)


def test_pohozaev_time_widens_bracket():
    inv = FiberInvariants(K=1e-9, X=0.0, P=1e-20, rho=1.0)
    t = pohozaev_time(inv, PRM)
    assert t > 1e3
    assert abs(fiber_pohozaev(inv, PRM, t)) < 1e-8 * t ** 2 * inv.K


def test_scan_needs_the_mass(bump_field):
    with pytest.raises(ConstraintError):
        fiber_scan(bump_field.scaled(2.0), PRM)


def test_scan_range_guards(bump_field):
    with pytest.raises(ParameterError):
        fiber_scan(bump_field, PRM, t_range=(2.0, 1.0))
    inv = FiberInvariants.of(bump_field, PRM.p)
    t_u = pohozaev_time(inv, PRM)
    with pytest.raises(BracketError):
        scan_invariants(inv, PRM, t_range=(2.0 * t_u, 4.0 * t_u))


def test_exact_dilation_lives_on_scaled_grid(bump_field):
    moved = dilate(bump_field, 4.0)
    assert moved.grid.R == pytest.approx(bump_field.grid.R / 4.0)
    np.testing.assert_array_equal(moved.values, 4.0 * bump_field.values)
    assert moved.mass == pytest.approx(bump_field.mass, rel=1e-13)
    assert dilate(bump_field, 1.0).values is not bump_field.values


def test_resampled_gaussian_dilation():
    grid = build_grid("disk", 1.0, 161)
    sigma, t = 0.08, 2.0
    u = _gaussian(grid, sigma)
    moved = dilate(u, t, target=grid)
    amplitude = u.values.max()
    x, y = grid.coords
    exact = t * amplitude * np.exp(-t ** 2 * (x ** 2 + y ** 2) / (2 * sigma ** 2))
    assert np.max(np.abs(moved.values - exact)) < 1e-4 * exact.max()
    assert moved.mass == pytest.approx(1.0, rel=1e-4)


def test_resampling_rejects_unresolved_dilation():
    grid = build_grid("disk", 1.0, 161)
    u = _gaussian(grid, 0.08)
    with pytest.raises(ResolutionError, match="spacings"):
        dilate(u, 50.0, target=grid)


def test_resampling_rejects_mass_loss():
    grid = build_grid("disk", 1.0, 161)
    u = _gaussian(grid, 0.08)
    with pytest.raises(ResolutionError, match="mass"):
        dilate(u, 0.15, target=grid)


def test_dilation_factor_must_be_positive(bump_field):
    with pytest.raises(ParameterError):
        dilate(bump_field, 0.0)
