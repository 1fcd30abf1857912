import numpy as np
import pytest
from scipy.special import k0

from core.errors import ParameterError
from core.grid import Field, build_grid
from modules.limit import (
    OVERSHOOT,
    UNDERSHOOT,
    classify_shot,
    decay_certificate,
    ground_state,
    h1_distance,
    limit_solution,
    shoot_ground_state,
)

TOWNES_MASS = 11.700896


@pytest.fixture(scope="module")
def w6():
    return ground_state(6.0)


def test_ground_state_solves_the_ode(w6):
    assert w6.residual < 1e-6
    assert w6.W[0] == pytest.approx(w6.a, rel=1e-6)
    assert np.all(w6.W > 0)
    assert np.all(np.diff(w6.W) < 0)


def test_ground_state_pohozaev_relations(w6):
    p = w6.p
    assert w6.gradient_sq == pytest.approx((p - 2) / p * w6.lp, rel=1e-6)
    assert w6.mass == pytest.approx(2.0 / p * w6.lp, rel=1e-6)


def test_cubic_ground_state_has_townes_mass():
    assert ground_state(4.0).mass == pytest.approx(TOWNES_MASS, rel=1e-5)


def test_shots_bracket_the_ground_state(w6):
    assert classify_shot(1.01 * w6.a, 6.0) == OVERSHOOT
    assert classify_shot(0.99 * w6.a, 6.0) == UNDERSHOOT
    assert classify_shot(0.5, 6.0) == UNDERSHOOT


def test_profile_continues_past_the_samples(w6):
    r = np.array([0.0, 0.5 * w6.r[0], 1.0, w6.r_max + 2.0])
    values = w6.profile(r)
    assert values[0] == pytest.approx(w6.a)
    assert values[-1] == pytest.approx(w6.tail_coefficient * k0(w6.r_max + 2.0), rel=1e-12)
    assert 0 < values[-1] < values[2] < values[0]
    assert w6.profile_derivative(np.array([1.0]))[0] < 0


@pytest.mark.parametrize("rho", [1.0, 8.0])
def test_limit_solution_has_the_mass(w6, rho):
    sol = limit_solution(6.0, rho)
    assert sol.lambda_bar == pytest.approx((w6.mass / rho) ** ((6.0 - 2) / (6.0 - 4)))
    assert sol.mass == pytest.approx(rho, rel=1e-10)
    assert abs(sol.pohozaev_gap) < 1e-6


def test_ground_level_scaling():
    p = 6.0
    base = limit_solution(p, 1.0).m_rho
    for s in (0.5, 1.0, 2.0, 4.0):
        assert limit_solution(p, s).m_rho == pytest.approx(s ** (-2.0 / (p - 4)) * base, rel=1e-3)


def test_decay_certificate_holds():
    sol = limit_solution(6.0, 1.0)
    cert = decay_certificate(sol)
    assert cert.holds
    assert cert.C2 == pytest.approx(np.sqrt(sol.lambda_bar / 2.0))
    assert cert.checked >= 10
    r, u = sol.radial_samples()
    assert u[r >= cert.R0][0] ** (sol.p - 2) <= sol.lambda_bar / 2.0


def test_sampled_solution_keeps_the_mass(w6):
    sol = limit_solution(6.0, w6.mass)
    assert sol.lambda_bar == pytest.approx(1.0)
    grid = build_grid("disk", 16.0, 161)
    u = sol.sample_on(grid)
    assert u.mass == pytest.approx(w6.mass, rel=1e-3)
    shifted = sol.sample_on(grid, center=(1.0, 0.0))
    assert shifted.mass == pytest.approx(w6.mass, rel=1e-3)


def test_h1_distance(disk33, bump_field):
    assert h1_distance(bump_field, bump_field) == 0.0
    zero = Field(disk33, np.zeros(disk33.size))
    expected = np.sqrt(bump_field.mass + bump_field.gradient_sq)
    assert h1_distance(bump_field, zero) == pytest.approx(expected, rel=1e-12)


def test_limit_guards():
    with pytest.raises(ParameterError):
        limit_solution(4.0, 1.0)
    with pytest.raises(ParameterError):
        limit_solution(6.0, 0.0)
    with pytest.raises(ParameterError):
        shoot_ground_state(2.0)
