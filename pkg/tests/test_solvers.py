from dataclasses import replace

import numpy as np
import pytest

from config import SolverSettings
from core.errors import ParameterError
from core.functional import Params, energy
from core.grid import build_grid, scaled_eigenfunction, unit_eigenpair
from modules.limit import ground_state, limit_solution
from modules.solvers import (
    BOUNDARY_TRAP,
    CONVERGED,
    certify,
    ground_state_check,
    probe_critical_mass,
    problem_thresholds,
    solve_critical_point,
    solve_local_min,
    solve_mountain_pass,
)


def _setup(R, n, rho, cap=0.5):
    grid = build_grid("disk", R, n)
    lam = unit_eigenpair(grid.shape, n).lambda1
    probe = problem_thresholds(grid, Params(p=6.0, alpha=-0.01, rho=rho), lam)
    prm = Params(p=6.0, alpha=-cap * probe.alpha_star, rho=rho)
    return grid, prm, problem_thresholds(grid, prm, lam)


@pytest.fixture(scope="module")
def local_min():
    grid, prm, thr = _setup(16.0, 49, 1.0)
    return grid, prm, thr, solve_local_min(grid, prm, thr=thr)


def test_local_min_converges_inside_the_ball(local_min):
    grid, prm, thr, report = local_min
    assert report.status == CONVERGED
    cert = report.certificates
    assert cert.in_Q and cert.interior
    assert cert.gradient_norm < thr.x_star
    assert report.solution.mass == pytest.approx(prm.rho, rel=1e-10)


def test_local_min_energy_is_below_the_eigenfunction(local_min):
    grid, prm, _, report = local_min
    assert report.certificates.energy_positive
    psi_energy = energy(scaled_eigenfunction(grid, prm.rho), prm).total
    assert 0 < energy(report.solution, prm).total <= psi_energy


def test_local_min_descends(local_min):
    report = local_min[3]
    energies = [entry.energy for entry in report.trace[5:]]
    assert all(b <= a + 1e-12 * abs(a) for a, b in zip(energies, energies[1:]))


def test_local_min_multiplier_is_consistent(local_min):
    report = local_min[3]
    assert report.relative_residual < 100 * SolverSettings().tol
    assert report.lagrange_lambda > 0
    data = report.to_dict()
    assert data["mode"] == "min"
    assert data["grid"]["n"] == 49
    assert data["certificates"]["interior"] is True


def test_certify_recomputes_flags(local_min):
    _, prm, thr, report = local_min
    again = certify(report.solution, prm, thr)
    assert again.to_dict() == report.certificates.to_dict()


def test_newton_refinement_stays_at_the_minimizer(local_min):
    grid, prm, thr, report = local_min
    refined = solve_critical_point(grid, prm, report.solution, thr=thr)
    assert refined.converged
    assert refined.energy == pytest.approx(report.energy, rel=1e-8)
    assert refined.lagrange_lambda == pytest.approx(report.lagrange_lambda, rel=1e-5)


@pytest.mark.parametrize("alpha", [0.0, 0.1])
def test_solvers_reject_non_negative_alpha(disk33, alpha):
    prm = Params(p=6.0, alpha=alpha, rho=1.0)
    with pytest.raises(ParameterError, match="alpha < 0"):
        solve_local_min(disk33, prm)


def test_empty_ball_is_rejected():
    grid = build_grid("disk", 4.0, 33)
    prm = Params(p=6.0, alpha=-1e-3, rho=8.0)
    with pytest.raises(ParameterError, match="Q is empty"):
        solve_local_min(grid, prm)


def test_mountain_pass_needs_a_certified_minimizer(local_min):
    grid, prm, _, report = local_min
    with pytest.raises(ParameterError):
        solve_mountain_pass(grid, prm, replace(report, status=BOUNDARY_TRAP))
    with pytest.raises(ParameterError):
        solve_mountain_pass(build_grid("disk", 16.0, 33), prm, report)


def test_ground_state_check_needs_converged_reports(local_min):
    grid, prm, _, report = local_min
    assert not ground_state_check(report, replace(report, status=BOUNDARY_TRAP), grid, prm)


def test_probe_stops_at_the_first_failure():
    prm = Params(p=6.0, alpha=-0.01, rho=1.0)
    result = probe_critical_mass(
        "disk", 33, 16.0, prm, [200.0, 1.0], SolverSettings(pohozaev_tol=1.0), alpha_cap=0.5
    )
    assert [row.rho for row in result.rows] == [1.0, 200.0]
    assert result.rows[0].ok
    assert not result.rows[1].ok
    assert result.rows[1].energy is None
    assert result.rho_critical == 1.0


@pytest.mark.slow
def test_pohozaev_gap_shrinks_under_refinement():
    gaps = []
    for n in (97, 193):
        grid, prm, thr = _setup(16.0, n, 1.0)
        report = solve_local_min(grid, prm, thr=thr)
        assert report.converged and report.certificates.interior
        gaps.append(report.certificates.pohozaev_gap)
    assert gaps[0] < 2e-2
    assert gaps[1] < 1e-2


@pytest.mark.slow
def test_mountain_pass_rises_above_the_barrier():
    grid, prm, thr = _setup(16.0, 97, 8.0)
    report0 = solve_local_min(grid, prm, thr=thr)
    report1 = solve_mountain_pass(grid, prm, report0)
    assert report1.converged
    assert report1.mode == "mp"
    cert = report1.certificates
    assert cert.above_barrier and cert.above_local_min
    assert report1.energy >= thr.f_at_xstar > 0
    assert report1.energy > report0.energy
    assert report1.relative_residual < 1e-6
    assert ground_state_check(report0, report1, grid, prm) == report0.certificates.pohozaev_ok


@pytest.mark.slow
def test_direct_solve_recovers_the_limit_frequency():
    w = ground_state(6.0)
    sol = limit_solution(6.0, w.mass)
    prm = Params(p=6.0, alpha=0.0, rho=w.mass)
    lambdas = []
    for n in (161, 321):
        grid = build_grid("disk", 24.0, n)
        report = solve_critical_point(grid, prm, sol.sample_on(grid), reference=True)
        assert report.converged
        lambdas.append(report.lagrange_lambda)
    extrapolated = (4.0 * lambdas[1] - lambdas[0]) / 3.0
    assert extrapolated == pytest.approx(sol.lambda_bar, rel=1e-3)
