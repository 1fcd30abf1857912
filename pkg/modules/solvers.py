"""Constrained solvers on the mass sphere of Ω_R.

- ``solve_local_min``: preconditioned projected gradient descent inside the
  gradient ball ‖∇u‖ < x*, started from the scaled eigenfunction ψ_R.
- ``solve_mountain_pass``: string of dilations from the local minimizer to a
  negative-energy endpoint, relaxed with a climbing image and refined by Newton.
- ``solve_critical_point``: Newton–MINRES on the bordered Euler–Lagrange system.

All iterates are renormalized to mass ρ after every step. The Sobolev
preconditioner is an LU solve of the shifted Dirichlet Laplacian.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, minres

from config import SolverSettings
from core.errors import (
    IterationLimitError,
    LabError,
    ParameterError,
    RefinementError,
    ResolutionError,
)
from core.functional import (
    EnergyBreakdown,
    Params,
    energy,
    energy_value,
    evaluate,
    gradient_values,
    hessian_apply,
    multiplier_value,
)
from core.grid import (
    Field,
    Grid,
    build_grid,
    dirichlet_matrix,
    dirichlet_solver,
    resolve_shape,
    scaled_eigenfunction,
    unit_eigenpair,
)
from modules.constants import Thresholds, barrier, thresholds
from modules.fibration import dilate

logger = logging.getLogger(__name__)

CONVERGED = "converged"
BOUNDARY_TRAP = "boundary_trap"
LANDSCAPE_DEGENERATE = "landscape_degenerate"


@dataclass
class Certificates:
    """Flags recomputed from a stored field."""
    in_Q: bool
    interior: bool
    pohozaev_ok: bool
    energy_positive: bool
    gradient_norm: float
    pohozaev_gap: float
    above_barrier: Optional[bool] = None
    above_local_min: Optional[bool] = None
    saddle_along_path: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TraceEntry:
    iteration: int
    energy: float
    residual: float
    step: float


@dataclass
class MountainPassPath:
    """Nodes on the mass sphere from the local minimizer to a negative-energy endpoint."""
    nodes: List[Field]
    energies: np.ndarray
    max_index: int
    s: float = 1.0

    @property
    def max_energy(self) -> float:
        return float(self.energies[self.max_index])


@dataclass
class SolveReport:
    """Outcome of one constrained solve."""
    mode: str
    status: str
    solution: Field
    lagrange_lambda: float
    breakdown: EnergyBreakdown
    iterations: int
    residual: float
    scale: float
    certificates: Certificates
    thresholds: Optional[Thresholds] = None
    trace: List[TraceEntry] = field(default_factory=list)
    path: Optional[MountainPassPath] = None

    @property
    def energy(self) -> float:
        return self.breakdown.total

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def relative_residual(self) -> float:
        return self.residual / self.scale if self.scale > 0 else np.inf

    def to_dict(self) -> Dict[str, Any]:
        grid = self.solution.grid
        return {
            "mode": self.mode,
            "status": self.status,
            "grid": {"shape": grid.shape.name, "R": grid.R, "n": grid.n, "h": grid.h},
            "energy": self.energy,
            "lagrange_lambda": self.lagrange_lambda,
            "iterations": self.iterations,
            "residual": self.residual,
            "relative_residual": self.relative_residual,
            "breakdown": self.breakdown.to_dict(),
            "certificates": self.certificates.to_dict(),
            "thresholds": self.thresholds.to_dict() if self.thresholds else None,
            "path_energies": self.path.energies.tolist() if self.path else None,
        }


@dataclass
class ProbeRow:
    rho: float
    alpha: Optional[float]
    ok: bool
    energy: Optional[float]
    gradient_norm: Optional[float]
    reason: str = ""


@dataclass
class ProbeResult:
    """Empirical largest mass at which the local-minimum certificates hold."""
    rows: List[ProbeRow]
    rho_critical: Optional[float]


def _l2(grid: Grid, values: np.ndarray) -> float:
    return float(np.sqrt(grid.weight * np.dot(values, values)))


def _tangent(grid: Grid, d: np.ndarray, u: Field) -> np.ndarray:
    """L² projection onto the tangent space of the mass sphere at u."""
    return d - (np.dot(d, u.values) / np.dot(u.values, u.values)) * u.values


def _check_regime(prm: Params, reference: bool):
    if prm.alpha > 0 or (prm.alpha == 0 and not reference):
        raise ParameterError(
            f"alpha must be negative (regime alpha < 0, beta > 0, p > 4), got {prm.alpha}"
        )
    if prm.beta <= 0:
        raise ParameterError(f"beta must be positive (regime alpha < 0, beta > 0, p > 4), got {prm.beta}")


def problem_thresholds(grid: Grid, prm: Params, lambda1: Optional[float] = None) -> Thresholds:
    """Thresholds for the grid's domain; λ₁ defaults to the closed-form value of Ω."""
    shape = grid.shape
    lam = shape.exact_lambda1 if lambda1 is None else lambda1
    return thresholds(prm, grid.R, lam, shape.area)


def certify(
    u: Field,
    prm: Params,
    thr: Thresholds,
    settings: Optional[SolverSettings] = None,
) -> Certificates:
    """Certificate flags of a field, computed from scratch.

    Args:
        u: Field on the mass sphere
        prm: Energy parameters
        thr: Thresholds of the configuration
        settings: Margins and tolerances

    Returns:
        Certificates (the mountain-pass flags stay None)
    """
    settings = settings or SolverSettings()
    bd = energy(u, prm)
    gradient_sq = 2.0 * bd.kinetic
    grad = float(np.sqrt(gradient_sq))
    gap = abs(bd.pohozaev_interior - bd.boundary_flux) / gradient_sq
    return Certificates(
        in_Q=grad < thr.x_star,
        interior=grad < thr.x_star * (1.0 - settings.interior_margin),
        pohozaev_ok=gap < settings.pohozaev_tol,
        energy_positive=bd.total > 0,
        gradient_norm=grad,
        pohozaev_gap=float(gap),
    )


def _report(
    mode: str,
    status: str,
    u: Field,
    prm: Params,
    thr: Thresholds,
    settings: SolverSettings,
    iterations: int,
    trace: List[TraceEntry],
) -> SolveReport:
    ev = evaluate(u, prm)
    lam = multiplier_value(ev, prm)
    r = gradient_values(ev, prm) + lam * u.values
    return SolveReport(
        mode=mode,
        status=status,
        solution=u,
        lagrange_lambda=lam,
        breakdown=energy(u, prm),
        iterations=iterations,
        residual=_l2(u.grid, r),
        scale=_l2(u.grid, ev.neg_laplacian),
        certificates=certify(u, prm, thr, settings),
        thresholds=thr,
        trace=trace,
    )


# =============================================================================
# LOCAL MINIMIZER
# =============================================================================

def solve_local_min(
    grid: Grid,
    prm: Params,
    settings: Optional[SolverSettings] = None,
    thr: Optional[Thresholds] = None,
    initial: Optional[Field] = None,
    reference: bool = False,
) -> SolveReport:
    """Local minimizer of the energy over Q = {mass ρ, ‖∇u‖ ≤ x*}.

    Args:
        grid: Grid of Ω_R
        prm: Energy parameters (alpha < 0 unless ``reference``)
        settings: Solver tolerances
        thr: Thresholds (computed with the discrete λ₁ if omitted)
        initial: Starting field (ψ_R if omitted)
        reference: Allow alpha = 0 for reference runs

    Returns:
        SolveReport with status "converged" or "boundary_trap"

    Raises:
        ParameterError: If R ≤ R0 (Q is empty) or alpha is outside the regime
        IterationLimitError: On the iteration cap or a stalled line search
    """
    settings = settings or SolverSettings()
    _check_regime(prm, reference)
    if thr is None:
        thr = problem_thresholds(grid, prm, unit_eigenpair(grid.shape, grid.n).lambda1)
    if not thr.defined:
        raise ParameterError(f"R={grid.R:g} does not exceed R0={thr.R0:.6g}; Q is empty")
    if prm.alpha != 0 and abs(prm.alpha) >= thr.alpha_star:
        logger.warning(f"|alpha|={abs(prm.alpha):.4g} is not below alpha*={thr.alpha_star:.4g}")

    u = (initial if initial is not None else scaled_eigenfunction(grid, prm.rho)).normalized(prm.rho)
    A = dirichlet_matrix(grid)
    precondition = dirichlet_solver(grid)
    ball = thr.x_star ** 2

    ev = evaluate(u, prm)
    if ev.gradient_sq >= ball:
        raise ParameterError(f"Initial field has ‖∇u‖ = {np.sqrt(ev.gradient_sq):.4g} ≥ x* = {thr.x_star:.4g}")

    trace: List[TraceEntry] = []
    previous = None
    pressed = 0
    tau = 1.0
    for iteration in range(1, settings.max_iter + 1):
        E = energy_value(ev, prm)
        lam = multiplier_value(ev, prm)
        r = gradient_values(ev, prm) + lam * u.values
        res = _l2(grid, r)
        scale = _l2(grid, ev.neg_laplacian)
        trace.append(TraceEntry(iteration, E, res, tau))

        if res < settings.tol * scale:
            logger.info(f"Local min converged after {iteration} iterations, J={E:.12g}")
            return _report("min", CONVERGED, u, prm, thr, settings, iteration, trace)

        d = _tangent(grid, precondition(r), u)
        if previous is not None:
            s = u.values - previous[0]
            y = r - previous[1]
            sy = float(np.dot(s, y))
            tau = float(np.clip(np.dot(s, A @ s) / sy, settings.step_min, settings.step_max)) if sy > 0 else 1.0
        else:
            tau = 1.0

        slack = settings.energy_slack * max(abs(E), ev.gradient_sq)
        hit_boundary = False
        for _ in range(settings.max_backtracks):
            candidate = u.with_values(u.values - tau * d).normalized(prm.rho)
            ev_c = evaluate(candidate, prm)
            if ev_c.gradient_sq >= ball:
                hit_boundary = True
            elif energy_value(ev_c, prm) <= E + slack:
                break
            tau *= 0.5
        else:
            if res < 100.0 * settings.tol * scale:
                logger.warning(f"Line search stalled at relative residual {res / scale:.2e}; accepting")
                return _report("min", CONVERGED, u, prm, thr, settings, iteration, trace)
            raise IterationLimitError(
                f"Line search stalled at iteration {iteration} (relative residual {res / scale:.2e})"
            )

        pressed = pressed + 1 if hit_boundary else 0
        if pressed >= settings.boundary_patience:
            logger.warning(f"Iterates pressed against ‖∇u‖ = x* for {pressed} iterations")
            return _report("min", BOUNDARY_TRAP, candidate, prm, thr, settings, iteration, trace)

        previous = (u.values, r)
        u, ev = candidate, ev_c
        if iteration % 100 == 0:
            logger.debug(f"iteration {iteration}: J={E:.14g}, residual {res / scale:.3e}, step {tau:.3g}")

    raise IterationLimitError(f"Local min did not converge in {settings.max_iter} iterations")


# =============================================================================
# CRITICAL POINT REFINEMENT
# =============================================================================

def solve_critical_point(
    grid: Grid,
    prm: Params,
    initial: Field,
    settings: Optional[SolverSettings] = None,
    thr: Optional[Thresholds] = None,
    reference: bool = False,
) -> SolveReport:
    """Newton–MINRES on g(u) + λu = 0, mass(u) = ρ.

    Each step solves the symmetric bordered system [[H + λI, u], [uᵀ, 0]] with
    MINRES, preconditioned by the shifted Dirichlet Laplacian, and is damped on
    the residual norm.

    Raises:
        RefinementError: If the damped Newton iteration diverges or stalls
    """
    settings = settings or SolverSettings()
    _check_regime(prm, reference)
    thr = thr or problem_thresholds(grid, prm)

    u = initial.normalized(prm.rho)
    ev = evaluate(u, prm)
    lam = multiplier_value(ev, prm)
    precondition = dirichlet_solver(grid, max(lam, 0.0))
    size = grid.size
    trace: List[TraceEntry] = []
    step = 1.0

    for iteration in range(1, settings.refine_max_iter + 1):
        r = gradient_values(ev, prm) + lam * u.values
        res = _l2(grid, r)
        scale = _l2(grid, ev.neg_laplacian)
        trace.append(TraceEntry(iteration, energy_value(ev, prm), res, step))
        if res < settings.refine_tol * scale:
            logger.info(f"Refinement converged after {iteration} Newton steps, λ={lam:.12g}")
            return _report("refine", CONVERGED, u, prm, thr, settings, iteration, trace)

        base, lam_now = u, lam

        def matvec(z, base=base, lam_now=lam_now):
            v = z[:size]
            hv = hessian_apply(base, Field(grid, v), prm).values + lam_now * v + z[size] * base.values
            return np.append(hv, np.dot(base.values, v))

        schur = float(np.dot(base.values, precondition(base.values)))

        def psolve(z):
            return np.append(precondition(z[:size]), z[size] / schur)

        op = LinearOperator((size + 1, size + 1), matvec=matvec, dtype=np.float64)
        pre = LinearOperator((size + 1, size + 1), matvec=psolve, dtype=np.float64)
        rhs = -np.append(r, 0.0)
        sol, info = minres(op, rhs, M=pre, rtol=settings.minres_rtol, maxiter=1000)
        if info < 0 or not np.all(np.isfinite(sol)):
            raise RefinementError(f"MINRES broke down at Newton step {iteration} (info={info})")

        du = sol[:size]
        step = 1.0
        for _ in range(settings.max_backtracks):
            candidate = u.with_values(u.values + step * du).normalized(prm.rho)
            ev_c = evaluate(candidate, prm)
            lam_c = multiplier_value(ev_c, prm)
            r_c = gradient_values(ev_c, prm) + lam_c * candidate.values
            if _l2(grid, r_c) < res:
                break
            step *= 0.5
        else:
            raise RefinementError(
                f"Newton step {iteration} cannot reduce the residual {res / scale:.2e}"
            )
        u, ev, lam = candidate, ev_c, lam_c

    raise RefinementError(f"Refinement did not converge in {settings.refine_max_iter} Newton steps")


# =============================================================================
# MOUNTAIN PASS
# =============================================================================

def _endpoint(u0: Field, prm: Params, thr: Thresholds, settings: SolverSettings):
    """Dilate u0 on its grid until the energy is negative beyond the barrier."""
    t = 1.0
    for _ in range(settings.max_dilations):
        t *= settings.dilation_factor
        v = dilate(u0, t, target=u0.grid).normalized(prm.rho)
        ev = evaluate(v, prm)
        if energy_value(ev, prm) < 0 and ev.gradient_sq > thr.x_star ** 2:
            return v, t
    raise ResolutionError(f"No admissible endpoint within {settings.max_dilations} dilations of the local minimizer")


def _dilation_path(u0: Field, end: Field, t_end: float, prm: Params, count: int) -> List[Field]:
    nodes = [u0]
    for j in range(1, count - 1):
        t = t_end ** (j / (count - 1))
        nodes.append(dilate(u0, t, target=u0.grid).normalized(prm.rho))
    nodes.append(end)
    return nodes


def _h1_seminorm(grid: Grid, A, values: np.ndarray) -> float:
    return float(np.sqrt(max(grid.weight * np.dot(values, A @ values), 0.0)))


def _redistribute(nodes: List[Field], energies: np.ndarray, weight: float, rho: float, A) -> List[Field]:
    """Respace nodes by energy-weighted H¹ arc length, endpoints fixed."""
    count = len(nodes)
    if count < 3:
        return nodes
    grid = nodes[0].grid
    seg = np.array([_h1_seminorm(grid, A, nodes[j + 1].values - nodes[j].values) for j in range(count - 1)])
    spread = energies.max() - energies.min()
    mid = 0.5 * (energies[1:] + energies[:-1])
    level = (mid - energies.min()) / spread if spread > 0 else np.zeros_like(mid)
    length = np.concatenate([[0.0], np.cumsum(seg * (1.0 + weight * level))])
    if length[-1] <= 0:
        return nodes
    length /= length[-1]

    respaced = [nodes[0]]
    for target in np.linspace(0.0, 1.0, count)[1:-1]:
        j = int(np.clip(np.searchsorted(length, target, side="right") - 1, 0, count - 2))
        width = length[j + 1] - length[j]
        f = (target - length[j]) / width if width > 0 else 0.0
        respaced.append(nodes[j].with_values((1.0 - f) * nodes[j].values + f * nodes[j + 1].values).normalized(rho))
    respaced.append(nodes[-1])
    return respaced


def _relax_path(
    nodes: List[Field],
    prm: Params,
    settings: SolverSettings,
    shift: float,
) -> MountainPassPath:
    """Climbing-image string iteration with fixed endpoints."""
    grid = nodes[0].grid
    A = dirichlet_matrix(grid)
    precondition = dirichlet_solver(grid, shift)
    count = len(nodes)
    evs = [evaluate(u, prm) for u in nodes]

    for iteration in range(1, settings.path_max_iter + 1):
        energies = np.array([energy_value(ev, prm) for ev in evs])
        m = int(np.argmax(energies))
        if m in (0, count - 1):
            return MountainPassPath(nodes, energies, m, prm.s)

        climb = np.inf
        for j in range(1, count - 1):
            u, ev = nodes[j], evs[j]
            lam = multiplier_value(ev, prm)
            r = gradient_values(ev, prm) + lam * u.values
            d = _tangent(grid, precondition(r), u)
            if j == m:
                v = _tangent(grid, nodes[j + 1].values - nodes[j - 1].values, u)
                norm = _h1_seminorm(grid, A, v)
                if norm > 0:
                    v = v / norm
                    d = d - 2.0 * grid.weight * np.dot(A @ d, v) * v
                climb = _l2(grid, r) / _l2(grid, ev.neg_laplacian)
            nodes[j] = u.with_values(u.values - settings.path_step * d).normalized(prm.rho)
            evs[j] = evaluate(nodes[j], prm)

        if climb < settings.climb_tol:
            logger.debug(f"Climbing image settled after {iteration} path iterations")
            break
        if iteration % settings.redistribute_every == 0:
            energies = np.array([energy_value(ev, prm) for ev in evs])
            m = int(np.argmax(energies))
            left = _redistribute(nodes[: m + 1], energies[: m + 1], settings.energy_weight, prm.rho, A)
            right = _redistribute(nodes[m:], energies[m:], settings.energy_weight, prm.rho, A)
            nodes = left + right[1:]
            evs = [evaluate(u, prm) for u in nodes]

    energies = np.array([energy_value(ev, prm) for ev in evs])
    return MountainPassPath(nodes, energies, int(np.argmax(energies)), prm.s)


def _degenerate(report0: SolveReport, prm: Params, path: MountainPassPath, settings: SolverSettings) -> SolveReport:
    u = path.nodes[path.max_index]
    thr = report0.thresholds
    report = _report("mp", LANDSCAPE_DEGENERATE, u, prm, thr, settings, 0, [])
    report.path = path
    return report


def solve_mountain_pass(
    grid: Grid,
    prm: Params,
    report0: SolveReport,
    settings: Optional[SolverSettings] = None,
    s_homotopy: bool = False,
    reference: bool = False,
) -> SolveReport:
    """Mountain-pass critical point above the local minimizer.

    Args:
        grid: Grid of Ω_R (the grid of report0)
        prm: Energy parameters
        report0: Converged local-minimum report with the interior certificate
        settings: Solver settings
        s_homotopy: Relax the path for each weight of ``settings.s_schedule`` in turn
        reference: Allow alpha = 0

    Returns:
        SolveReport in mode "mp" with the path and the mountain-pass certificates;
        status "landscape_degenerate" if the path maximum sits at an endpoint or the
        refined point falls back to the minimizer's level

    Raises:
        RefinementError: If the Newton refinement of the path maximum diverges
    """
    settings = settings or SolverSettings()
    _check_regime(prm, reference)
    if not report0.converged or not report0.certificates.interior:
        raise ParameterError("Mountain pass needs a converged local minimizer with the interior certificate")
    if report0.solution.grid != grid:
        raise ParameterError(f"Local minimizer lives on {report0.solution.grid}, not {grid}")
    thr = report0.thresholds
    u0 = report0.solution

    end, t_end = _endpoint(u0, prm, thr, settings)
    nodes = _dilation_path(u0, end, t_end, prm, settings.path_nodes)
    shift = max(multiplier_value(evaluate(nodes[len(nodes) // 2], prm), prm), 0.0)
    logger.info(f"Path endpoint at dilation {t_end:.4g}, {len(nodes)} nodes")

    weights = settings.s_schedule if s_homotopy else [prm.s]
    path = None
    for s in weights:
        prm_s = prm.replace(s=s)
        if energy_value(evaluate(nodes[-1], prm_s), prm_s) >= 0:
            end, t_end = _endpoint(u0, prm_s, thr, settings)
            nodes[-1] = end
        path = _relax_path(nodes, prm_s, settings, shift)
        nodes = path.nodes
        logger.info(f"s={s:g}: path maximum {path.max_energy:.10g} at node {path.max_index}")

    if path.max_index in (0, len(nodes) - 1):
        logger.warning("Path maximum sits at an endpoint")
        return _degenerate(report0, prm, path, settings)

    refined = solve_critical_point(grid, prm, nodes[path.max_index], settings, thr, reference)
    if refined.energy <= report0.energy:
        logger.warning(f"Refined point fell back to the minimizer level ({refined.energy:.10g})")
        return _degenerate(report0, prm, path, settings)

    m = path.max_index
    E_left = energy_value(evaluate(nodes[m - 1], prm), prm)
    E_right = energy_value(evaluate(nodes[m + 1], prm), prm)
    f_star = float(barrier(thr.x_star, prm, grid.R, thr.C_p))

    refined.mode = "mp"
    refined.path = path
    refined.certificates.above_barrier = refined.energy >= f_star
    refined.certificates.above_local_min = refined.energy > report0.energy
    refined.certificates.saddle_along_path = refined.energy > max(E_left, E_right)
    return refined


# =============================================================================
# GROUND STATE AND MASS PROBE
# =============================================================================

def ground_state_check(report0: SolveReport, report1: SolveReport, grid: Grid, prm: Params) -> bool:
    """Whether the local minimizer is the lowest critical point found and lies on the
    bounded-domain Pohozaev set."""
    if not grid.shape.star_shaped:
        logger.warning(f"{grid.shape.name} is not star-shaped; no ground-state check")
        return False
    if not (report0.converged and report1.converged):
        return False
    cert = certify(report0.solution, prm, report0.thresholds)
    return bool(report0.energy <= report1.energy and cert.pohozaev_ok)


def probe_critical_mass(
    shape,
    n: int,
    R: float,
    prm: Params,
    rho_values: Sequence[float],
    settings: Optional[SolverSettings] = None,
    alpha_cap: Optional[float] = None,
) -> ProbeResult:
    """Largest ρ (in increasing order) up to which the local-minimum certificates hold.

    Args:
        shape: Shape instance or name
        n: Nodes per axis
        R: Domain scale
        prm: Energy parameters (rho is replaced per row)
        rho_values: Masses to probe
        settings: Solver settings
        alpha_cap: If given, alpha = −alpha_cap·α*_{R,ρ} per row

    Returns:
        ProbeResult; empirical only
    """
    settings = settings or SolverSettings()
    grid = build_grid(resolve_shape(shape), R, n)
    lambda1 = unit_eigenpair(grid.shape, grid.n).lambda1

    rows: List[ProbeRow] = []
    critical = None
    failed = False
    for rho in sorted(rho_values):
        prm_r = prm.replace(rho=rho)
        try:
            thr = problem_thresholds(grid, prm_r, lambda1)
            if alpha_cap is not None:
                if not thr.admissible:
                    raise ParameterError(f"No admissible alpha at rho={rho:g}")
                prm_r = prm_r.replace(alpha=-alpha_cap * thr.alpha_star)
                thr = problem_thresholds(grid, prm_r, lambda1)
            report = solve_local_min(grid, prm_r, settings, thr)
            cert = report.certificates
            ok = report.converged and cert.interior and cert.pohozaev_ok and cert.energy_positive
            rows.append(ProbeRow(rho, prm_r.alpha, ok, report.energy, cert.gradient_norm, report.status))
        except LabError as e:
            ok = False
            rows.append(ProbeRow(rho, prm_r.alpha, False, None, None, str(e)))
        if ok and not failed:
            critical = rho
        failed = failed or not ok
        logger.info(f"probe rho={rho:g}: {'ok' if ok else 'fails'}")
    return ProbeResult(rows=rows, rho_critical=critical)
