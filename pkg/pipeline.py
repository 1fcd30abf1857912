"""Experiment drivers behind the CLI subcommands.

Each ``run_*`` function takes a RunConfig, performs the computation and returns
result objects; writing artifacts and printing is left to the caller.
"""

import logging
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline

from config import SEQUENCE_CONFIG, RunConfig
from core.errors import LabError, ParameterError
from core.fieldio import read_field, write_field
from core.grid import Field, Grid, build_grid, nodes_for_spacing, random_bumps, unit_eigenpair
from modules.constants import Thresholds
from modules.fibration import FiberScan, fiber_scan
from modules.limit import DecayCertificate, LimitSolution, decay_certificate, h1_distance, limit_solution
from modules.sequences import LandscapeTable, landscape_table, profile_pair
from modules.solvers import (
    ProbeResult,
    SolveReport,
    ground_state_check,
    probe_critical_mass,
    problem_thresholds,
    solve_critical_point,
    solve_local_min,
    solve_mountain_pass,
)

logger = logging.getLogger(__name__)


@dataclass
class AsymptoticsRow:
    """One domain scale of the large-R sweep."""
    R: float
    alpha: Optional[float] = None
    C_min: Optional[float] = None
    grad_min: Optional[float] = None
    lambda_mp: Optional[float] = None
    lambda_gap: Optional[float] = None
    h1_distance: Optional[float] = None
    mp_energy: Optional[float] = None
    status: str = "failed"
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class AsymptoticsTable:
    """Sweep rows plus the limit they are measured against.

    ``lambda_reference`` is the multiplier of the discrete α = 0 solution at the
    sweep's spacing when one is configured, else the whole-plane λ̄_ρ.
    """
    rows: List[AsymptoticsRow]
    lambda_bar: float
    m_rho: float
    decreasing: Dict[str, bool] = field(default_factory=dict)
    lambda_reference: Optional[float] = None
    spacing: Optional[float] = None

    @property
    def failed(self) -> int:
        return sum(1 for row in self.rows if not row.ok)


@dataclass
class SolveOutcome:
    thresholds: Thresholds
    local_min: SolveReport
    mountain_pass: Optional[SolveReport] = None
    ground_state: Optional[bool] = None


def _strictly_decreasing(values: List[Optional[float]]) -> bool:
    if len(values) < 2 or any(v is None for v in values):
        return False
    return all(b < a for a, b in zip(values, values[1:]))


def resolve_alpha(cfg: RunConfig, thr: Thresholds) -> float:
    """Coupling of a run: the configured alpha, capped at −alpha_cap·α* toward 0.

    Raises:
        ParameterError: If no admissible coupling exists for (R, ρ)
    """
    if not thr.admissible:
        raise ParameterError(
            f"No admissible alpha at R={thr.R:g}, rho={thr.rho:g} (R0={thr.R0:.4g}, alpha*={thr.alpha_star:.4g})"
        )
    cap = -cfg.alpha_cap * thr.alpha_star
    return cap if cfg.alpha is None else max(cfg.alpha, cap)


def run_constants(cfg: RunConfig) -> Thresholds:
    """Thresholds of (p, ρ, R) with the discrete λ₁ of the configured grid."""
    grid = build_grid(cfg.shape, cfg.R, cfg.n)
    lambda1 = unit_eigenpair(grid.shape, grid.n).lambda1
    prm = cfg.params(alpha=0.0 if cfg.alpha is None else cfg.alpha)
    return problem_thresholds(grid, prm, lambda1)


def run_fibration(cfg: RunConfig) -> Tuple[Field, FiberScan]:
    """Fiber scan of a seeded random field on the configured grid."""
    grid = build_grid(cfg.shape, cfg.R, cfg.n)
    u = random_bumps(grid, np.random.default_rng(cfg.seed), rho=cfg.rho)
    alpha = cfg.alpha
    if alpha is None:
        alpha = resolve_alpha(cfg, run_constants(cfg))
    return u, fiber_scan(u, cfg.params(alpha=alpha), tuple(cfg.t_range))


def run_landscape(cfg: RunConfig) -> Dict[str, LandscapeTable]:
    """Energies of both bump families on the Pohozaev manifold."""
    alpha = SEQUENCE_CONFIG["default_alpha"] if cfg.alpha is None else cfg.alpha
    prm = cfg.params(alpha=alpha)
    psi = profile_pair(cfg.shape, cfg.p, cfg.rho, cfg.psi_nodes)
    return {
        "V": landscape_table(psi, prm, "V", list(cfg.v_values)),
        "W": landscape_table(psi, prm, "W", list(cfg.w_values)),
    }


def run_solve(cfg: RunConfig) -> SolveOutcome:
    """Local minimizer, and in mode "mp" the mountain-pass solution."""
    grid = build_grid(cfg.shape, cfg.R, cfg.n)
    lambda1 = unit_eigenpair(grid.shape, grid.n).lambda1
    thr0 = problem_thresholds(grid, cfg.params(alpha=0.0), lambda1)
    prm = cfg.params(alpha=resolve_alpha(cfg, thr0))
    thr = problem_thresholds(grid, prm, lambda1)

    report0 = solve_local_min(grid, prm, cfg.solver, thr)
    outcome = SolveOutcome(thresholds=thr, local_min=report0)
    if cfg.mode == "mp":
        outcome.mountain_pass = solve_mountain_pass(grid, prm, report0, cfg.solver, cfg.s_homotopy)
        outcome.ground_state = ground_state_check(report0, outcome.mountain_pass, grid, prm)
    return outcome


def run_limit(cfg: RunConfig) -> Tuple[LimitSolution, DecayCertificate]:
    sol = limit_solution(cfg.p, cfg.rho)
    return sol, decay_certificate(sol)


def run_probe(cfg: RunConfig) -> ProbeResult:
    prm = cfg.params()
    cap = None if cfg.alpha is not None else cfg.alpha_cap
    return probe_critical_mass(cfg.shape, cfg.n, cfg.R, prm, cfg.rho_values, cfg.solver, cap)


def mass_center(u: Field) -> Tuple[float, float]:
    """Centroid of the density u²."""
    x, y = u.grid.coords
    w = u.values ** 2
    return float(np.dot(w, x) / w.sum()), float(np.dot(w, y) / w.sum())


def sweep_grid(cfg: RunConfig, R: float) -> Grid:
    """Grid of one sweep row: cfg.n nodes, or a fixed spacing when one is set."""
    n = cfg.n if cfg.spacing is None else nodes_for_spacing(cfg.shape, R, cfg.spacing)
    return build_grid(cfg.shape, R, n)


def transfer(u: Field, grid: Grid, center: Tuple[float, float] = (0.0, 0.0)) -> Field:
    """Cubic-spline transfer of u, shifted to ``center``, onto another grid.

    Nodal values are reproduced exactly where the two lattices coincide.
    """
    source = u.grid
    spline = RectBivariateSpline(source.axis, source.axis, source.embed(u.values), kx=3, ky=3)
    half = source.side / 2.0
    x, y = grid.coords
    sx = np.clip(x - center[0], -half, half)
    sy = np.clip(y - center[1], -half, half)
    return Field(grid, spline.ev(sx, sy))


def discrete_limit(cfg: RunConfig, limit: LimitSolution) -> Optional[SolveReport]:
    """α = 0 solution on the widest sweep grid, started from ū_ρ.

    Returns:
        The converged report, or None without a configured spacing or when the
        refinement fails
    """
    if cfg.spacing is None or not cfg.R_values:
        return None
    grid = sweep_grid(cfg, max(cfg.R_values))
    try:
        report = solve_critical_point(grid, cfg.params(alpha=0.0), limit.sample_on(grid), cfg.solver, reference=True)
    except LabError as e:
        logger.warning(f"Discrete limit on {grid} failed: {e}; comparing against the whole-plane limit")
        return None
    logger.info(f"Discrete limit on {grid}: λ={report.lagrange_lambda:.10g} (λ̄={limit.lambda_bar:.10g})")
    return report


def _asymptotics_row(
    cfg: RunConfig,
    R: float,
    limit: LimitSolution,
    reference: Optional[SolveReport] = None,
) -> AsymptoticsRow:
    row = AsymptoticsRow(R=R)
    try:
        grid = sweep_grid(cfg, R)
        lambda1 = unit_eigenpair(grid.shape, grid.n).lambda1
        thr0 = problem_thresholds(grid, cfg.params(alpha=0.0), lambda1)
        prm = cfg.params(alpha=resolve_alpha(cfg, thr0))
        thr = problem_thresholds(grid, prm, lambda1)
        row.alpha = prm.alpha

        report0 = solve_local_min(grid, prm, cfg.solver, thr)
        row.C_min = report0.energy
        row.grad_min = report0.certificates.gradient_norm

        report1 = solve_mountain_pass(grid, prm, report0, cfg.solver, cfg.s_homotopy)
        if not report1.converged:
            raise LabError(f"Mountain pass ended with status {report1.status}")
        row.mp_energy = report1.energy
        row.lambda_mp = report1.lagrange_lambda
        center = mass_center(report1.solution)
        if reference is None:
            row.lambda_gap = abs(report1.lagrange_lambda - limit.lambda_bar)
            target = limit.sample_on(grid, center)
        else:
            row.lambda_gap = abs(report1.lagrange_lambda - reference.lagrange_lambda)
            target = transfer(reference.solution, grid, center)
        row.h1_distance = h1_distance(report1.solution, target)
        row.status = "ok"
    except LabError as e:
        logger.warning(f"Asymptotics row R={R:g} failed: {e}")
        row.message = str(e)
    return row


def run_asymptotics(
    cfg: RunConfig,
    on_row: Optional[Callable[[AsymptoticsRow], None]] = None,
) -> AsymptoticsTable:
    """Large-R sweep of both solutions against the whole-plane limit.

    With ``cfg.spacing`` set every row keeps that grid spacing, and the λ gap and
    H¹ distance are measured against the discrete α = 0 solution at the same
    spacing. Rows run concurrently up to ``cfg.workers`` (one worker in
    deterministic mode); a failing row is flagged, the sweep continues and every
    monotonicity flag of the table is false.
    """
    limit = limit_solution(cfg.p, cfg.rho)
    reference = discrete_limit(cfg, limit)
    workers = 1 if cfg.deterministic else max(1, cfg.workers)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_asymptotics_row, cfg, R, limit, reference) for R in cfg.R_values]
        rows = []
        for future in futures:
            row = future.result()
            rows.append(row)
            if on_row:
                on_row(row)
    rows.sort(key=lambda r: r.R)

    decreasing = {
        name: _strictly_decreasing([getattr(r, name) if r.ok else None for r in rows])
        for name in ("C_min", "grad_min", "lambda_gap", "h1_distance")
    }
    return AsymptoticsTable(
        rows=rows,
        lambda_bar=limit.lambda_bar,
        m_rho=limit.m_rho,
        decreasing=decreasing,
        lambda_reference=limit.lambda_bar if reference is None else reference.lagrange_lambda,
        spacing=cfg.spacing,
    )


def io_roundtrip(u: Field) -> Field:
    """Write a field to a temporary directory and read it back."""
    with tempfile.TemporaryDirectory() as tmp:
        path = write_field(u, Path(tmp) / "field.json")
        return read_field(path)
