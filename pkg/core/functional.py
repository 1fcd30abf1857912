"""Constrained energy, its gradient and Hessian action, the Lagrange multiplier and
the Pohozaev functionals on a bounded grid domain."""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline

from config import FLUX_CONFIG
from core.errors import ConstraintError, ParameterError
from core.grid import Field, check_same_grid, laplacian_values
from core.logkernel import chi_forms, convolve_density

logger = logging.getLogger(__name__)

# Relative mass tolerance under which a field counts as lying on the sphere.
MASS_RTOL = 1e-8


@dataclass(frozen=True)
class Params:
    """Parameters of the energy J̃_{R,s}.

    The p-term carries the weight beta·s: beta = 1 for the bounded-domain problem,
    s ∈ [1/2, 1] for the homotopy family.
    """
    p: float
    alpha: float
    rho: float
    beta: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if self.p <= 4:
            raise ParameterError(f"p must exceed 4, got {self.p}")
        if self.rho <= 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")
        if not 0.5 <= self.s <= 1.0:
            raise ParameterError(f"s must lie in [1/2, 1], got {self.s}")

    @property
    def weight(self) -> float:
        return self.beta * self.s

    def replace(self, **changes) -> "Params":
        data = asdict(self)
        data.update(changes)
        return Params(**data)


@dataclass
class EnergyBreakdown:
    """The energy pieces of one field plus its Pohozaev data."""
    kinetic: float
    logterm: float
    pterm: float
    total: float
    chi0: float
    chi1: float
    chi2: float
    mass: float
    pohozaev_interior: float
    boundary_flux: float
    lagrange_lambda: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Evaluation:
    """Shared intermediate quantities of one field.

    Solvers evaluate these once per iterate and derive energy, gradient and
    multiplier from them.
    """
    u: Field
    neg_laplacian: np.ndarray
    potential: np.ndarray
    gradient_sq: float
    chi0: float
    lp: float
    mass: float


def evaluate(u: Field, prm: Params) -> Evaluation:
    grid = u.grid
    neg_lap = laplacian_values(grid, u.values)
    potential = convolve_density(grid, u.values ** 2 * grid.weight, "chi0")
    return Evaluation(
        u=u,
        neg_laplacian=neg_lap,
        potential=potential,
        gradient_sq=float(grid.weight * np.dot(neg_lap, u.values)),
        chi0=float(grid.weight * np.dot(potential, u.values ** 2)),
        lp=u.lp(prm.p),
        mass=u.mass,
    )


def energy_value(ev: Evaluation, prm: Params) -> float:
    return 0.5 * ev.gradient_sq + 0.25 * prm.alpha * ev.chi0 - prm.weight / prm.p * ev.lp


def gradient_values(ev: Evaluation, prm: Params) -> np.ndarray:
    u = ev.u.values
    return ev.neg_laplacian + prm.alpha * ev.potential * u - prm.weight * np.abs(u) ** (prm.p - 2) * u


def multiplier_value(ev: Evaluation, prm: Params) -> float:
    return (prm.weight * ev.lp - ev.gradient_sq - prm.alpha * ev.chi0) / ev.mass


def energy(u: Field, prm: Params) -> EnergyBreakdown:
    """Full energy breakdown of a field.

    Args:
        u: Field on a grid (any mass)
        prm: Energy parameters

    Returns:
        EnergyBreakdown; ``lagrange_lambda`` is None unless mass(u) = prm.rho
    """
    ev = evaluate(u, prm)
    forms = chi_forms(u, u)
    kinetic = 0.5 * ev.gradient_sq
    logterm = 0.25 * prm.alpha * ev.chi0
    pterm = prm.weight / prm.p * ev.lp

    lam = None
    if abs(ev.mass - prm.rho) <= MASS_RTOL * prm.rho:
        lam = multiplier_value(ev, prm)

    return EnergyBreakdown(
        kinetic=kinetic,
        logterm=logterm,
        pterm=pterm,
        total=kinetic + logterm - pterm,
        chi0=ev.chi0,
        chi1=forms.chi1,
        chi2=forms.chi2,
        mass=ev.mass,
        pohozaev_interior=_pohozaev_from(ev, prm),
        boundary_flux=boundary_flux(u),
        lagrange_lambda=lam,
    )


def gradient(u: Field, prm: Params) -> Field:
    """Unconstrained L² gradient −Δu + α(log ∗ u²)u − s|u|^{p−2}u."""
    return Field(u.grid, gradient_values(evaluate(u, prm), prm))


def hessian_apply(u: Field, v: Field, prm: Params) -> Field:
    """Second variation of the energy at u applied to v."""
    check_same_grid(u, v)
    grid = u.grid
    uu, vv = u.values, v.values
    potential = convolve_density(grid, uu ** 2 * grid.weight, "chi0")
    cross = convolve_density(grid, uu * vv * grid.weight, "chi0")
    values = (
        laplacian_values(grid, vv)
        + prm.alpha * potential * vv
        + 2.0 * prm.alpha * cross * uu
        - prm.weight * (prm.p - 1) * np.abs(uu) ** (prm.p - 2) * vv
    )
    return Field(grid, values)


def lagrange_multiplier(u: Field, prm: Params) -> float:
    """λ from ⟨g, u⟩ + λρ = 0.

    Raises:
        ConstraintError: If mass(u) differs from rho by more than 1e-8 relative
    """
    ev = evaluate(u, prm)
    if abs(ev.mass - prm.rho) > MASS_RTOL * prm.rho:
        raise ConstraintError(f"Field mass {ev.mass:.12g} differs from rho={prm.rho:g}")
    return multiplier_value(ev, prm)


def _pohozaev_from(ev: Evaluation, prm: Params) -> float:
    return (
        ev.gradient_sq
        - prm.weight * (prm.p - 2) / prm.p * ev.lp
        - 0.25 * prm.alpha * ev.mass ** 2
    )


def pohozaev_interior(u: Field, prm: Params) -> float:
    """‖∇u‖² − s(p−2)/p‖u‖_p^p − αρ²/4 with ρ = mass(u)."""
    grid = u.grid
    gradient_sq = float(grid.weight * np.dot(laplacian_values(grid, u.values), u.values))
    mass = u.mass
    return gradient_sq - prm.weight * (prm.p - 2) / prm.p * u.lp(prm.p) - 0.25 * prm.alpha * mass ** 2


def boundary_flux(u: Field) -> float:
    """½∮|∂ₙu|²(x·n)dσ from one-sided normal differences.

    Grid-aligned boundaries use ``one_sided_flux``, curved ones ``normal_flux``.
    Every term is |∂ₙu|²(x·n)dσ, so the flux is nonnegative on domains
    star-shaped about the origin.
    """
    if u.grid.shape.grid_aligned:
        return one_sided_flux(u)
    return normal_flux(u)


def normal_flux(u: Field, offset_cells: Optional[float] = None) -> float:
    """½∮|∂ₙu|²(x·n)dσ from u sampled along the inward normals of ∂Ω_R.

    u is interpolated bilinearly below each boundary node (d = offset_cells·h).
    The quadratic through the values at depths d, 2d, 3d gives ∂ₙu up to O(d²);
    the same fit at 2d, 4d, 6d removes that term by one Richardson step. The
    masked lattice vanishes on a staircase, not on ∂Ω_R, so the fit does not pin
    u to zero on the boundary.

    Args:
        u: Field on any grid
        offset_cells: Sampling depth in grid spacings (default from FLUX_CONFIG)

    Returns:
        Nonnegative flux on star-shaped domains
    """
    cfg = FLUX_CONFIG
    grid = u.grid
    depth = (offset_cells or cfg["offset_cells"]) * grid.h
    count = max(cfg["min_samples"], cfg["samples_per_node"] * grid.n)

    points, normals, weights = grid.shape.boundary_samples(count)
    points = grid.R * points
    weights = grid.R * weights
    support = np.einsum("ij,ij->i", points, normals)

    spline = RectBivariateSpline(grid.axis, grid.axis, grid.embed(u.values), kx=1, ky=1)
    u_at = {k: spline.ev(*(points - k * depth * normals).T) for k in (1, 2, 3, 4, 6)}
    fine = (-5.0 * u_at[1] + 8.0 * u_at[2] - 3.0 * u_at[3]) / (2.0 * depth)
    coarse = (-5.0 * u_at[2] + 8.0 * u_at[4] - 3.0 * u_at[6]) / (4.0 * depth)
    slope = (4.0 * fine - coarse) / 3.0
    return 0.5 * float(np.sum(slope ** 2 * support * weights))


def one_sided_flux(u: Field) -> float:
    """½∮|∂ₙu|²(x·n)dσ on the square from quadratic one-sided normal differences.

    The fit passes through the boundary zero and the first two interior values
    along each edge normal.

    Raises:
        ParameterError: If the grid boundary is not grid-aligned
    """
    grid = u.grid
    if not grid.shape.grid_aligned:
        raise ParameterError(f"One-sided flux needs a grid-aligned boundary, got {grid.shape.name}")

    U = grid.embed(u.values)
    edges = [
        (U[1, :], U[2, :]),
        (U[-2, :], U[-3, :]),
        (U[:, 1], U[:, 2]),
        (U[:, -2], U[:, -3]),
    ]
    x_dot_n = grid.side / 2.0
    total = 0.0
    for first, second in edges:
        normal = (4.0 * first - second) / (2.0 * grid.h)
        total += grid.h * float(np.sum(normal ** 2))
    return 0.5 * x_dot_n * total


def pohozaev_boundary(u: Field, prm: Params) -> Tuple[float, float]:
    """Bounded-domain Pohozaev residual and boundary flux.

    Returns:
        Tuple of (pohozaev_interior(u) − flux, flux)
    """
    flux = boundary_flux(u)
    return pohozaev_interior(u, prm) - flux, flux


def energy_on_pohozaev(u: Field, prm: Params, flux: float = 0.0) -> float:
    """Energy rewritten with the Pohozaev relation P(u) = flux.

    J = (p−4)/(2(p−2))‖∇u‖² + (α/4)χ₀ + αρ²/(4(p−2)) + flux/(p−2)
    """
    ev = evaluate(u, prm)
    p = prm.p
    return (
        (p - 4) / (2 * (p - 2)) * ev.gradient_sq
        + 0.25 * prm.alpha * ev.chi0
        + prm.alpha * ev.mass ** 2 / (4 * (p - 2))
        + flux / (p - 2)
    )


def multiplier_bound(
    u: Field,
    prm: Params,
    R: float,
    c_p: float,
    c_hls: float,
    c_83: float,
) -> float:
    """A-priori bound on |λ| for fields on the mass sphere of Ω_R.

    |λ|ρ ≤ ‖∇u‖² + |α|ρ²log(1+R) + |α|𝒞𝒞_{8/3}^{3/2}ρ^{3/2}‖∇u‖ + s𝒞_pρ‖∇u‖^{p−2}
    """
    g = np.sqrt(u.gradient_sq)
    rho = prm.rho
    a = abs(prm.alpha)
    bound = (
        g ** 2
        + a * rho ** 2 * np.log1p(R)
        + a * c_hls * c_83 ** 1.5 * rho ** 1.5 * g
        + prm.weight * c_p * rho * g ** (prm.p - 2)
    )
    return float(bound / rho)
