"""Discrete domains, fields, the Dirichlet Laplacian and the principal eigenpair."""

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, cg, splu

from config import BUMP_CONFIG, EIGEN_CONFIG
from core.errors import DegenerateGridError, GridMismatchError, IterationLimitError, ParameterError
from shapes.base import BaseShape
from shapes.registry import registry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    """Uniform lattice over the bounding box of Ω_R = R·Ω with a strict interior mask.

    Node values are stored for interior nodes only, in C order of the (i, j) lattice
    (i indexes x). Every other node carries the Dirichlet value 0.
    """
    shape: BaseShape
    R: float
    n: int

    @cached_property
    def side(self) -> float:
        """Side of the bounding box of Ω_R."""
        return 2.0 * self.R * self.shape.half_extent

    @cached_property
    def h(self) -> float:
        return self.side / (self.n - 1)

    @cached_property
    def weight(self) -> float:
        """Quadrature weight of one node."""
        return self.h ** 2

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.side / 2.0, self.side / 2.0, self.n)

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    @cached_property
    def mask(self) -> np.ndarray:
        X, Y = self.mesh
        return self.shape.contains(X / self.R, Y / self.R)

    @cached_property
    def index(self) -> np.ndarray:
        """Flat lattice indices of the interior nodes."""
        return np.flatnonzero(self.mask)

    @cached_property
    def size(self) -> int:
        return int(self.index.size)

    @cached_property
    def coords(self) -> Tuple[np.ndarray, np.ndarray]:
        X, Y = self.mesh
        return X.ravel()[self.index], Y.ravel()[self.index]

    @property
    def area(self) -> float:
        """Measure of Ω_R."""
        return self.shape.area * self.R ** 2

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Scatter interior values onto the full n×n lattice (zeros elsewhere)."""
        full = np.zeros(self.n * self.n)
        full[self.index] = values
        return full.reshape(self.n, self.n)

    def restrict(self, array: np.ndarray) -> np.ndarray:
        """Gather interior values from a full n×n lattice array."""
        return np.asarray(array).ravel()[self.index]

    def scaled(self, R: float) -> "Grid":
        """Same shape and node count at a different scale."""
        return build_grid(self.shape, R, self.n)

    def __repr__(self) -> str:
        return f"Grid({self.shape.name}, R={self.R:g}, n={self.n}, interior={self.size})"


@dataclass
class Field:
    """Real values on the interior nodes of a grid."""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.size,):
            raise ParameterError(
                f"Field has {self.values.shape} values, grid {self.grid} needs ({self.grid.size},)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("Field values must be finite")

    @property
    def mass(self) -> float:
        """∫u² by node quadrature."""
        return float(self.grid.weight * np.dot(self.values, self.values))

    def lp(self, p: float) -> float:
        """‖u‖_p^p by node quadrature."""
        return float(self.grid.weight * np.sum(np.abs(self.values) ** p))

    def inner(self, other: "Field") -> float:
        check_same_grid(self, other)
        return float(self.grid.weight * np.dot(self.values, other.values))

    @property
    def l2(self) -> float:
        return float(np.sqrt(self.mass))

    @property
    def gradient_sq(self) -> float:
        """‖∇u‖² as ⟨−Δu, u⟩ (summation by parts)."""
        return float(self.grid.weight * np.dot(laplacian_values(self.grid, self.values), self.values))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)

    def scaled(self, factor: float) -> "Field":
        return Field(self.grid, factor * self.values)

    def normalized(self, rho: float) -> "Field":
        """Multiplicative projection onto the mass sphere ∫u² = rho."""
        mass = self.mass
        if mass <= 0:
            raise ParameterError("Cannot normalize a zero field")
        return Field(self.grid, self.values * np.sqrt(rho / mass))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


@dataclass
class EigenPair:
    """Principal Dirichlet eigenpair with ψ normalized to mass rho."""
    lambda1: float
    psi: Field
    residual: float
    iterations: int

    @property
    def rho(self) -> float:
        return self.psi.mass


def check_same_grid(*fields: Field):
    """Raise GridMismatchError unless all fields share one grid."""
    first = fields[0].grid
    for other in fields[1:]:
        if other.grid != first:
            raise GridMismatchError(f"Fields live on different grids: {first} vs {other.grid}")


def resolve_shape(shape: Union[str, BaseShape]) -> BaseShape:
    if isinstance(shape, BaseShape):
        return shape
    return registry.get(shape)


def build_grid(shape: Union[str, BaseShape], R: float, n: int) -> Grid:
    """Build the lattice for Ω_R.

    Grids below ``EIGEN_CONFIG["min_nodes"]`` nodes per axis are still built, with
    a logged warning; accuracy checks on them are the caller's concern.

    Args:
        shape: Shape instance or registered shape name
        R: Scale factor of the domain
        n: Nodes per axis

    Returns:
        Grid with at least one interior node

    Raises:
        ParameterError: If R is not positive or n is not an integer >= 2
        DegenerateGridError: If no node lies strictly inside Ω_R
    """
    shape = resolve_shape(shape)
    if R <= 0:
        raise ParameterError(f"R must be positive, got {R}")
    if int(n) != n or n < 2:
        raise ParameterError(f"n must be an integer >= 2, got {n}")
    if n < EIGEN_CONFIG["min_nodes"]:
        logger.warning(f"Grid with n={n} is below the recommended {EIGEN_CONFIG['min_nodes']} nodes per axis")

    grid = Grid(shape, float(R), int(n))
    if grid.size == 0:
        raise DegenerateGridError(f"No interior node for {shape.name} with R={R}, n={n}")
    return grid


def nodes_for_spacing(shape: Union[str, BaseShape], R: float, spacing: float) -> int:
    """Smallest odd node count whose grid on Ω_R has h <= spacing.

    Grids of one shape built this way share the node set around the origin when
    their bounding-box sides are multiples of 2·spacing.
    """
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    side = 2.0 * R * resolve_shape(shape).half_extent
    half_cells = int(np.ceil(side / (2.0 * spacing) - 1e-9))
    return 2 * max(half_cells, 1) + 1


def laplacian_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """5-point −Δ_h of interior values with zero extension outside the mask."""
    U = np.pad(grid.embed(values), 1)
    L = (4.0 * U[1:-1, 1:-1] - U[:-2, 1:-1] - U[2:, 1:-1] - U[1:-1, :-2] - U[1:-1, 2:]) / grid.h ** 2
    return grid.restrict(L)


def laplacian_apply(u: Field) -> Field:
    """−Δu by the masked 5-point stencil."""
    return Field(u.grid, laplacian_values(u.grid, u.values))


@lru_cache(maxsize=16)
def dirichlet_matrix(grid: Grid) -> sparse.csr_matrix:
    """Sparse −Δ_h restricted to the interior nodes."""
    n = grid.n
    T = sparse.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    I = sparse.identity(n)
    full = (sparse.kron(T, I) + sparse.kron(I, T)).tocsr() / grid.h ** 2
    return full[grid.index][:, grid.index].tocsr()


@lru_cache(maxsize=16)
def dirichlet_solver(grid: Grid, shift: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """Cached LU solve of (−Δ_h + shift)x = b."""
    A = dirichlet_matrix(grid)
    if shift:
        A = A + shift * sparse.identity(grid.size, format="csr")
    lu = splu(A.tocsc())
    return lu.solve


def principal_eigenpair(grid: Grid, rho: float = 1.0) -> EigenPair:
    """Principal eigenpair of the masked Dirichlet Laplacian.

    Inverse power iteration; each inner solve is a Jacobi-preconditioned conjugate
    gradient warm-started from the previous iterate.

    Args:
        grid: Grid of the domain (usually R = 1)
        rho: Mass of the returned eigenfunction

    Returns:
        EigenPair with ψ > 0 and ∫ψ² = rho
    """
    if rho <= 0:
        raise ParameterError(f"rho must be positive, got {rho}")

    A = dirichlet_matrix(grid)
    inv_diag = 1.0 / A.diagonal()
    jacobi = LinearOperator(A.shape, matvec=lambda b: inv_diag * b, dtype=np.float64)

    x_coord, y_coord = grid.coords
    x = np.cos(np.pi * x_coord / grid.side) * np.cos(np.pi * y_coord / grid.side)
    x /= np.linalg.norm(x)
    lam = float(x @ (A @ x))

    residual = np.inf
    for iteration in range(1, EIGEN_CONFIG["max_iter"] + 1):
        y, info = cg(A, x, x0=x / lam, rtol=EIGEN_CONFIG["cg_rtol"], M=jacobi, maxiter=10 * grid.size)
        if info < 0:
            raise IterationLimitError(f"Inner CG solve broke down (info={info})")
        x = y / np.linalg.norm(y)
        Ax = A @ x
        lam = float(x @ Ax)
        residual = float(np.linalg.norm(Ax - lam * x)) / lam
        if residual < EIGEN_CONFIG["tol"]:
            break
    else:
        raise IterationLimitError(
            f"Eigen iteration did not converge in {EIGEN_CONFIG['max_iter']} steps (residual {residual:.2e})"
        )

    if x.mean() < 0:
        x = -x
    psi = Field(grid, x).normalized(rho)
    logger.debug(f"λ₁={lam:.10f} on {grid} after {iteration} iterations")
    return EigenPair(lambda1=lam, psi=psi, residual=residual, iterations=iteration)


@lru_cache(maxsize=16)
def unit_eigenpair(shape: BaseShape, n: int) -> EigenPair:
    """Cached principal eigenpair of Ω (R = 1, rho = 1)."""
    return principal_eigenpair(build_grid(shape, 1.0, n), 1.0)


def scaled_eigenfunction(grid: Grid, rho: float) -> Field:
    """ψ_R(x) = R⁻¹ψ(R⁻¹x) on Ω_R with mass rho.

    The R = 1 and R grids with equal n share their node indexing, so the scaling is
    exact. The corresponding eigenvalue is ``unit_eigenpair(...).lambda1 / R**2``.
    """
    pair = unit_eigenpair(grid.shape, grid.n)
    return Field(grid, pair.psi.values * np.sqrt(rho) / grid.R)


def random_bumps(
    grid: Grid,
    rng: np.random.Generator,
    count: Optional[int] = None,
    rho: Optional[float] = None,
) -> Field:
    """Smooth random field: Gaussian bumps times a boundary cutoff.

    Args:
        grid: Target grid
        rng: Random generator
        count: Number of bumps (default from BUMP_CONFIG)
        rho: Optional mass to normalize to

    Returns:
        Field whose features span at least a few grid spacings
    """
    count = count or BUMP_CONFIG["count"]
    x, y = grid.coords
    w_min = max(BUMP_CONFIG["min_width_cells"] * grid.h, 0.05 * grid.R)
    reach = BUMP_CONFIG["center_fraction"] * grid.R

    values = np.zeros(grid.size)
    for _ in range(count):
        cx, cy = rng.uniform(-reach, reach, size=2)
        width = rng.uniform(w_min, 2.0 * w_min)
        amplitude = rng.uniform(0.5, 1.5)
        values += amplitude * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * width ** 2))
    values *= grid.shape.bubble(x / grid.R, y / grid.R)

    field = Field(grid, values)
    return field.normalized(rho) if rho is not None else field
