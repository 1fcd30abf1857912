"""Logarithmic convolution kernels and the χ₀, χ₁, χ₂ bilinear forms.

Three radial kernels are supported:

    chi0: log r
    chi1: log(1 + r)
    chi2: log(1 + 1/r)

so that chi0 = chi1 − chi2. At zero separation the kernel takes its average over
one grid cell centred at the origin. Convolutions run either through a
zero-padded FFT (free-space, exact for the sampled kernel) or through an explicit
kernel matrix kept for reference checks on small grids.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict

import numpy as np
from scipy.fft import irfft2, next_fast_len, rfft2
from scipy.integrate import dblquad
from scipy.spatial.distance import cdist

from config import KERNEL_CONFIG
from core.errors import LabError, OracleTooLargeError, ParameterError
from core.grid import Field, Grid, check_same_grid

logger = logging.getLogger(__name__)

KERNELS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "chi0": np.log,
    "chi1": np.log1p,
    "chi2": lambda r: np.log1p(1.0 / r),
}


@dataclass
class ChiForms:
    """Values of the three bilinear forms on (u², v²)."""
    chi0: float
    chi1: float
    chi2: float


@dataclass
class KernelMatrix:
    """Dense symmetric kernel table over the interior nodes of a grid."""
    grid: Grid
    kind: str
    table: np.ndarray

    def apply(self, density: np.ndarray) -> np.ndarray:
        return self.table @ density


def _kernel(kind: str) -> Callable[[np.ndarray], np.ndarray]:
    if kind not in KERNELS:
        raise ParameterError(f"Unknown kernel: {kind} (available: {', '.join(KERNELS)})")
    return KERNELS[kind]


@lru_cache(maxsize=64)
def cell_average(kind: str, h: float) -> float:
    """Average of the kernel over the square cell [−h/2, h/2]².

    By symmetry the cell splits into 8 triangles; on each the integral is taken in
    polar coordinates, r from 0 to h/(2 cos θ), θ from 0 to π/4.
    """
    k = _kernel(kind)

    def integrand(r, theta):
        if r == 0.0:
            return 0.0
        return float(k(np.float64(r))) * r

    value, _ = dblquad(
        integrand,
        0.0,
        np.pi / 4.0,
        0.0,
        lambda theta: h / (2.0 * np.cos(theta)),
        epsabs=KERNEL_CONFIG["cell_epsabs"],
        epsrel=KERNEL_CONFIG["cell_epsrel"],
    )
    return 8.0 * value / h ** 2


def log_cell_average_exact(h: float) -> float:
    """Closed form of ``cell_average('chi0', h)``."""
    return np.log(h) - 0.5 * np.log(2.0) - 1.5 + np.pi / 4.0


def _sampled_kernel(kind: str, n: int, h: float) -> np.ndarray:
    """Kernel on the offsets −(n−1)..(n−1) per axis, diagonal regularized."""
    d = np.arange(-(n - 1), n)
    DX, DY = np.meshgrid(d, d, indexing="ij")
    r = h * np.hypot(DX, DY)
    values = np.empty_like(r)
    nonzero = r > 0
    values[nonzero] = _kernel(kind)(r[nonzero])
    values[~nonzero] = cell_average(kind, h)
    return values


@lru_cache(maxsize=32)
def _kernel_spectrum(kind: str, n: int, h: float):
    N = next_fast_len(2 * n - 1)
    offsets = np.arange(-(n - 1), n) % N
    table = np.zeros((N, N))
    table[np.ix_(offsets, offsets)] = _sampled_kernel(kind, n, h)
    return N, rfft2(table)


def convolve_density(grid: Grid, density: np.ndarray, kind: str = "chi0") -> np.ndarray:
    """Free-space discrete convolution Σ_j K(x_i − x_j) q_j at the interior nodes.

    Args:
        grid: Grid the density lives on
        density: Nodal masses q_j over the interior nodes (already weighted by h²)
        kind: Kernel name

    Returns:
        Convolution values over the interior nodes
    """
    N, spectrum = _kernel_spectrum(kind, grid.n, grid.h)
    padded = rfft2(grid.embed(density), s=(N, N))
    full = irfft2(padded * spectrum, s=(N, N))
    return grid.restrict(full[: grid.n, : grid.n])


def log_convolve(u: Field, kind: str = "chi0") -> Field:
    """(K ∗ u²) at the interior nodes through the FFT path."""
    density = u.values ** 2 * u.grid.weight
    return Field(u.grid, convolve_density(u.grid, density, kind))


def kernel_matrix(grid: Grid, kind: str = "chi0") -> KernelMatrix:
    """Materialize the dense kernel table (reference path, small grids only)."""
    if grid.size > KERNEL_CONFIG["dense_max_nodes"]:
        raise OracleTooLargeError(
            f"Kernel matrix needs {grid.size} interior nodes, limit is {KERNEL_CONFIG['dense_max_nodes']}"
        )
    x, y = grid.coords
    points = np.column_stack([x, y])
    r = cdist(points, points)
    table = np.empty_like(r)
    off = ~np.eye(grid.size, dtype=bool)
    table[off] = _kernel(kind)(r[off])
    np.fill_diagonal(table, cell_average(kind, grid.h))
    return KernelMatrix(grid=grid, kind=kind, table=table)


def dense_log_convolve(u: Field, kind: str = "chi0") -> Field:
    """Reference path of ``log_convolve`` through the kernel matrix."""
    K = kernel_matrix(u.grid, kind)
    return Field(u.grid, K.apply(u.values ** 2 * u.grid.weight))


def chi0(u: Field) -> float:
    """χ₀(u², u²) through the FFT path."""
    return float(u.grid.weight * np.dot(log_convolve(u).values, u.values ** 2))


def chi_forms(u: Field, v: Field) -> ChiForms:
    """All three bilinear forms on (u², v²), each from its own kernel.

    Raises:
        GridMismatchError: If u and v live on different grids
    """
    check_same_grid(u, v)
    grid = u.grid
    density = u.values ** 2 * grid.weight
    target = v.values ** 2 * grid.weight

    values = {
        kind: float(np.dot(convolve_density(grid, density, kind), target))
        for kind in ("chi0", "chi1", "chi2")
    }
    forms = ChiForms(**values)

    gap = abs(forms.chi0 - (forms.chi1 - forms.chi2))
    scale = abs(forms.chi1) + abs(forms.chi2)
    if gap > KERNEL_CONFIG["identity_rtol"] * scale:
        raise LabError(f"Kernel identity chi0 = chi1 - chi2 violated by {gap:.3e} (scale {scale:.3e})")
    return forms


def brute_force_chi0(u: Field) -> float:
    """Plain double loop over node pairs with the same diagonal rule.

    Raises:
        OracleTooLargeError: Above the configured node count
    """
    grid = u.grid
    if grid.size > KERNEL_CONFIG["brute_force_max_nodes"]:
        raise OracleTooLargeError(
            f"Brute-force oracle needs {grid.size} nodes, limit is {KERNEL_CONFIG['brute_force_max_nodes']}"
        )
    x, y = grid.coords
    q = u.values ** 2 * grid.weight
    diagonal = cell_average("chi0", grid.h)

    total = 0.0
    for i in range(grid.size):
        r = np.hypot(x - x[i], y - y[i])
        r[i] = 1.0
        row = np.log(r)
        row[i] = diagonal
        total += q[i] * float(np.dot(row, q))
    return total
