"""Mass-preserving dilations u_t(x) = t·u(tx) and the fiber map h_u(t) = J(u_t).

Along the fiber every energy piece follows a scaling law, so h_u is fixed by four
numbers of u: ‖∇u‖², χ₀(u², u²), ‖u‖_p^p and ρ.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import bisect

from config import FIBER_CONFIG
from core.errors import BracketError, ConstraintError, ParameterError, ResolutionError
from core.functional import MASS_RTOL, Params
from core.grid import Field, Grid, build_grid
from core.logkernel import chi0

logger = logging.getLogger(__name__)


@dataclass
class FiberInvariants:
    """‖∇u‖², χ₀(u², u²), ‖u‖_p^p and the mass of one field."""
    K: float
    X: float
    P: float
    rho: float

    @classmethod
    def of(cls, u: Field, p: float) -> "FiberInvariants":
        return cls(K=u.gradient_sq, X=chi0(u), P=u.lp(p), rho=u.mass)

    def dilated(self, t: float, p: float) -> "FiberInvariants":
        """Invariants of u_t."""
        return FiberInvariants(
            K=t ** 2 * self.K,
            X=self.X - self.rho ** 2 * np.log(t),
            P=t ** (p - 2) * self.P,
            rho=self.rho,
        )


@dataclass
class FiberScan:
    """h and h' on a log-spaced t grid with the Pohozaev time t_u."""
    t: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    t_u: float
    sign_changes: int
    unique: bool
    h_at_tu: float
    strict_max: bool


def fiber_energy(inv: FiberInvariants, prm: Params, t):
    """h(t) = ½t²K + (α/4)X − (αρ²/4)log t − (w/p)t^{p−2}P."""
    t = np.asarray(t, dtype=np.float64)
    p, a = prm.p, prm.alpha
    return (
        0.5 * t ** 2 * inv.K
        + 0.25 * a * inv.X
        - 0.25 * a * inv.rho ** 2 * np.log(t)
        - prm.weight / p * t ** (p - 2) * inv.P
    )


def fiber_pohozaev(inv: FiberInvariants, prm: Params, t):
    """t·h'(t) = t²K − αρ²/4 − w(p−2)/p·t^{p−2}P, the interior Pohozaev value of u_t."""
    t = np.asarray(t, dtype=np.float64)
    p = prm.p
    return t ** 2 * inv.K - 0.25 * prm.alpha * inv.rho ** 2 - prm.weight * (p - 2) / p * t ** (p - 2) * inv.P


def fiber_derivative(inv: FiberInvariants, prm: Params, t):
    t = np.asarray(t, dtype=np.float64)
    return fiber_pohozaev(inv, prm, t) / t


def _root(inv: FiberInvariants, prm: Params, lo: float, hi: float) -> float:
    return bisect(
        lambda t: float(fiber_pohozaev(inv, prm, t)),
        lo,
        hi,
        xtol=1e-14 * lo,
        rtol=FIBER_CONFIG["rtol"],
        maxiter=500,
    )


def pohozaev_time(inv: FiberInvariants, prm: Params) -> float:
    """The unique t > 0 with P(u_t) = 0, from invariants alone.

    The bracket [t_min, t_max] is widened geometrically until t·h'(t) changes sign.

    Raises:
        BracketError: If no sign change appears after the allowed expansions
    """
    cfg = FIBER_CONFIG
    lo, hi = cfg["t_min"], cfg["t_max"]
    for _ in range(cfg["max_expansions"]):
        if fiber_pohozaev(inv, prm, lo) > 0 > fiber_pohozaev(inv, prm, hi):
            return _root(inv, prm, lo, hi)
        if fiber_pohozaev(inv, prm, lo) <= 0:
            lo /= cfg["expand_factor"]
        if fiber_pohozaev(inv, prm, hi) >= 0:
            hi *= cfg["expand_factor"]
    raise BracketError(f"No Pohozaev time in [{lo:.3g}, {hi:.3g}] for {inv}")


def fiber_scan(
    u: Field,
    prm: Params,
    t_range: Tuple[float, float] = (FIBER_CONFIG["t_min"], FIBER_CONFIG["t_max"]),
    points: Optional[int] = None,
) -> FiberScan:
    """Scan h_u over a log-spaced t grid and locate its critical time.

    Args:
        u: Field with mass prm.rho
        prm: Energy parameters
        t_range: Scan interval
        points: Number of scan points

    Returns:
        FiberScan with the sign-change count of h' and the bisected root

    Raises:
        ConstraintError: If mass(u) differs from rho
        BracketError: If h' keeps its sign over the scan
    """
    if abs(u.mass - prm.rho) > MASS_RTOL * prm.rho:
        raise ConstraintError(f"Fiber scan needs mass {prm.rho:g}, field has {u.mass:.12g}")
    return scan_invariants(FiberInvariants.of(u, prm.p), prm, t_range, points)


def scan_invariants(
    inv: FiberInvariants,
    prm: Params,
    t_range: Tuple[float, float] = (FIBER_CONFIG["t_min"], FIBER_CONFIG["t_max"]),
    points: Optional[int] = None,
) -> FiberScan:
    """``fiber_scan`` on precomputed invariants."""
    lo, hi = t_range
    if not 0 < lo < hi:
        raise ParameterError(f"t_range must be an increasing positive pair, got {t_range}")
    points = points or FIBER_CONFIG["scan_points"]

    t = np.logspace(np.log10(lo), np.log10(hi), points)
    h = fiber_energy(inv, prm, t)
    dh = fiber_derivative(inv, prm, t)

    signs = np.sign(fiber_pohozaev(inv, prm, t))
    changes = np.flatnonzero(signs[:-1] * signs[1:] < 0)
    if changes.size == 0:
        raise BracketError(f"h' keeps one sign on [{lo:g}, {hi:g}]")

    k = int(changes[0])
    t_u = _root(inv, prm, float(t[k]), float(t[k + 1]))
    h_tu = float(fiber_energy(inv, prm, t_u))
    away = np.abs(t - t_u) > 1e-9 * t_u
    strict_max = bool(np.all(h[away] < h_tu))

    unique = changes.size == 1 and signs[k] > 0
    if not unique:
        logger.warning(f"h' changes sign {changes.size} times on [{lo:g}, {hi:g}]")
    return FiberScan(
        t=t,
        h=h,
        dh=dh,
        t_u=t_u,
        sign_changes=int(changes.size),
        unique=unique,
        h_at_tu=h_tu,
        strict_max=strict_max,
    )


def dilate(u: Field, t: float, target: Optional[Grid] = None) -> Field:
    """The mass-preserving dilation u_t(x) = t·u(tx).

    Without a target the result lives on the grid scaled by 1/t, where node i of
    the new grid sits at x_i/t and the dilation is exact. With a target the
    dilation is resampled by a bicubic spline, zero outside the source box.

    Args:
        u: Field to dilate
        t: Dilation factor (> 0)
        target: Grid to resample onto

    Returns:
        Dilated field

    Raises:
        ResolutionError: If the dilated field is unresolved on the target or loses mass
    """
    if t <= 0:
        raise ParameterError(f"Dilation factor must be positive, got {t}")
    grid = u.grid
    if target is None:
        if t == 1.0:
            return u.copy()
        return Field(build_grid(grid.shape, grid.R / t, grid.n), t * u.values)

    if t == 1.0 and target == grid:
        return u.copy()

    cfg = FIBER_CONFIG
    x, y = grid.coords
    width = np.sqrt(grid.weight * np.sum((x ** 2 + y ** 2) * u.values ** 2) / u.mass)
    if width / t < cfg["min_width_cells"] * target.h:
        raise ResolutionError(
            f"Dilated width {width / t:.3g} is below {cfg['min_width_cells']:g} spacings of {target}"
        )

    spline = RectBivariateSpline(grid.axis, grid.axis, grid.embed(u.values), kx=3, ky=3)
    tx, ty = target.coords
    sx, sy = t * tx, t * ty
    half = grid.side / 2.0
    inside = (np.abs(sx) <= half) & (np.abs(sy) <= half)
    values = np.zeros(target.size)
    values[inside] = t * spline.ev(sx[inside], sy[inside])

    result = Field(target, values)
    if result.mass < (1.0 - cfg["resample_mass_loss"]) * u.mass:
        raise ResolutionError(
            f"Resampled dilation keeps mass {result.mass:.6g} of {u.mass:.6g}; enlarge the target grid"
        )
    return result
