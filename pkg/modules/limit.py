"""Whole-plane limit problem: the radial ground state W and the normalized NLS solution.

W is the positive radial decaying solution of −ΔW + W = W^{p−1} in the plane,
found by shooting on W(0). Every normalized solution of the α = 0 problem is a
rescaling of W.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import k0, k1

from config import SHOOTING_CONFIG
from core.errors import ParameterError, SampleRangeError, ShootingError
from core.grid import Field, Grid

logger = logging.getLogger(__name__)

UNDERSHOOT = "undershoot"
OVERSHOOT = "overshoot"


@dataclass
class GroundStateW:
    """Radial samples of W and its integral invariants."""
    p: float
    a: float
    r: np.ndarray
    W: np.ndarray
    dW: np.ndarray
    r_match: float
    r_max: float
    tail_coefficient: float
    mass: float
    lp: float
    gradient_sq: float
    residual: float

    def __post_init__(self):
        self._spline = CubicSpline(self.r, self.W)
        self._dspline = CubicSpline(self.r, self.dW)

    def profile(self, r: np.ndarray) -> np.ndarray:
        """W(r) for arbitrary radii (series near 0, exact tail beyond the samples)."""
        r = np.asarray(r, dtype=np.float64)
        out = np.empty_like(r)
        r0, r_end = self.r[0], self.r[-1]

        core = r < r0
        out[core] = self.a + (self.a - self.a ** (self.p - 1)) * r[core] ** 2 / 4.0
        mid = (r >= r0) & (r <= r_end)
        out[mid] = self._spline(r[mid])
        far = r > r_end
        out[far] = self.tail_coefficient * k0(r[far])
        return out

    def profile_derivative(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        out = np.empty_like(r)
        r0, r_end = self.r[0], self.r[-1]

        core = r < r0
        out[core] = (self.a - self.a ** (self.p - 1)) * r[core] / 2.0
        mid = (r >= r0) & (r <= r_end)
        out[mid] = self._dspline(r[mid])
        far = r > r_end
        out[far] = -self.tail_coefficient * k1(r[far])
        return out


@dataclass
class LimitSolution:
    """Normalized solution ū_ρ(x) = λ̄^{1/(p−2)}W(λ̄^{1/2}x) with mass ρ."""
    p: float
    rho: float
    lambda_bar: float
    m_rho: float
    mass: float
    gradient_sq: float
    lp: float
    pohozaev_gap: float
    ground: GroundStateW

    @property
    def amplitude(self) -> float:
        return self.lambda_bar ** (1.0 / (self.p - 2))

    @property
    def scale(self) -> float:
        return np.sqrt(self.lambda_bar)

    def profile(self, r: np.ndarray) -> np.ndarray:
        return self.amplitude * self.ground.profile(self.scale * np.asarray(r))

    def radial_samples(self) -> Tuple[np.ndarray, np.ndarray]:
        """(r, ū(r)) on the ground-state sample radii, rescaled."""
        return self.ground.r / self.scale, self.amplitude * self.ground.W

    def sample_on(self, grid: Grid, center: Tuple[float, float] = (0.0, 0.0)) -> Field:
        """ū_ρ evaluated at the interior nodes of a grid."""
        x, y = grid.coords
        r = np.hypot(x - center[0], y - center[1])
        return Field(grid, self.profile(r))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "rho": self.rho,
            "lambda_bar": self.lambda_bar,
            "m_rho": self.m_rho,
            "mass": self.mass,
            "gradient_sq": self.gradient_sq,
            "lp": self.lp,
            "pohozaev_gap": self.pohozaev_gap,
            "W0": self.ground.a,
            "W_mass": self.ground.mass,
        }


@dataclass
class DecayCertificate:
    """Exponential upper bound ū(r) ≤ C1·exp(−C2·r) beyond R0."""
    R0: float
    C1: float
    C2: float
    holds: bool
    checked: int


def _rhs(p: float):
    def rhs(r, y):
        w, dw = y
        return [dw, -dw / r + w - np.abs(w) ** (p - 2) * w]
    return rhs


def _series_start(a: float, p: float, r0: float) -> list:
    c = (a - a ** (p - 1)) / 4.0
    return [a + c * r0 ** 2, 2.0 * c * r0]


def _crosses_zero(r, y):
    return y[0]


_crosses_zero.terminal = True
_crosses_zero.direction = -1


def _turns_up(r, y):
    return y[1]


_turns_up.terminal = True
_turns_up.direction = 1


def _integrate(a: float, p: float, t_eval: Optional[np.ndarray] = None):
    cfg = SHOOTING_CONFIG
    return solve_ivp(
        _rhs(p),
        (cfg["r0"], cfg["r_span"]),
        _series_start(a, p, cfg["r0"]),
        method="DOP853",
        rtol=cfg["rtol"],
        atol=cfg["atol"],
        events=[_crosses_zero, _turns_up],
        t_eval=t_eval,
    )


def classify_shot(a: float, p: float) -> str:
    """Overshoot if W crosses zero, undershoot if W turns back up first."""
    if a <= 1.0:
        return UNDERSHOOT
    sol = _integrate(a, p)
    if sol.t_events[0].size:
        return OVERSHOOT
    return UNDERSHOOT


def _derivative6(values: np.ndarray, dr: float) -> np.ndarray:
    """Sixth-order central first derivative (NaN within 3 samples of the ends)."""
    out = np.full_like(values, np.nan)
    f = values
    out[3:-3] = (
        -f[:-6] + 9.0 * f[1:-5] - 45.0 * f[2:-4] + 45.0 * f[4:-2] - 9.0 * f[5:-1] + f[6:]
    ) / (60.0 * dr)
    return out


def _radial_integral(r: np.ndarray, values: np.ndarray) -> float:
    return float(2.0 * np.pi * simpson(values * r, x=r))


def shoot_ground_state(p: float, tol: Optional[float] = None) -> GroundStateW:
    """Ground state W of −ΔW + W = W^{p−1} by bisection on W(0).

    Args:
        p: Nonlinearity power (> 2)
        tol: Relative bisection tolerance on W(0)

    Returns:
        GroundStateW with samples on [r0, r_max]

    Raises:
        ShootingError: If no overshooting W(0) is found
    """
    if p <= 2:
        raise ParameterError(f"p must exceed 2, got {p}")
    cfg = SHOOTING_CONFIG
    tol = cfg["tol"] if tol is None else tol

    a_lo, a_hi = 1.0, cfg["a_start"]
    for _ in range(cfg["max_doublings"]):
        if classify_shot(a_hi, p) == OVERSHOOT:
            break
        a_lo, a_hi = a_hi, 2.0 * a_hi
    else:
        raise ShootingError(f"No overshooting W(0) below {a_hi:g} for p={p}")

    while a_hi - a_lo > tol * a_lo:
        mid = 0.5 * (a_lo + a_hi)
        if mid in (a_lo, a_hi):
            break
        if classify_shot(mid, p) == OVERSHOOT:
            a_hi = mid
        else:
            a_lo = mid
    logger.debug(f"W(0) bracket for p={p}: [{a_lo!r}, {a_hi!r}]")

    r_grid = cfg["r0"] + cfg["dr"] * np.arange(int((cfg["r_span"] - cfg["r0"]) / cfg["dr"]))
    lo = _integrate(a_lo, p, t_eval=r_grid)
    hi = _integrate(a_hi, p, t_eval=r_grid)
    m = min(lo.t.size, hi.t.size)
    if m < 10:
        raise ShootingError(f"Shooting trajectories too short for p={p}")

    close = (np.abs(lo.y[0, :m] - hi.y[0, :m]) <= cfg["match_gap"]) & (lo.y[1, :m] < 0) & (lo.y[0, :m] > 0)
    split = np.flatnonzero(~close[1:])
    last = int(split[0]) if split.size else m - 1
    if last < 10:
        raise ShootingError(f"Shooting trajectories separate immediately for p={p}")

    r_match = float(lo.t[last])
    C = float(lo.y[0, last] / k0(r_match))
    r_max = r_match
    while C * k0(r_max) >= cfg["tail_floor"]:
        r_max += 1.0
    tail_r = lo.t[last] + cfg["dr"] * np.arange(1, int(np.ceil((r_max - r_match) / cfg["dr"])) + 1)

    r = np.concatenate([lo.t[: last + 1], tail_r])
    W = np.concatenate([lo.y[0, : last + 1], C * k0(tail_r)])
    dW = np.concatenate([lo.y[1, : last + 1], -C * k1(tail_r)])

    mass = _radial_integral(r, W ** 2)
    lp = _radial_integral(r, W ** p)
    gradient_sq = _radial_integral(r, dW ** 2)

    d2W = _derivative6(dW, cfg["dr"])
    ode = -d2W - dW / r + W - W ** (p - 1)
    valid = np.isfinite(ode)
    valid &= np.abs(r - r_match) > cfg["junction_window"]
    residual = float(np.max(np.abs(ode[valid]))) if valid.any() else np.nan

    ground = GroundStateW(
        p=p,
        a=0.5 * (a_lo + a_hi),
        r=r,
        W=W,
        dW=dW,
        r_match=r_match,
        r_max=float(r[-1]),
        tail_coefficient=C,
        mass=mass,
        lp=lp,
        gradient_sq=gradient_sq,
        residual=residual,
    )
    logger.info(f"Ground state p={p:g}: W(0)={ground.a:.12f}, ‖W‖²={mass:.10f}, residual={residual:.2e}")
    return ground


@lru_cache(maxsize=16)
def ground_state(p: float) -> GroundStateW:
    """Cached ground state at the default tolerance."""
    return shoot_ground_state(p)


def limit_solution(p: float, rho: float, ground: Optional[GroundStateW] = None) -> LimitSolution:
    """Closed-form normalized solution of the α = 0 problem on the plane.

    Args:
        p: Nonlinearity power (> 4)
        rho: Prescribed mass
        ground: Ground state to rescale (computed if omitted)

    Returns:
        LimitSolution
    """
    if p <= 4:
        raise ParameterError(f"p must exceed 4, got {p}")
    if rho <= 0:
        raise ParameterError(f"rho must be positive, got {rho}")
    ground = ground or ground_state(p)

    lambda_bar = (ground.mass / rho) ** ((p - 2) / (p - 4))
    amplitude = lambda_bar ** (1.0 / (p - 2))
    scale = np.sqrt(lambda_bar)

    r_u = ground.r / scale
    u = amplitude * ground.W
    du = amplitude * scale * ground.dW
    mass = _radial_integral(r_u, u ** 2)
    lp = _radial_integral(r_u, u ** p)
    gradient_sq = _radial_integral(r_u, du ** 2)
    gap = (gradient_sq - (p - 2) / p * lp) / gradient_sq

    return LimitSolution(
        p=p,
        rho=rho,
        lambda_bar=lambda_bar,
        m_rho=(p - 4) / (2 * (p - 2)) * gradient_sq,
        mass=mass,
        gradient_sq=gradient_sq,
        lp=lp,
        pohozaev_gap=gap,
        ground=ground,
    )


def decay_certificate(sol: LimitSolution) -> DecayCertificate:
    """Exponential decay bound of ū beyond the radius where ū^{p−2} ≤ λ̄/2.

    Raises:
        SampleRangeError: If too few samples lie beyond R0
    """
    r, u = sol.radial_samples()
    below = np.flatnonzero(u ** (sol.p - 2) <= sol.lambda_bar / 2.0)
    if below.size == 0:
        raise SampleRangeError("Samples never reach ū^{p-2} ≤ λ̄/2")
    start = int(below[0])
    beyond = r.size - start
    if beyond < SHOOTING_CONFIG["min_decay_samples"]:
        raise SampleRangeError(f"Only {beyond} samples beyond R0={r[start]:.4g}")

    R0 = float(r[start])
    C2 = float(np.sqrt(sol.lambda_bar / 2.0))
    C1 = float(u[start] * np.exp(C2 * R0))
    envelope = C1 * np.exp(-C2 * r[start:])
    holds = bool(np.all(u[start:] <= envelope * (1.0 + 1e-12)))
    return DecayCertificate(R0=R0, C1=C1, C2=C2, holds=holds, checked=int(beyond))


def h1_distance(u: Field, v: Field) -> float:
    """sqrt(‖u − v‖₂² + ‖∇(u − v)‖₂²) on a common grid."""
    diff = u.with_values(u.values - v.values)
    return float(np.sqrt(diff.mass + diff.gradient_sq))
