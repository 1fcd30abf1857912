"""Multi-bump test sequences on the Pohozaev manifold.

A family places k copies of the scaled principal eigenfunction,
A·ψ(S(x + i·n²e)) with A = k^{1/(p−4)} and S = k^{(p−2)/(2(p−4))}, along a unit
direction e. The two-bump family V (k = 2) drives the energy on the Pohozaev
manifold to −∞; the n-bump family W (k = n) drives it to +∞.

Bumps are never placed on one grid. Self terms come from ψ by the dilation law of
χ₀; cross terms are dense double sums over the ψ grid with the separation added
analytically.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.spatial.distance import cdist

from config import SEQUENCE_CONFIG
from core.errors import ParameterError, ResolutionError
from core.functional import Params
from core.grid import EigenPair, build_grid, principal_eigenpair, resolve_shape
from core.logkernel import chi0
from modules.fibration import FiberInvariants, fiber_pohozaev, pohozaev_time

logger = logging.getLogger(__name__)

FAMILIES = ("V", "W")


@dataclass
class BumpFamily:
    """Invariant table of one multi-bump field."""
    kind: str
    n: float
    count: float
    amplitude: float
    scale: float
    separation: float
    kinetic: float
    lp: float
    mass: float
    self_chi0: float
    cross: List[float]
    chi0_total: float

    @property
    def invariants(self) -> FiberInvariants:
        return FiberInvariants(K=self.kinetic, X=self.chi0_total, P=self.lp, rho=self.mass)


@dataclass
class LandscapeRow:
    """One family member placed on the Pohozaev manifold."""
    n: float
    t: float
    energy: float
    kinetic: float
    chi0: float
    pohozaev_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LandscapeTable:
    kind: str
    rows: List[LandscapeRow] = field(default_factory=list)
    slope: Optional[float] = None
    abscissa: str = ""


@dataclass
class DivergenceWitness:
    kind: str
    reference_n: float
    reference_energy: float
    n: Optional[float]
    energy: Optional[float]
    found: bool


def profile_pair(shape, p: float, rho: float, nodes: Optional[int] = None) -> EigenPair:
    """Principal eigenpair of Ω (R = 1) with mass rho on the ψ grid.

    Raises:
        ParameterError: If the node count exceeds the configured maximum
        ResolutionError: If the grid resolves ψ with too few interior nodes
    """
    cfg = SEQUENCE_CONFIG
    nodes = nodes or cfg["psi_nodes"]
    if nodes > cfg["max_psi_nodes"]:
        raise ParameterError(f"ψ grid limited to {cfg['max_psi_nodes']} nodes per axis, got {nodes}")
    grid = build_grid(resolve_shape(shape), 1.0, nodes)
    if grid.size < cfg["min_interior"]:
        raise ResolutionError(f"ψ grid {grid} has fewer than {cfg['min_interior']} interior nodes")
    return principal_eigenpair(grid, rho)


def _bump_count(kind: str, n: float) -> float:
    if kind not in FAMILIES:
        raise ParameterError(f"Unknown family {kind} (available: {', '.join(FAMILIES)})")
    if n < 2:
        raise ParameterError(f"Family index must be at least 2, got {n}")
    if kind == "W" and int(n) != n:
        raise ParameterError(f"W family needs an integer bump count, got {n}")
    return 2.0 if kind == "V" else float(n)


def cross_term(psi: EigenPair, scale: float, count: float, offset: float) -> float:
    """(1/k²)ΣΣ w_a w_b log|(x_a − x_b)/S + offset·e| with w = ψ²h², e = (1, 0)."""
    grid = psi.psi.grid
    x, y = grid.coords
    w = psi.psi.values ** 2 * grid.weight
    points = np.column_stack([x / scale, y / scale])
    shifted = points + np.array([offset, 0.0])

    rows = SEQUENCE_CONFIG["chunk_rows"]
    total = 0.0
    for start in range(0, grid.size, rows):
        block = cdist(shifted[start:start + rows], points)
        total += float(w[start:start + rows] @ np.log(block) @ w)
    return total / count ** 2


def build_bumps(psi: EigenPair, kind: str, n: float, prm: Params) -> BumpFamily:
    """Invariant table of V_n or W_n.

    Args:
        psi: Principal eigenpair on Ω with mass prm.rho
        kind: "V" (two bumps) or "W" (n bumps)
        n: Family index (separation n²)
        prm: Energy parameters

    Returns:
        BumpFamily with kinetic, p-norm, self and cross χ₀ terms
    """
    k = _bump_count(kind, n)
    p = prm.p
    n = float(n)
    amplitude = k ** (1.0 / (p - 4))
    scale = k ** ((p - 2) / (2 * (p - 4)))
    growth = k ** ((p - 2) / (p - 4))
    separation = n ** 2

    rho = psi.rho
    self_chi0 = (chi0(psi.psi) - rho ** 2 * np.log(scale)) / k ** 2

    bumps = int(k)
    cross = [cross_term(psi, scale, k, m * separation) for m in range(1, bumps)]
    chi0_total = bumps * self_chi0 + 2.0 * sum((bumps - m) * c for m, c in enumerate(cross, start=1))

    return BumpFamily(
        kind=kind,
        n=n,
        count=k,
        amplitude=amplitude,
        scale=scale,
        separation=separation,
        kinetic=growth * psi.psi.gradient_sq,
        lp=growth * psi.psi.lp(p),
        mass=rho,
        self_chi0=self_chi0,
        cross=cross,
        chi0_total=chi0_total,
    )


def chi0_multibump(fam: BumpFamily) -> float:
    return fam.chi0_total


def energy_on_P(psi: EigenPair, kind: str, n: float, prm: Params) -> LandscapeRow:
    """Energy of a family member at its Pohozaev time."""
    fam = build_bumps(psi, kind, n, prm)
    inv = fam.invariants
    t = pohozaev_time(inv, prm)
    moved = inv.dilated(t, prm.p)

    p = prm.p
    kinetic_part = (p - 4) / (2 * (p - 2)) * moved.K
    energy = kinetic_part + 0.25 * prm.alpha * moved.X + prm.alpha * moved.rho ** 2 / (4 * (p - 2))
    residual = float(fiber_pohozaev(inv, prm, t)) / moved.K
    return LandscapeRow(
        n=float(n),
        t=t,
        energy=energy,
        kinetic=moved.K,
        chi0=moved.X,
        pohozaev_residual=residual,
    )


def vn_energy_on_P(psi: EigenPair, n: float, prm: Params) -> float:
    """J((V_n)_{t₀}); t₀ does not depend on n."""
    return energy_on_P(psi, "V", n, prm).energy


def wn_energy_on_P(psi: EigenPair, n: float, prm: Params) -> float:
    """J((W_n)_{t_{1,n}})."""
    return energy_on_P(psi, "W", n, prm).energy


def landscape_table(psi: EigenPair, prm: Params, kind: str, n_values: List[float]) -> LandscapeTable:
    """Rows over n and the least-squares slope of the energy.

    The abscissa is log(n²−1) for V and n^{(p−2)/(p−4)} for W, the growth of the
    dominant term in each family.
    """
    table = LandscapeTable(kind=kind)
    table.abscissa = "log(n^2-1)" if kind == "V" else "n^((p-2)/(p-4))"
    for n in n_values:
        row = energy_on_P(psi, kind, n, prm)
        logger.debug(f"{kind}_{n:g}: t={row.t:.12g}, J={row.energy:.10g}")
        table.rows.append(row)

    if len(table.rows) >= 2:
        n_arr = np.array([r.n for r in table.rows])
        if kind == "V":
            xs = np.log(n_arr ** 2 - 1.0)
        else:
            xs = n_arr ** ((prm.p - 2) / (prm.p - 4))
        ys = np.array([r.energy for r in table.rows])
        slope, _ = np.polyfit(xs, ys, 1)
        table.slope = float(slope)
    return table


def divergence_witness(psi: EigenPair, prm: Params, kind: str) -> DivergenceWitness:
    """First doubled n whose energy drops one unit below V₅ (or rises one above W₂)."""
    reference_n = 5.0 if kind == "V" else 2.0
    reference = energy_on_P(psi, kind, reference_n, prm).energy
    n = reference_n
    for _ in range(SEQUENCE_CONFIG["max_doublings"]):
        n *= 2.0
        energy = energy_on_P(psi, kind, n, prm).energy
        if (kind == "V" and energy < reference - 1.0) or (kind == "W" and energy > reference + 1.0):
            logger.info(f"{kind} family leaves the unit band at n={n:.4g}")
            return DivergenceWitness(kind, reference_n, reference, n, energy, True)
    return DivergenceWitness(kind, reference_n, reference, None, None, False)
