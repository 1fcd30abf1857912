"""
Configuration settings for the log-convolution laboratory.

This file contains the numerical defaults of every stage (eigen solver, kernels,
fibration scans, shooting, sequences, solvers) and the run configuration used by
the command line. To tune a stage, extend or edit the relevant dictionary below;
to add a reusable experiment, drop a JSON file into presets/.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

PRESETS_DIR = Path(__file__).parent / "presets"


# =============================================================================
# GRID AND EIGENPAIR
# =============================================================================
# Inverse power iteration on the masked 5-point Laplacian. The residual tolerance
# is relative to the eigenvalue.

EIGEN_CONFIG = {
    "tol": 1e-10,
    "max_iter": 500,
    "cg_rtol": 1e-13,
    "min_nodes": 8,
}

# Boundary flux on curved boundaries: u is read along the inward normals at
# multiples of offset_cells grid spacings. Any offset above √2 keeps every
# bilinear cell inside the mask.
FLUX_CONFIG = {
    "offset_cells": 1.5,
    "samples_per_node": 8,
    "min_samples": 64,
}

# Random smooth test fields: Gaussian widths are at least this many grid spacings.
BUMP_CONFIG = {
    "count": 3,
    "min_width_cells": 3.0,
    "center_fraction": 0.2,
}


# =============================================================================
# LOGARITHMIC KERNELS
# =============================================================================

KERNEL_CONFIG = {
    "dense_max_nodes": 97 ** 2,
    "brute_force_max_nodes": 5000,
    "identity_rtol": 1e-10,
    "cell_epsabs": 1e-15,
    "cell_epsrel": 1e-13,
}


# =============================================================================
# FIBRATION
# =============================================================================

FIBER_CONFIG = {
    "t_min": 1e-3,
    "t_max": 1e3,
    "scan_points": 10_000,
    "rtol": 1e-12,
    "expand_factor": 10.0,
    "max_expansions": 60,
    "resample_mass_loss": 1e-3,
    "min_width_cells": 1.0,
}


# =============================================================================
# CONSTANTS (GAGLIARDO-NIRENBERG AND HLS)
# =============================================================================

GN_CONFIG = {
    "dr": 0.02,
    "r_max": 20.0,
    "maxiter": 20_000,
    "stationarity_tol": 1e-3,
}

# The empirical HLS constant is estimated once on this reference grid. The χ₂
# quotient grows with the field's spread toward its 1/r limit, so the grid is wide.
HLS_CONFIG = {
    "shape": "disk",
    "R": 64.0,
    "n": 33,
    "trials": 200,
    "seed": 0,
    "safety": 2.0,
}


# =============================================================================
# LIMIT PROBLEM (RADIAL SHOOTING)
# =============================================================================

SHOOTING_CONFIG = {
    "r0": 1e-4,
    "dr": 0.01,
    "r_span": 60.0,
    "rtol": 1e-12,
    "atol": 1e-14,
    "tol": 1e-12,
    "a_start": 2.0,
    "max_doublings": 60,
    "match_gap": 1e-9,
    "tail_floor": 1e-11,
    "junction_window": 0.05,
    "min_decay_samples": 10,
}


# =============================================================================
# TEST SEQUENCES
# =============================================================================

SEQUENCE_CONFIG = {
    "psi_nodes": 33,
    "max_psi_nodes": 49,
    "min_interior": 25,
    "chunk_rows": 256,
    "max_doublings": 256,
    "default_alpha": -0.1,
}


# =============================================================================
# SOLVERS
# =============================================================================

@dataclass
class SolverSettings:
    """Tolerances and iteration caps of the constrained solvers."""
    tol: float = 1e-8
    max_iter: int = 2000
    step_min: float = 0.05
    step_max: float = 20.0
    max_backtracks: int = 40
    boundary_patience: int = 25
    interior_margin: float = 1e-3
    pohozaev_tol: float = 1e-2
    path_nodes: int = 21
    path_max_iter: int = 200
    redistribute_every: int = 5
    energy_weight: float = 4.0
    climb_tol: float = 1e-4
    path_step: float = 0.5
    dilation_factor: float = 1.25
    max_dilations: int = 40
    refine_tol: float = 1e-6
    refine_max_iter: int = 40
    minres_rtol: float = 1e-10
    s_schedule: List[float] = field(default_factory=lambda: [0.5, 0.625, 0.75, 0.875, 1.0])

    @property
    def energy_slack(self) -> float:
        # multiples of machine epsilon tolerated in monotone-descent checks
        return 64.0 * float(np.finfo(float).eps)


# =============================================================================
# RUN CONFIGURATION
# =============================================================================

@dataclass
class RunConfig:
    """Everything one CLI run needs.

    ``alpha = None`` means the coupling is picked as ``-alpha_cap * alpha_star`` for
    the run's (R, rho), the same rule the asymptotics sweep applies per row.
    """
    shape: str = "disk"
    R: float = 16.0
    n: int = 97
    p: float = 6.0
    alpha: Optional[float] = None
    beta: float = 1.0
    rho: float = 1.0
    s: float = 1.0
    alpha_cap: float = 0.5
    mode: str = "min"
    s_homotopy: bool = False
    R_values: List[float] = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0])
    spacing: Optional[float] = None
    v_values: List[int] = field(default_factory=lambda: [5, 10, 20, 40, 80])
    w_values: List[int] = field(default_factory=lambda: [2, 4, 8, 16])
    rho_values: List[float] = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0])
    psi_nodes: int = 33
    t_range: List[float] = field(default_factory=lambda: [1e-3, 1e3])
    output_dir: str = "results"
    seed: int = 0
    workers: int = 2
    deterministic: bool = True
    solver: SolverSettings = field(default_factory=SolverSettings)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Build a config from a (possibly partial) dictionary.

        Args:
            data: Mapping of field names to values; ``solver`` may be a nested mapping

        Returns:
            RunConfig with defaults for missing keys
        """
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            from core.errors import ParameterError
            raise ParameterError(f"Unknown config keys: {', '.join(sorted(unknown))}")

        values = dict(data)
        solver = values.pop("solver", None)
        cfg = cls(**values)
        if isinstance(solver, SolverSettings):
            cfg.solver = solver
        elif solver:
            cfg.solver = SolverSettings(**solver)
        return cfg

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        """Load a config from a JSON document."""
        with open(path) as f:
            return cls.from_dict(json.load(f))

    @classmethod
    def preset(cls, name: str) -> "RunConfig":
        """Load a named preset from the presets directory."""
        presets = load_presets()
        if name not in presets:
            from core.errors import ParameterError
            raise ParameterError(
                f"Preset not found: {name} (available: {', '.join(sorted(presets))})"
            )
        return cls.from_dict(presets[name])

    def merged(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Return a copy with the non-None overrides applied."""
        data = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "solver":
                data["solver"].update(value)
            else:
                data[key] = value
        return RunConfig.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form of this config."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def params(self, alpha: Optional[float] = None, rho: Optional[float] = None):
        """Params for the functional, with optional alpha/rho overrides."""
        from core.functional import Params

        a = self.alpha if alpha is None else alpha
        return Params(
            p=self.p,
            alpha=0.0 if a is None else a,
            rho=self.rho if rho is None else rho,
            beta=self.beta,
            s=self.s,
        )

    def validate(self, command: str):
        """Apply the regime guards for a subcommand.

        Args:
            command: CLI subcommand name

        Raises:
            ParameterError: If the configuration is outside the supported regime
        """
        from core.errors import ParameterError

        if self.p <= 4 and command != "limit":
            raise ParameterError(f"p must exceed 4 (regime alpha < 0, beta > 0, p > 4), got {self.p}")
        if self.p <= 2:
            raise ParameterError(f"p must exceed 2, got {self.p}")
        if self.rho <= 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")
        if self.R <= 0:
            raise ParameterError(f"R must be positive, got {self.R}")
        if not 0.5 <= self.s <= 1.0:
            raise ParameterError(f"s must lie in [1/2, 1], got {self.s}")
        if command in ("solve", "asymptotics", "probe") and self.alpha is not None and self.alpha >= 0:
            raise ParameterError(
                f"alpha must be negative for {command} (regime alpha < 0, beta > 0, p > 4), got {self.alpha}"
            )
        if self.mode not in ("min", "mp"):
            raise ParameterError(f"mode must be 'min' or 'mp', got {self.mode}")
        if not 0 < self.alpha_cap < 1:
            raise ParameterError(f"alpha_cap must lie in (0, 1), got {self.alpha_cap}")
        if command == "asymptotics" and list(self.R_values) != sorted(self.R_values):
            raise ParameterError("R_values must be increasing")
        if self.spacing is not None and self.spacing <= 0:
            raise ParameterError(f"spacing must be positive, got {self.spacing}")
        if len(self.t_range) != 2 or not 0 < self.t_range[0] < self.t_range[1]:
            raise ParameterError(f"t_range must be an increasing positive pair, got {self.t_range}")


def load_presets() -> Dict[str, Dict[str, Any]]:
    """Load all preset files from the presets directory."""
    presets: Dict[str, Dict[str, Any]] = {}
    for preset_file in PRESETS_DIR.glob("*.json"):
        with open(preset_file) as f:
            presets[preset_file.stem] = json.load(f)
    return presets
