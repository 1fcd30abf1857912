"""Disk of diameter 1 centred at the origin."""

from typing import Tuple

import numpy as np
from scipy.special import jn_zeros

from .base import BaseShape

# Relative slack keeping nodes that sit on the circle out of the interior.
_EDGE_SLACK = 1e-12


class Disk(BaseShape):
    """Disk B_{1/2}(0)."""

    name = "disk"
    aliases = ["circle", "ball"]

    radius = 0.5

    @property
    def half_extent(self) -> float:
        return self.radius

    @property
    def area(self) -> float:
        return np.pi * self.radius ** 2

    @property
    def exact_lambda1(self) -> float:
        j01 = jn_zeros(0, 1)[0]
        return float((j01 / self.radius) ** 2)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x ** 2 + y ** 2 < self.radius ** 2 * (1.0 - _EDGE_SLACK)

    def bubble(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.clip(1.0 - (x ** 2 + y ** 2) / self.radius ** 2, 0.0, None)

    def boundary_samples(self, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        # equispaced angles: the trapezoidal rule on a periodic integrand
        theta = 2.0 * np.pi * np.arange(count) / count
        normals = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(count, 2.0 * np.pi * self.radius / count)
        return self.radius * normals, normals, weights
