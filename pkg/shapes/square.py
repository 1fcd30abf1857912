"""Axis-aligned square of diagonal 1 centred at the origin."""

from typing import Tuple

import numpy as np

from .base import BaseShape

_EDGE_SLACK = 1e-12


class Square(BaseShape):
    """Square of side 1/√2, so its diagonal (the diameter) is 1."""

    name = "square"
    aliases = ["box"]

    side = 1.0 / np.sqrt(2.0)

    @property
    def half_extent(self) -> float:
        return self.side / 2.0

    @property
    def area(self) -> float:
        return self.side ** 2

    @property
    def exact_lambda1(self) -> float:
        return float(2.0 * np.pi ** 2 / self.side ** 2)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        limit = self.half_extent * (1.0 - _EDGE_SLACK)
        return (np.abs(x) < limit) & (np.abs(y) < limit)

    def bubble(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        a2 = self.half_extent ** 2
        return np.clip(1.0 - x ** 2 / a2, 0.0, None) * np.clip(1.0 - y ** 2 / a2, 0.0, None)

    @property
    def grid_aligned(self) -> bool:
        return True

    def boundary_samples(self, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Midpoint rule on each edge; corners carry no node."""
        a = self.half_extent
        m = max(1, count // 4)
        t = a * (-1.0 + (2.0 * np.arange(m) + 1.0) / m)
        ones = np.ones(m)
        points, normals = [], []
        for nx, ny in ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)):
            px = nx * a * ones if nx else t
            py = ny * a * ones if ny else t
            points.append(np.column_stack([px, py]))
            normals.append(np.column_stack([nx * ones, ny * ones]))
        weights = np.full(4 * m, 2.0 * a / m)
        return np.vstack(points), np.vstack(normals), weights
