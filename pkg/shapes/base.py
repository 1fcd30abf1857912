"""Base domain shape interface."""

from abc import ABC, abstractmethod
from typing import List, Tuple

import numpy as np


class BaseShape(ABC):
    """Abstract base class for domain shapes.

    Shapes describe the unscaled domain Ω, centred at the origin and normalized
    so that the largest distance between two of its points equals 1.

    To add a new shape:
    1. Create a new file in shapes/ folder
    2. Inherit from BaseShape
    3. Implement the required methods
    4. The registry will auto-discover it
    """

    # Override in subclass
    name: str = "base"
    aliases: List[str] = []

    @property
    @abstractmethod
    def half_extent(self) -> float:
        """Half side of the axis-aligned bounding box of Ω."""

    @property
    @abstractmethod
    def area(self) -> float:
        """Lebesgue measure |Ω|."""

    @property
    @abstractmethod
    def exact_lambda1(self) -> float:
        """Closed-form principal Dirichlet eigenvalue of −Δ on Ω."""

    @abstractmethod
    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Strict membership mask for points of the unscaled domain.

        Args:
            x: x coordinates
            y: y coordinates

        Returns:
            Boolean array, True strictly inside Ω
        """

    @abstractmethod
    def bubble(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Smooth nonnegative cutoff vanishing on the boundary of the unscaled domain."""

    @abstractmethod
    def boundary_samples(self, count: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Quadrature nodes on the boundary of the unscaled domain.

        Args:
            count: Approximate number of nodes

        Returns:
            Tuple of (points (m, 2), outward unit normals (m, 2), arc-length weights (m,))
        """

    @property
    def grid_aligned(self) -> bool:
        """Whether the boundary runs along lattice lines of the bounding-box grid."""
        return False

    @property
    def star_shaped(self) -> bool:
        return True

    def __eq__(self, other) -> bool:
        return isinstance(other, BaseShape) and other.name == self.name

    def __hash__(self) -> int:
        return hash(("shape", self.name))

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"
