"""Shape registry with auto-discovery."""

import importlib
import logging
import pkgutil
from pathlib import Path
from typing import Dict, List, Type

from core.errors import ParameterError

from .base import BaseShape

logger = logging.getLogger(__name__)


class ShapeRegistry:
    """Registry for domain shapes with auto-discovery."""

    def __init__(self):
        self._shapes: Dict[str, Type[BaseShape]] = {}
        self._aliases: Dict[str, str] = {}
        self._discover_shapes()

    def _discover_shapes(self):
        """Auto-discover all shapes in the shapes package."""
        package_dir = Path(__file__).parent

        for module_info in pkgutil.iter_modules([str(package_dir)]):
            if module_info.name in ("base", "registry", "__init__"):
                continue

            try:
                module = importlib.import_module(f".{module_info.name}", package="shapes")
            except ImportError as e:
                logger.warning(f"Skipping shape module {module_info.name}: {e}")
                continue

            # Find all BaseShape subclasses in the module
            for attr_name in dir(module):
                attr = getattr(module, attr_name)
                if (
                    isinstance(attr, type)
                    and issubclass(attr, BaseShape)
                    and attr is not BaseShape
                    and hasattr(attr, "name")
                ):
                    self._shapes[attr.name] = attr
                    for alias in attr.aliases:
                        self._aliases[alias] = attr.name

    def get(self, name: str) -> BaseShape:
        """Instantiate a shape by name or alias.

        Args:
            name: Shape name (disk, square) or one of its aliases

        Returns:
            Shape instance
        """
        key = self._aliases.get(name.lower(), name.lower())
        if key not in self._shapes:
            raise ParameterError(
                f"Unknown shape: {name} (available: {', '.join(self.registered_shapes)})"
            )
        return self._shapes[key]()

    @property
    def registered_shapes(self) -> List[str]:
        """Get list of registered shape names."""
        return sorted(self._shapes.keys())


# Global registry instance
registry = ShapeRegistry()
