"""Field files: a JSON header plus a raw little-endian float64 payload.

The payload sits next to the header with the extension ``.f64`` and stores the
interior values in row-major lattice order.
"""

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from core.errors import FieldFormatError, LabError
from core.grid import Field, build_grid

logger = logging.getLogger(__name__)

PAYLOAD_DTYPE = "<f8"
HEADER_VERSION = 1


def payload_path(header: Path) -> Path:
    return header.with_suffix(".f64")


def write_field(field: Field, path: Union[str, Path]) -> Path:
    """Write a field header and its payload.

    Args:
        field: Field to store
        path: Header path (``.json``); the payload goes to the sibling ``.f64``

    Returns:
        Header path
    """
    path = Path(path)
    grid = field.grid
    header = {
        "version": HEADER_VERSION,
        "shape": grid.shape.name,
        "R": grid.R,
        "n": grid.n,
        "h": grid.h,
        "interior": grid.size,
        "mass": field.mass,
        "dtype": PAYLOAD_DTYPE,
        "payload": payload_path(path).name,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    field.values.astype(PAYLOAD_DTYPE).tofile(payload_path(path))
    path.write_text(json.dumps(header, indent=2))
    logger.debug(f"Wrote field {grid} to {path}")
    return path


def read_field(path: Union[str, Path]) -> Field:
    """Read a field written by ``write_field``.

    Raises:
        FieldFormatError: If header and payload disagree
    """
    path = Path(path)
    try:
        header = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise FieldFormatError(f"Unreadable field header {path}: {e}") from e

    missing = {"shape", "R", "n", "h", "interior", "mass", "payload"} - set(header)
    if missing:
        raise FieldFormatError(f"Field header {path} lacks {', '.join(sorted(missing))}")

    try:
        grid = build_grid(header["shape"], float(header["R"]), int(header["n"]))
    except LabError as e:
        raise FieldFormatError(f"Field header {path} describes no valid grid: {e}") from e

    if grid.size != header["interior"]:
        raise FieldFormatError(
            f"Header interior count {header['interior']} does not match grid {grid}"
        )
    if not np.isclose(grid.h, header["h"], rtol=1e-12, atol=0.0):
        raise FieldFormatError(f"Header spacing {header['h']} does not match grid spacing {grid.h}")

    payload = path.parent / header["payload"]
    if not payload.exists():
        raise FieldFormatError(f"Missing payload {payload}")
    expected = grid.size * np.dtype(PAYLOAD_DTYPE).itemsize
    actual = payload.stat().st_size
    if actual != expected:
        raise FieldFormatError(f"Payload {payload} has {actual} bytes, expected {expected}")

    values = np.fromfile(payload, dtype=PAYLOAD_DTYPE).astype(np.float64)
    try:
        field = Field(grid, values)
    except LabError as e:
        raise FieldFormatError(f"Payload {payload} is not a valid field: {e}") from e
    if not np.isclose(field.mass, header["mass"], rtol=1e-12, atol=0.0):
        raise FieldFormatError(f"Payload mass {field.mass} does not match header mass {header['mass']}")
    return field
