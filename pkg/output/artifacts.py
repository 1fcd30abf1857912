"""JSON, CSV and field artifacts of a run.

Every JSON artifact embeds the emitting config and its hash so it can be
re-validated later. Writes into one output directory are serialized.
"""

import csv
import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from config import RunConfig
from core.fieldio import write_field
from core.grid import Field

logger = logging.getLogger(__name__)

_locks: Dict[Path, threading.Lock] = {}
_locks_guard = threading.Lock()


def directory_lock(path: Path) -> threading.Lock:
    """The write lock of one output directory."""
    key = Path(path).resolve()
    with _locks_guard:
        if key not in _locks:
            _locks[key] = threading.Lock()
        return _locks[key]


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays for json.dumps."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


class ArtifactWriter:
    """Writes the artifacts of one run into its output directory."""

    def __init__(self, cfg: RunConfig, output_dir: Union[str, Path, None] = None):
        self.cfg = cfg
        self.output_dir = Path(output_dir or cfg.output_dir)
        self.lock = directory_lock(self.output_dir)
        self.written: List[Path] = []

    def _target(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        """Write ``data`` wrapped with the config and its hash."""
        document = {
            "config_hash": self.cfg.config_hash(),
            "config": self.cfg.to_dict(),
            "data": _plain(data),
        }
        with self.lock:
            path = self._target(name)
            path.write_text(json.dumps(document, indent=2))
        self.written.append(path)
        logger.debug(f"Wrote {path}")
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        with self.lock:
            path = self._target(name)
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(header)
                for row in rows:
                    writer.writerow(["" if v is None else _plain(v) for v in row])
        self.written.append(path)
        logger.debug(f"Wrote {path}")
        return path

    def write_field(self, name: str, field: Field) -> Path:
        with self.lock:
            path = write_field(field, self._target(name))
        self.written.append(path)
        return path


def verify_artifact(path: Union[str, Path], cfg: RunConfig = None) -> bool:
    """Whether a JSON artifact's embedded hash matches its config (and ``cfg`` if given)."""
    document = json.loads(Path(path).read_text())
    embedded = RunConfig.from_dict(document.get("config", {}))
    if embedded.config_hash() != document.get("config_hash"):
        return False
    if cfg is not None and cfg.config_hash() != document["config_hash"]:
        return False
    return True
