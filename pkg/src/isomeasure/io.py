"""CSV and JSON writers that stamp every file with the run configuration."""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, payload: dict, config=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"config": _plain(config)} if config is not None else {}
    body.update(_plain(payload))
    path.write_text(json.dumps(body, indent=2, sort_keys=False) + "\n")
    return path


def write_csv(path, columns, rows, config=None) -> Path:
    """CSV with an optional '# config: {...}' first line, then the header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if config is not None:
            fh.write("# config: " + json.dumps(_plain(config), sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)
    return path


def read_csv(path) -> tuple[dict | None, list[str], np.ndarray]:
    """Inverse of write_csv: (config or None, columns, float array of rows)."""
    with Path(path).open() as fh:
        lines = fh.read().splitlines()
    config = None
    if lines and lines[0].startswith("# config: "):
        config = json.loads(lines[0][len("# config: "):])
        lines = lines[1:]
    rows = list(csv.reader(lines))
    data = np.array([[float(x) for x in r] for r in rows[1:]]) if len(rows) > 1 else np.empty((0, len(rows[0])))
    return config, rows[0], data
