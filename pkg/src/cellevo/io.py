"""File formats: rule JSON, pattern JSON, JSONL histories, metrics, PGM frames.

Everything here is byte-reproducible: floats go through Python's shortest
round-trip repr, PGM output is uncompressed, and no writer embeds timestamps.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .metrics import CSV_HEADER, MetricsReport
from .rules import RuleParams, load_preset, rule_from_dict, rule_to_dict

_PATTERN_KEYS = {"name", "rule", "height", "width", "cells"}


def save_rule(rule: RuleParams, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(rule_to_dict(rule), indent=2) + "\n")
    return path


def load_rule(path: str | Path) -> RuleParams:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return rule_from_dict(data)


def save_history(records: Iterable[dict], path: str | Path) -> Path:
    """Write one JSON object per line (evolution runs append one per generation)."""
    path = Path(path)
    with path.open("w") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return path


def load_history(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


@dataclass(frozen=True)
class PatternFile:
    """A stored pattern: tile values plus the rule it was evolved under."""

    name: str
    rule: RuleParams
    tile: np.ndarray


def save_pattern(
    path: str | Path,
    *,
    name: str,
    tile: np.ndarray,
    rule: RuleParams | str,
) -> Path:
    """Store a tile with its rule, given as a preset name or a full rule."""
    tile = np.asarray(tile, dtype=np.float64)
    if tile.ndim != 2:
        raise ValueError(f"tile must be 2-D, got shape {tile.shape}")
    if isinstance(rule, str):
        load_preset(rule)  # fail fast on unknown names
        rule_field: str | dict = rule
    else:
        rule_field = rule_to_dict(rule)
    data = {
        "name": name,
        "rule": rule_field,
        "height": int(tile.shape[0]),
        "width": int(tile.shape[1]),
        "cells": [float(v) for v in tile.ravel()],
    }
    path = Path(path)
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path


def load_pattern(path: str | Path) -> PatternFile:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    unknown = set(data) - _PATTERN_KEYS
    if unknown:
        raise ValueError(f"unknown pattern field: {sorted(unknown)[0]!r}")
    missing = _PATTERN_KEYS - set(data)
    if missing:
        raise ValueError(f"missing pattern field: {sorted(missing)[0]!r}")
    height, width = int(data["height"]), int(data["width"])
    if height < 1 or width < 1:
        raise ValueError("pattern height and width must be positive")
    cells = np.asarray(data["cells"], dtype=np.float64)
    if cells.shape != (height * width,):
        raise ValueError(
            f"expected {height * width} cells, got {cells.size}"
        )
    if not np.all(np.isfinite(cells)) or cells.min() < 0.0 or cells.max() > 1.0:
        raise ValueError("pattern cells must be finite and in [0, 1]")
    rule_field = data["rule"]
    if isinstance(rule_field, str):
        rule = load_preset(rule_field)
    elif isinstance(rule_field, dict):
        rule = rule_from_dict(rule_field)
    else:
        raise ValueError("pattern 'rule' must be a preset name or rule object")
    tile = cells.reshape(height, width)
    tile.flags.writeable = False
    return PatternFile(name=str(data["name"]), rule=rule, tile=tile)


def save_metrics(report: MetricsReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return path


def save_metrics_csv(reports: Sequence[MetricsReport], path: str | Path) -> Path:
    path = Path(path)
    lines = [CSV_HEADER] + [r.csv_row() for r in reports]
    path.write_text("\n".join(lines) + "\n")
    return path


def grid_to_pgm(grid: np.ndarray) -> bytes:
    """Encode one grid as binary PGM; cell -> byte via floor(v*255 + 0.5)."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {grid.shape}")
    height, width = grid.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    levels = np.floor(grid * 255.0 + 0.5)
    body = np.clip(levels, 0, 255).astype(np.uint8).tobytes()
    return header + body


def write_frames(grids: Sequence[np.ndarray], directory: str | Path) -> list[Path]:
    """Write grids as frame_000000.pgm, frame_000001.pgm, ... in directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, grid in enumerate(grids):
        path = directory / f"frame_{i:06d}.pgm"
        path.write_bytes(grid_to_pgm(grid))
        paths.append(path)
    return paths
