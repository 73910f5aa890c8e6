"""Deterministic CSV writing and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_columns(path, columns: dict) -> Path:
    """Write equal-length arrays as named CSV columns."""
    header = list(columns)
    return write_csv(path, header, zip(*columns.values()))


def read_csv(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return {name: [row[i] for row in rows] for i, name in enumerate(header)}


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(path, config: dict, outputs: Sequence[Path], wall_time: float, version: str) -> Path:
    path = Path(path)
    manifest = {
        "config": config,
        "version": version,
        "wall_time_s": round(wall_time, 6),
        "outputs": {Path(p).name: sha256(p) for p in sorted(outputs, key=lambda p: Path(p).name)},
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
