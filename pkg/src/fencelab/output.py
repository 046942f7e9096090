"""Run artifacts: trace.csv, metrics.json, FLD snapshots and PPM renderings."""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .fields import GridSpec, Partition, read_fld, write_fld
from .solver import IterationRecord
from .spectral import convolve_array

__all__ = [
    "TRACE_COLUMNS",
    "METRICS_KEYS",
    "METRICS_SCHEMA",
    "write_trace",
    "read_trace",
    "write_metrics",
    "write_snapshot",
    "partition_from_labels",
    "write_ppm",
    "read_ppm",
    "render_labels",
    "render_files",
    "PALETTE",
]

TRACE_COLUMNS = ("iteration", "beta", "e_tilde", "e_hat", "changed_cells", "adm_runs")
METRICS_KEYS = (
    "method",
    "grid",
    "seed",
    "iterations",
    "stop_reason",
    "final_e_tilde",
    "final_e_hat",
    "iso_ratio",
    "volume_cells",
    "wall_seconds",
)
METRICS_SCHEMA = {
    "type": "object",
    "required": list(METRICS_KEYS),
    "additionalProperties": False,
    "properties": {
        "method": {"enum": ["one", "two", "monotone"]},
        "grid": {"type": "array", "items": {"type": "integer", "minimum": 8}, "minItems": 2, "maxItems": 3},
        "seed": {"type": "integer"},
        "iterations": {"type": "integer", "minimum": 0},
        "stop_reason": {"enum": ["beta_exhausted", "region_fixed_point", "monotone_accept", "max_iterations"]},
        "final_e_tilde": {"type": "number"},
        "final_e_hat": {"type": "number", "minimum": 0},
        "iso_ratio": {"type": "number", "exclusiveMinimum": 0},
        "volume_cells": {"type": "integer", "minimum": 1},
        "wall_seconds": {"type": "number", "minimum": 0},
    },
}

# phase colours, RGB in [0, 1]
PALETTE = np.array(
    [
        (0.894, 0.102, 0.110),
        (0.216, 0.494, 0.722),
        (0.302, 0.686, 0.290),
        (0.596, 0.306, 0.639),
        (1.000, 0.498, 0.000),
        (0.651, 0.337, 0.157),
        (0.969, 0.506, 0.749),
        (0.400, 0.400, 0.400),
        (0.737, 0.741, 0.133),
        (0.090, 0.745, 0.812),
    ]
)
BACKGROUND = np.array((1.0, 1.0, 1.0))


def _num(x) -> str:
    return format(float(x), ".12g")


def write_trace(path, trace: Iterable[IterationRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow([r.k, _num(r.beta), _num(r.e_tilde), _num(r.e_hat), r.changed_cells, r.adm_runs])


def read_trace(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {k: (int(v) if k in ("iteration", "changed_cells", "adm_runs") else float(v)) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


def write_metrics(path, metrics: dict) -> None:
    missing = set(METRICS_KEYS) - set(metrics)
    if missing:
        raise ValueError(f"metrics missing keys: {sorted(missing)}")
    ordered = {k: metrics[k] for k in METRICS_KEYS}
    Path(path).write_text(json.dumps(ordered, indent=2) + "\n")


def write_snapshot(path, part: Partition) -> None:
    """Store a partition as a ``u8`` label field: 0 outside, ``i + 1`` for phase ``i``."""
    write_fld(path, (part.labels + 1).astype(np.uint8))


def partition_from_labels(labels: np.ndarray) -> Partition:
    labels = np.asarray(labels)
    spec = GridSpec(labels.ndim, labels.shape[0])
    n = max(int(labels.max()), 1)
    return Partition(spec, n, labels.astype(np.int16) - 1)


def write_ppm(path, rgb: np.ndarray) -> None:
    """Binary P6 image; ``rgb`` is ``(height, width, 3)`` in ``[0, 1]``."""
    img = np.clip(np.rint(np.asarray(rgb) * 255), 0, 255).astype(np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_ppm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    m = re.match(rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if not m:
        raise ValueError(f"{path}: not a binary PPM")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(raw[m.end() : m.end() + w * h * 3], dtype=np.uint8).reshape(h, w, 3)


def _composite(alphas: np.ndarray) -> np.ndarray:
    """Blend phase colours over the background; ``alphas`` is ``(n, *grid2d)``."""
    n = alphas.shape[0]
    colors = PALETTE[np.arange(n) % len(PALETTE)]
    total = np.clip(alphas.sum(axis=0), 0.0, 1.0)
    rgb = (1.0 - total)[..., None] * BACKGROUND + np.tensordot(alphas, colors, axes=(0, 0))
    # row 0 is the top of the picture: y up, x to the right
    return np.flip(np.swapaxes(rgb, 0, 1), axis=0)


def render_labels(labels: np.ndarray, tau: float | None = None) -> list[np.ndarray]:
    """Smoothed RGB images of a label field: one image in 2D, three mid-slices in 3D."""
    labels = np.asarray(labels)
    spec = GridSpec(labels.ndim, labels.shape[0])
    tau = spec.dx if tau is None else tau
    n = int(labels.max())
    alphas = np.zeros((n, *labels.shape))
    for i in range(n):
        alphas[i] = convolve_array((labels == i + 1).astype(np.float64), tau)
    if spec.d == 2:
        return [_composite(alphas)]
    mid = spec.n_axis // 2
    return [_composite(np.take(alphas, mid, axis=ax + 1)) for ax in range(3)]


def render_files(field_files: Sequence, out, tau: float | None = None) -> list[Path]:
    """Render FLD label snapshots into ``out`` as PPM files; returns the written paths."""
    out = Path(out)
    written = []
    for f in field_files:
        f = Path(f)
        images = render_labels(read_fld(f), tau)
        if len(images) == 1:
            names = [f.stem + ".ppm"]
        else:
            names = [f"{f.stem}_{axis}.ppm" for axis in "xyz"]
        for name, img in zip(names, images):
            write_ppm(out / name, img)
            written.append(out / name)
    return written
