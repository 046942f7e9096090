"""Command-line front end: ``python -m fencelab {run,render,bench}``.

Settings are resolved in order: preset, then ``--config`` JSON file, then
explicit flags.  JSON keys use the flag names (``tau-prime`` or ``tau_prime``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import output
from .auction import AuctionParams
from .energy import isoperimetric_ratio
from .fields import GridSpec
from .shapes import SHAPES, named_shape, rasterize
from .solver import paper_preset, solve

__all__ = ["RunConfig", "run", "run_solve", "bench", "main", "build_parser", "config_from_args"]

log = logging.getLogger("fencelab")

DEFAULT_SNAPSHOTS = (0, 5, 10)
BENCH_COLUMNS = ("method", "n_partitions", "iterations", "wall_seconds", "final_e_tilde", "iso_ratio")

# solver keys that can be overridden; tau-like values may be given as "<k>dx"
SOLVER_KEYS = ("tau", "tau_prime", "lam", "beta0", "gamma", "beta_min", "M", "r_tol", "p", "max_iter", "seed")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    preset: str = "paper-2d"
    method: str = "one"
    grid: tuple[int, ...] | None = None
    shape: str = "flower"
    shape_seed: int = 0
    c: tuple[float, ...] = (0.5, 0.5)
    solver: dict = field(default_factory=dict)
    auction: tuple[float, ...] | None = None
    out: str | None = None
    snapshot_every: int | None = None
    render: bool = False

    def grid_spec(self) -> GridSpec:
        d = 3 if self.preset == "paper-3d" else 2
        if self.grid is None:
            return GridSpec(d, 128 if d == 3 else 256)
        dims = tuple(self.grid)
        if len(dims) == 1:
            dims = dims * d
        if len(set(dims)) != 1:
            raise ConfigError(f"grid must be uniform per axis, got {dims}")
        return GridSpec(len(dims), dims[0])

    def build(self):
        """Return ``(grid, solver config, initial region)``."""
        grid = self.grid_spec()
        dx = grid.dx
        overrides = {}
        for key, val in self.solver.items():
            if key in ("tau", "tau_prime") and isinstance(val, str):
                val = _dx_value(val, dx)
            overrides[key] = val
        if self.auction is not None:
            overrides["auction"] = AuctionParams(int(self.auction[0]), *map(float, self.auction[1:]))
        preset = self.preset if grid.d == (3 if self.preset == "paper-3d" else 2) else f"paper-{grid.d}d"
        _, cfg = paper_preset(preset, grid.n_axis, method=self.method, c=tuple(self.c), **overrides)
        shape = named_shape(self.shape, seed=self.shape_seed)
        return grid, cfg, rasterize(shape, grid)


def _dx_value(text: str, dx: float) -> float:
    text = text.strip()
    if text.endswith("dx"):
        coef = text[:-2].strip() or "1"
        return float(coef) * dx
    return float(text)


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).split(","))


def _grid(text) -> tuple[int, ...]:
    if isinstance(text, int):
        return (text,)
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    return tuple(int(x) for x in str(text).lower().replace("x", ",").split(","))


_FLAG_TO_KEY = {"lambda": "lam"}


def _apply(cfg: RunConfig, key: str, val) -> None:
    key = key.replace("-", "_")
    key = _FLAG_TO_KEY.get(key, key)
    if val is None:
        return
    if key in ("preset", "method", "shape", "out"):
        setattr(cfg, key, str(val))
    elif key == "grid":
        cfg.grid = _grid(val)
    elif key == "shape_seed":
        cfg.shape_seed = int(val)
    elif key == "c":
        cfg.c = _floats(val)
    elif key == "auction":
        cfg.auction = _floats(val)
    elif key == "snapshot_every":
        cfg.snapshot_every = int(val)
    elif key == "render":
        cfg.render = bool(val)
    elif key in ("M", "p", "max_iter", "seed"):
        cfg.solver[key] = int(val)
    elif key in ("tau", "tau_prime"):
        cfg.solver[key] = val if isinstance(val, str) and val.strip().endswith("dx") else float(val)
    elif key in SOLVER_KEYS:
        cfg.solver[key] = float(val)
    else:
        raise ConfigError(f"unknown setting {key!r}")


def config_from_mapping(mapping: dict, base: RunConfig | None = None) -> RunConfig:
    cfg = RunConfig() if base is None else _copy(base)
    for key, val in mapping.items():
        _apply(cfg, key, val)
    return cfg


def _copy(cfg: RunConfig) -> RunConfig:
    return RunConfig(**{**cfg.__dict__, "solver": dict(cfg.solver)})


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            cfg = config_from_mapping(json.loads(path.read_text()), cfg)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for key in (
        "preset", "method", "grid", "shape", "shape_seed", "c", "tau", "tau_prime", "lambda",
        "beta0", "gamma", "beta_min", "M", "r_tol", "p", "auction", "seed", "out", "snapshot_every",
        "max_iter",
    ):
        _apply(cfg, key, getattr(args, key, None))
    if getattr(args, "render", False):
        cfg.render = True
    return cfg


def run_solve(config: RunConfig):
    """Solve one configuration; returns ``(result, metrics dict)`` without touching disk."""
    grid, cfg, u0 = config.build()
    start = time.perf_counter()
    every = config.snapshot_every
    result = solve(u0, cfg, snapshot_every=every or 5)
    wall = time.perf_counter() - start
    last = result.trace[-1]
    metrics = {
        "method": cfg.method,
        "grid": list(grid.shape),
        "seed": cfg.seed,
        "iterations": result.iterations,
        "stop_reason": result.stop_reason,
        "final_e_tilde": last.e_tilde,
        "final_e_hat": last.e_hat,
        "iso_ratio": isoperimetric_ratio(result.region, cfg.tau),
        "volume_cells": result.region.count,
        "wall_seconds": wall,
    }
    return result, metrics


def _snapshot_iterations(result, every):
    final = result.iterations
    if every:
        keep = {k for k in result.snapshots if k % every == 0}
    else:
        keep = {k for k in DEFAULT_SNAPSHOTS if k in result.snapshots}
    keep.add(final)
    return sorted(keep)


def run(config: RunConfig) -> int:
    """Solve and write trace.csv, metrics.json and FLD snapshots into ``config.out``."""
    if not config.out:
        log.error("no output directory given (--out)")
        return 2
    out = Path(config.out)
    if not out.is_dir():
        log.error("output directory %s does not exist", out)
        return 2
    try:
        result, metrics = run_solve(config)
    except (ValueError, RuntimeError) as exc:
        log.error("run failed: %s", exc)
        return 1
    try:
        output.write_trace(out / "trace.csv", result.trace)
        output.write_metrics(out / "metrics.json", metrics)
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        files = []
        for k in _snapshot_iterations(result, config.snapshot_every):
            part = result.partition if k == result.iterations else result.snapshots[k]
            path = snap_dir / f"iter_{k:04d}.fld"
            output.write_snapshot(path, part)
            files.append(path)
        if config.render:
            img_dir = out / "images"
            img_dir.mkdir(exist_ok=True)
            output.render_files(files, img_dir)
    except OSError as exc:
        log.error("cannot write results to %s: %s", out, exc)
        return 1
    log.info(
        "%s: %d iterations (%s), E~=%.6g, iso=%.5f",
        metrics["method"], metrics["iterations"], metrics["stop_reason"],
        metrics["final_e_tilde"], metrics["iso_ratio"],
    )
    return 0


def _bench_row(config: RunConfig) -> dict:
    _, metrics = run_solve(config)
    return {
        "method": metrics["method"],
        "n_partitions": len(config.c),
        "iterations": metrics["iterations"],
        "wall_seconds": metrics["wall_seconds"],
        "final_e_tilde": metrics["final_e_tilde"],
        "iso_ratio": metrics["iso_ratio"],
    }


def bench(configs: Sequence[RunConfig], report, jobs: int = 1) -> list[dict]:
    """Run every configuration and write one CSV row per run to ``report``."""
    if not configs:
        raise ConfigError("bench needs at least one configuration")
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_bench_row, configs))
    else:
        rows = [_bench_row(c) for c in configs]
    with open(report, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (format(v, ".12g") if isinstance(v, float) else v) for k, v in row.items()})
    return rows


def _load_matrix(text: str) -> list[dict]:
    path = Path(text)
    data = json.loads(path.read_text()) if path.is_file() else json.loads(text)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not all(isinstance(d, dict) for d in data):
        raise ConfigError("matrix must be a JSON list of objects")
    return data


def _add_settings(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", help="flat JSON file of settings")
    ap.add_argument("--preset", choices=["paper-2d", "paper-3d"])
    ap.add_argument("--method", choices=["one", "two", "monotone"])
    ap.add_argument("--grid", help="cells per axis, e.g. 256 or 128x128x128")
    ap.add_argument("--shape", choices=SHAPES)
    ap.add_argument("--shape-seed", type=int)
    ap.add_argument("--c", help="comma-separated volume proportions")
    ap.add_argument("--tau", help="time step, number or multiple of dx like 2dx")
    ap.add_argument("--tau-prime", help="regularisation time step (method two)")
    ap.add_argument("--lambda", type=float, help="regularisation weight (method two)")
    ap.add_argument("--beta0", type=float)
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--beta-min", type=float)
    ap.add_argument("--M", type=int)
    ap.add_argument("--r-tol", type=float)
    ap.add_argument("--p", type=int, help="auction repeats per iteration")
    ap.add_argument("--auction", help="m,eps_min,alpha,eps0")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--max-iter", type=int)
    ap.add_argument("--snapshot-every", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fencelab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve one configuration")
    _add_settings(p_run)
    p_run.add_argument("--out", help="existing output directory")
    p_run.add_argument("--render", action="store_true", help="also write PPM images")

    p_render = sub.add_parser("render", help="render FLD snapshots to PPM")
    p_render.add_argument("fields", nargs="+")
    p_render.add_argument("--out", required=True)
    p_render.add_argument("--tau", type=float, help="smoothing time (default dx)")

    p_bench = sub.add_parser("bench", help="run a matrix of configurations")
    _add_settings(p_bench)
    p_bench.add_argument("--matrix", required=True, help="JSON list of setting overrides (file or inline)")
    p_bench.add_argument("--out", required=True, help="report CSV path")
    p_bench.add_argument("--jobs", type=int, default=1)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "run":
            return run(config_from_args(args))
        if args.command == "render":
            out = Path(args.out)
            if not out.is_dir():
                log.error("output directory %s does not exist", out)
                return 2
            for f in args.fields:
                if not Path(f).is_file():
                    log.error("no such field file: %s", f)
                    return 2
            written = output.render_files(args.fields, out, args.tau)
            log.info("wrote %d image(s) to %s", len(written), out)
            return 0
        base = config_from_args(args)
        report = Path(args.out)
        if not report.parent.is_dir():
            log.error("report directory %s does not exist", report.parent)
            return 2
        configs = [config_from_mapping(m, base) for m in _load_matrix(args.matrix)]
        bench(configs, report, args.jobs)
        log.info("wrote %d row(s) to %s", len(configs), report)
        return 0
    except (ConfigError, ValueError, RuntimeError) as exc:
        log.error("%s", exc)
        return 1
