"""Initial regions: flower, disc/ball, square, rectangle, triangle, pentagons, cube.

Default sizes give an area close to ``0.4 pi^3`` in 2D (the flower's area)
so energies from different initial shapes are comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .fields import GridSpec, IndicatorField
from .rng import SplitMix64

__all__ = ["ShapeSpec", "rasterize", "random_pentagon", "named_shape", "is_simply_connected", "SHAPES"]

_AREA = 0.4 * np.pi**3
_SQUARE_SIDE = float(np.sqrt(_AREA))
_RECT_H = float(np.sqrt(_AREA / 2))
_TRI_SIDE = float(np.sqrt(4 * _AREA / np.sqrt(3)))

# 3D cube default: the ball of equal volume has radius ~2.17
_CUBE_SIDE = 3.5

SHAPES = ("flower", "disc", "ball", "square", "rectangle", "triangle", "pentagon", "cube")


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def get(self, key, default):
        return self.params.get(key, default)


def _polygon_mask(x, y, verts):
    """Even-odd point-in-polygon test over arrays of points."""
    inside = np.zeros(x.shape, dtype=bool)
    nv = len(verts)
    for k in range(nv):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % nv]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    return inside


def _membership(shape: ShapeSpec, grid: GridSpec) -> np.ndarray:
    c = grid.coords()
    kind = shape.kind
    if grid.d == 2 and kind in ("ball", "cube"):
        raise ValueError(f"{kind} is a 3D shape")
    if grid.d == 3 and kind not in ("ball", "disc", "cube"):
        raise ValueError(f"{kind} is a 2D shape")
    if kind == "flower":
        x, y = c
        base = shape.get("base", 0.4)
        amp = shape.get("amplitude", 0.2)
        petals = shape.get("petals", 5)
        theta = np.arctan2(y, x)
        return x**2 + y**2 < np.pi**2 * (base + amp * np.sin(petals * theta))
    if kind in ("disc", "ball"):
        radius = shape.get("radius", np.pi * np.sqrt(0.4))
        return sum(ci**2 for ci in c) < radius**2
    if kind == "square":
        half = shape.get("side", _SQUARE_SIDE) / 2
        return (np.abs(c[0]) < half) & (np.abs(c[1]) < half)
    if kind == "rectangle":
        hx = shape.get("width", 2 * _RECT_H) / 2
        hy = shape.get("height", _RECT_H) / 2
        return (np.abs(c[0]) < hx) & (np.abs(c[1]) < hy)
    if kind == "cube":
        half = shape.get("side", _CUBE_SIDE) / 2
        return np.all([np.abs(ci) < half for ci in c], axis=0)
    if kind == "triangle":
        s = shape.get("side", _TRI_SIDE)
        h = s * np.sqrt(3) / 2
        verts = [(-s / 2, -h / 2), (s / 2, -h / 2), (0.0, h / 2)]
        return _polygon_mask(c[0], c[1], verts)
    if kind == "pentagon":
        verts = shape.params.get("vertices")
        if verts is None:
            verts = random_pentagon(shape.seed or 0).params["vertices"]
        return _polygon_mask(c[0], c[1], verts)
    raise ValueError(f"unknown shape kind {kind!r}")


def rasterize(shape: ShapeSpec, grid: GridSpec) -> IndicatorField:
    """Cell-centre sampling of the shape's membership predicate."""
    mask = _membership(shape, grid)
    if not mask.any():
        raise ValueError(f"{shape.kind} rasterizes to an empty region on {grid.shape}")
    ring = np.zeros(grid.shape, dtype=bool)
    for ax in range(grid.d):
        sl = [slice(None)] * grid.d
        sl[ax] = np.r_[0:2, grid.n_axis - 2 : grid.n_axis]
        ring[tuple(sl)] = True
    if (mask & ring).any():
        raise ValueError(f"{shape.kind} touches the domain boundary on {grid.shape}")
    return IndicatorField(grid, mask)


def random_pentagon(seed: int, mean_radius: float = 0.8 * np.pi) -> ShapeSpec:
    """Pentagon with jittered vertex angles (+-0.2 rad) and radii in ``[0.5, 1] * mean_radius``."""
    rng = SplitMix64(seed)
    verts = []
    for j in range(5):
        theta = 2 * np.pi * j / 5 + rng.uniform(-0.2, 0.2)
        r = rng.uniform(0.5 * mean_radius, mean_radius)
        verts.append((theta, r))
    verts.sort()
    xy = tuple((r * np.cos(t), r * np.sin(t)) for t, r in verts)
    return ShapeSpec("pentagon", {"vertices": xy}, seed=seed)


def named_shape(name: str, seed: int | None = None, **params) -> ShapeSpec:
    if name == "pentagon":
        return random_pentagon(seed or 0)
    if name not in SHAPES:
        raise ValueError(f"unknown shape {name!r}; choose from {', '.join(SHAPES)}")
    return ShapeSpec(name, params, seed)


def is_simply_connected(u: IndicatorField) -> bool:
    """One connected component and no holes (complement connected), face connectivity."""
    _, n_in = ndimage.label(u.values)
    _, n_out = ndimage.label(~u.values)
    return n_in == 1 and n_out == 1
