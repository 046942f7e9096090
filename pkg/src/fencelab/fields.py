"""Periodic grids on [-pi, pi]^d and the fields that live on them.

Cells are indexed ``[ix, iy(, iz)]`` in C order, so the canonical linear
index of a cell is ``np.ravel_multi_index((ix, iy, ...), dims)``.  Cell ``i``
along an axis is centred at ``-pi + i * dx`` and covers
``[x_i - dx/2, x_i + dx/2]``; the origin is therefore a cell centre.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "IndicatorField",
    "ScalarField",
    "Partition",
    "SpecMismatchError",
    "volume",
    "set_difference",
    "equal",
    "write_fld",
    "read_fld",
]

DOMAIN = (-np.pi, np.pi)


class SpecMismatchError(ValueError):
    """Raised when two fields on different grids are combined."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n_axis`` cells along each of ``d`` axes."""

    d: int
    n_axis: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n_axis < 8 or self.n_axis % 2:
            raise ValueError(f"n_axis must be even and >= 8, got {self.n_axis}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_axis,) * self.d

    @property
    def size(self) -> int:
        return self.n_axis**self.d

    @property
    def dx(self) -> float:
        return 2 * np.pi / self.n_axis

    @property
    def cell_vol(self) -> float:
        return self.dx**self.d

    def axis(self) -> np.ndarray:
        """Cell-centre coordinates along one axis."""
        return -np.pi + self.dx * np.arange(self.n_axis)

    def coords(self) -> list[np.ndarray]:
        """Cell-centre coordinate arrays, one per axis (``ij`` indexing)."""
        ax = self.axis()
        return np.meshgrid(*([ax] * self.d), indexing="ij")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _check_same(a, b):
    if a.spec != b.spec:
        raise SpecMismatchError(f"grid mismatch: {a.spec} vs {b.spec}")


@dataclass(frozen=True, eq=False)
class IndicatorField:
    """Binary field; ``values`` is a read-only bool array of ``spec.shape``."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.spec.shape:
            v = v.reshape(self.spec.shape)
        if v.dtype != np.bool_:
            if not np.isin(v, (0, 1)).all():
                raise ValueError("indicator values must be 0 or 1")
            v = v.astype(bool)
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def empty(cls, spec: GridSpec) -> IndicatorField:
        return cls(spec, np.zeros(spec.shape, dtype=bool))

    @classmethod
    def full(cls, spec: GridSpec) -> IndicatorField:
        return cls(spec, np.ones(spec.shape, dtype=bool))

    @classmethod
    def from_cells(cls, spec: GridSpec, cells: Sequence[int]) -> IndicatorField:
        """Build from canonical linear cell indices."""
        v = np.zeros(spec.size, dtype=bool)
        v[np.asarray(cells, dtype=np.int64)] = True
        return cls(spec, v.reshape(spec.shape))

    @cached_property
    def count(self) -> int:
        return int(np.count_nonzero(self.values))

    def cells(self) -> np.ndarray:
        """Canonical linear indices of the 1-cells, ascending."""
        return np.flatnonzero(self.values)

    def as_float(self) -> np.ndarray:
        return self.values.astype(np.float64)

    def complement(self) -> IndicatorField:
        return IndicatorField(self.spec, ~self.values)

    def __and__(self, other: IndicatorField) -> IndicatorField:
        _check_same(self, other)
        return IndicatorField(self.spec, self.values & other.values)

    def __or__(self, other: IndicatorField) -> IndicatorField:
        _check_same(self, other)
        return IndicatorField(self.spec, self.values | other.values)

    def __repr__(self):
        return f"IndicatorField({self.spec.shape}, count={self.count})"


@dataclass(frozen=True, eq=False)
class ScalarField:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(self.spec.shape)
        if not np.isfinite(v).all():
            raise ValueError("scalar field contains non-finite values")
        object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True, eq=False)
class Partition:
    """Labelling of the support cells into ``n`` phases.

    ``labels`` holds the phase index ``0..n-1`` for every support cell and
    ``-1`` elsewhere, which makes disjointness and ``sum(u_i) == support``
    hold by construction.
    """

    spec: GridSpec
    n: int
    labels: np.ndarray
    _counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lab = np.asarray(self.labels).reshape(self.spec.shape).astype(np.int16)
        if lab.min(initial=0) < -1 or lab.max(initial=-1) >= self.n:
            raise ValueError("labels must lie in -1..n-1")
        object.__setattr__(self, "labels", _frozen(lab))
        counts = np.bincount(lab[lab >= 0].ravel(), minlength=self.n)
        object.__setattr__(self, "_counts", _frozen(counts.astype(np.int64)))

    @classmethod
    def from_phases(cls, phases: Sequence[IndicatorField]) -> Partition:
        spec = phases[0].spec
        lab = np.full(spec.shape, -1, dtype=np.int16)
        total = np.zeros(spec.shape, dtype=np.int16)
        for i, ph in enumerate(phases):
            _check_same(phases[0], ph)
            lab[ph.values] = i
            total += ph.values
        if (total > 1).any():
            raise ValueError("phases overlap")
        return cls(spec, len(phases), lab)

    @property
    def counts(self) -> np.ndarray:
        return self._counts

    @cached_property
    def support(self) -> IndicatorField:
        return IndicatorField(self.spec, self.labels >= 0)

    @cached_property
    def phases(self) -> tuple[IndicatorField, ...]:
        return tuple(IndicatorField(self.spec, self.labels == i) for i in range(self.n))

    def stack(self) -> np.ndarray:
        """Float array of shape ``(n, *spec.shape)`` holding the phase indicators."""
        out = np.zeros((self.n, *self.spec.shape))
        for i in range(self.n):
            out[i][self.labels == i] = 1.0
        return out

    def validate(self, targets=None, support: IndicatorField | None = None) -> None:
        """Raise ``AssertionError`` if counts or support disagree with the given ones."""
        if targets is not None:
            assert np.array_equal(self.counts, np.asarray(targets)), (
                f"phase counts {self.counts.tolist()} != targets {list(targets)}"
            )
        if support is not None:
            assert np.array_equal(self.labels >= 0, support.values), "sum(u_i) != u_Omega"

    def same_as(self, other: Partition) -> bool:
        return self.spec == other.spec and self.n == other.n and np.array_equal(self.labels, other.labels)


def volume(f: IndicatorField) -> float:
    return f.count * f.spec.cell_vol


def set_difference(a: IndicatorField, b: IndicatorField) -> IndicatorField:
    """Cells in ``a`` but not in ``b``."""
    _check_same(a, b)
    return IndicatorField(a.spec, a.values & ~b.values)


def equal(a: IndicatorField, b: IndicatorField) -> bool:
    _check_same(a, b)
    return bool(np.array_equal(a.values, b.values))


# -- FLD files ---------------------------------------------------------------

_DTYPES = {"u8": np.dtype("<u1"), "f64": np.dtype("<f8")}


def write_fld(path, values: np.ndarray) -> None:
    """Write a grid array as an FLD file (JSON header line + raw little-endian data).

    Boolean and small integer arrays are stored as ``u8``, everything else as ``f64``.
    """
    values = np.asarray(values)
    if values.dtype == np.bool_ or np.issubdtype(values.dtype, np.integer):
        if values.size and (values.min() < 0 or values.max() > 255):
            raise ValueError("integer FLD data must fit in u8")
        tag = "u8"
    else:
        tag = "f64"
    header = {
        "dims": list(values.shape),
        "dtype": tag,
        "order": "row-major",
        "domain": [[-np.pi, np.pi]] * values.ndim,
    }
    data = np.ascontiguousarray(values, dtype=_DTYPES[tag])
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n")
        fh.write(data.tobytes())


def read_fld(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: missing FLD header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
        dims = [int(n) for n in header["dims"]]
        dtype = _DTYPES[header["dtype"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed FLD header") from exc
    if header.get("order", "row-major") != "row-major":
        raise ValueError(f"{path}: unsupported order {header['order']!r}")
    body = raw[nl + 1 :]
    if len(body) != int(np.prod(dims)) * dtype.itemsize:
        raise ValueError(f"{path}: payload size does not match dims {dims}")
    return np.frombuffer(body, dtype=dtype).reshape(dims).copy()
