"""Time-indexed matrix and vector paths on a :class:`TimeGrid`, with CSV I/O."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch
from .model import TimeGrid

_COL = re.compile(r"^(?P<name>[^\[]+)\[(?P<idx>[0-9,]+)\]$")


@dataclass(frozen=True, eq=False)
class MatrixPath:
    """One matrix per grid point; ``values`` has shape ``(n_steps + 1, r, c)``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 3 or v.shape[0] != self.grid.n_steps + 1:
            raise DimensionMismatch("values", (self.grid.n_steps + 1, "r", "c"), v.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("path has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1:]

    def max_abs_diff(self, other) -> float:
        other = other.values if isinstance(other, MatrixPath) else np.asarray(other)
        return float(np.max(np.abs(self.values - other)))

    def to_csv(self, path: str | Path, name: str = "M") -> Path:
        r, c = self.shape
        header = ["s"] + [f"{name}[{i},{j}]" for i in range(r) for j in range(c)]
        rows = np.column_stack([self.grid.points, self.values.reshape(len(self), -1)])
        return _write_csv(path, header, rows)

    @classmethod
    def from_csv(cls, path: str | Path, grid: TimeGrid) -> "MatrixPath":
        header, data = _read_csv(path, grid)
        idx = [_parse_col(h) for h in header[1:]]
        r = 1 + max(i[0] for i in idx) if idx else 0
        c = 1 + max(i[1] for i in idx) if idx else 0
        return cls(grid, data[:, 1:].reshape(len(data), r, c))


@dataclass(frozen=True, eq=False)
class VectorPath:
    """One vector per grid point; ``values`` has shape ``(n_steps + 1, r)``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.grid.n_steps + 1:
            raise DimensionMismatch("values", (self.grid.n_steps + 1, "r"), v.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("path has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def max_abs_diff(self, other) -> float:
        other = other.values if isinstance(other, VectorPath) else np.asarray(other)
        return float(np.max(np.abs(self.values - other))) if self.values.size else 0.0

    def to_csv(self, path: str | Path, name: str = "v") -> Path:
        header = ["s"] + [f"{name}[{i}]" for i in range(self.dim)]
        rows = np.column_stack([self.grid.points, self.values])
        return _write_csv(path, header, rows)

    @classmethod
    def from_csv(cls, path: str | Path, grid: TimeGrid) -> "VectorPath":
        _, data = _read_csv(path, grid)
        return cls(grid, data[:, 1:])


def _parse_col(h: str) -> tuple[int, ...]:
    m = _COL.match(h)
    if not m:
        raise ValueError(f"unrecognized CSV column {h!r}")
    return tuple(int(x) for x in m.group("idx").split(","))


def _write_csv(path: str | Path, header: list[str], rows: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])
    return path


def _read_csv(path: str | Path, grid: TimeGrid) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in row] for row in reader if row], dtype=float)
    if data.ndim != 2 or data.shape[0] != grid.n_steps + 1:
        raise DimensionMismatch(str(path), (grid.n_steps + 1, len(header)), data.shape)
    if not np.allclose(data[:, 0], grid.points, rtol=0, atol=1e-9 * (1 + abs(grid.T))):
        raise ValueError(f"{path}: time column does not match the grid")
    return header, data
