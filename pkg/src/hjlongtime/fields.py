"""Uniform 1D grids, nodal scalar fields, linear interpolation and CSV persistence."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "FieldCSVError",
    "make_uniform_grid",
    "sample",
    "interp_linear",
    "write_field_csv",
    "read_field_csv",
    "field_csv_round_trip",
    "write_history_csv",
    "read_history_csv",
]


class FieldCSVError(ValueError):
    """Malformed field or history CSV file."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``x_min + i*dx`` for ``i = 0..n-1`` with both endpoints included."""

    x_min: float
    x_max: float
    n: int
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"grid needs n >= 3 nodes, got n={self.n}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid endpoints must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"grid needs x_min < x_max, got [{self.x_min}, {self.x_max}]")
        object.__setattr__(self, "n", int(self.n))
        x = np.linspace(float(self.x_min), float(self.x_max), self.n)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    def index_of(self, x: float, tol: float = 1e-9) -> int:
        """Index of the node at coordinate ``x`` (raises if ``x`` is not a node)."""
        i = int(round((x - self.x_min) / self.dx))
        if not 0 <= i < self.n or abs(self.x[i] - x) > tol * max(1.0, self.dx):
            raise ValueError(f"{x} is not a node of {self}")
        return i

    def mask(self, lo: float, hi: float) -> np.ndarray:
        """Boolean mask of nodes with ``lo <= x <= hi`` (roundoff-tolerant)."""
        eps = 1e-9 * self.dx
        return (self.x >= lo - eps) & (self.x <= hi + eps)

    def subgrid(self, lo: float, hi: float) -> tuple["Grid", slice]:
        """Largest subgrid whose nodes lie in ``[lo, hi]`` and the slice selecting it."""
        idx = np.flatnonzero(self.mask(lo, hi))
        if idx.size < 3:
            raise ValueError(f"interval [{lo}, {hi}] holds fewer than 3 nodes")
        i0, i1 = int(idx[0]), int(idx[-1])
        return Grid(float(self.x[i0]), float(self.x[i1]), i1 - i0 + 1), slice(i0, i1 + 1)


FieldLike = Union["ScalarField", Callable[[np.ndarray], np.ndarray], float, int]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values of a function on a :class:`Grid`. Immutable.

    Equality means same grid and bit-identical values.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValueError(f"non-finite value at node {bad} (x={self.grid.x[bad]})")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        return self.grid == other.grid and self.values.tobytes() == other.values.tobytes()

    __hash__ = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @classmethod
    def from_function(cls, grid: Grid, f: FieldLike) -> "ScalarField":
        return cls(grid, sample(f, grid))

    def __call__(self, x):
        return interp_linear(self, x)

    def restrict(self, lo: float, hi: float) -> "ScalarField":
        sub, sl = self.grid.subgrid(lo, hi)
        return ScalarField(sub, self.values[sl])


def make_uniform_grid(x_min: float, x_max: float, n: int) -> Grid:
    """Grid with exactly ``n`` nodes on ``[x_min, x_max]``."""
    return Grid(float(x_min), float(x_max), n)


def sample(f: FieldLike, grid: Grid) -> np.ndarray:
    """Nodal values of ``f`` (a field, a vectorized callable or a constant) on ``grid``."""
    if isinstance(f, ScalarField):
        if f.grid == grid:
            return np.array(f.values)
        return interp_linear(f, grid.x)
    if callable(f):
        out = np.asarray(f(grid.x), dtype=float)
        return np.broadcast_to(out, grid.x.shape).copy()
    return np.full(grid.n, float(f))


def interp_linear(f: ScalarField, x):
    """Piecewise-linear interpolant of ``f`` at ``x`` (scalar or array).

    Exact at nodes. Queries outside ``[x_min, x_max]`` raise ``ValueError``;
    callers clamp explicitly.
    """
    g = f.grid
    xq = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xq)):
        raise ValueError("non-finite interpolation query")
    if np.any(xq < g.x_min) or np.any(xq > g.x_max):
        bad = xq[(xq < g.x_min) | (xq > g.x_max)].ravel()[0]
        raise ValueError(f"query {bad} outside [{g.x_min}, {g.x_max}]")
    out = interp_nodal(g, f.values, xq)
    return float(out) if out.ndim == 0 else out


def interp_nodal(g: Grid, v: np.ndarray, xq: np.ndarray) -> np.ndarray:
    """Unchecked kernel of :func:`interp_linear` on raw nodal values ``v``."""
    s = (xq - g.x_min) / g.dx
    i = np.clip(np.floor(s).astype(np.intp), 0, g.n - 2)
    w = s - i
    out = v[i] + w * (v[i + 1] - v[i])
    # snap to stored values at nodes
    out = np.where(w == 0.0, v[i], out)
    return np.where(w == 1.0, v[i + 1], out)


# ---------------------------------------------------------------- CSV I/O

def _fmt(v: float) -> str:
    return repr(float(v))


def _parse_float(cell: str, line: int, path) -> float:
    try:
        return float(cell)
    except ValueError:
        raise FieldCSVError(f"{path}: line {line}: non-numeric cell {cell!r}") from None


def write_field_csv(f: ScalarField, path) -> None:
    """Write ``x,u`` rows, one per node, in increasing ``x``."""
    with open(path, "w", newline="") as fh:
        fh.write("x,u\n")
        for xi, ui in zip(f.grid.x, f.values):
            fh.write(f"{_fmt(xi)},{_fmt(ui)}\n")


def _grid_from_column(xs: Sequence[float], path, first_line: int) -> Grid:
    if len(xs) < 3:
        raise FieldCSVError(f"{path}: need at least 3 rows, got {len(xs)}")
    d = np.diff(np.asarray(xs, dtype=float))
    step = float(np.median(d))
    if not step > 0:
        raise FieldCSVError(f"{path}: x column is not increasing")
    bad = np.flatnonzero(np.abs(d - step) > 1e-6 * step)
    if bad.size:
        k = int(bad[0]) + 1
        gap = d[k - 1] / step
        what = (f"missing row index {k}" if gap > 1.5 and abs(gap - round(gap)) < 1e-6
                else "uneven spacing")
        raise FieldCSVError(f"{path}: row {k} (line {first_line + k}): x={xs[k]!r} breaks the "
                            f"uniform spacing {step!r} ({what})")
    grid = make_uniform_grid(xs[0], xs[-1], len(xs))
    tol = 1e-9 * grid.dx
    for k, (xa, xb) in enumerate(zip(xs, grid.x)):
        if abs(xa - xb) > tol:
            raise FieldCSVError(f"{path}: row {k} (line {first_line + k}): x={xa!r} is off the "
                                f"uniform grid (expected {xb!r})")
    return grid


def read_field_csv(path, grid: Grid | None = None) -> ScalarField:
    """Read a field written by :func:`write_field_csv`.

    If ``grid`` is given the file must describe exactly that grid.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FieldCSVError(f"cannot read {path}: {exc}") from exc
    with fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x", "u"]:
        raise FieldCSVError(f"{path}: expected header 'x,u'")
    xs, us = [], []
    for k, row in enumerate(rows[1:]):
        line = k + 2
        if len(row) != 2:
            raise FieldCSVError(f"{path}: line {line}: expected 2 cells, got {len(row)}")
        xs.append(_parse_float(row[0], line, path))
        us.append(_parse_float(row[1], line, path))
    if grid is not None:
        tol = 1e-9 * grid.dx
        for k in range(min(len(xs), grid.n)):
            if abs(xs[k] - grid.x[k]) > tol:
                raise FieldCSVError(
                    f"{path}: row {k} (line {k + 2}): x={xs[k]!r}, declared grid expects "
                    f"{grid.x[k]!r} (missing row at index {k}?)")
        if len(xs) != grid.n:
            raise FieldCSVError(
                f"{path}: {len(xs)} rows but the declared grid has {grid.n} nodes "
                f"(first missing row index {len(xs)})" if len(xs) < grid.n else
                f"{path}: {len(xs)} rows but the declared grid has {grid.n} nodes")
        return ScalarField(grid, np.array(us))
    return ScalarField(_grid_from_column(xs, path, 2), np.array(us))


def field_csv_round_trip(f: ScalarField, path) -> ScalarField:
    write_field_csv(f, path)
    return read_field_csv(path, f.grid)


def write_history_csv(times, fields: Sequence[ScalarField], path) -> None:
    """Write ``t,x,u`` rows grouped by slice in increasing ``t``."""
    times = np.asarray(times, dtype=float)
    if len(times) != len(fields):
        raise ValueError("times and fields differ in length")
    if np.any(np.diff(times) <= 0):
        raise ValueError("history times must be increasing")
    with open(path, "w", newline="") as fh:
        fh.write("t,x,u\n")
        for t, f in zip(times, fields):
            st = _fmt(t)
            for xi, ui in zip(f.grid.x, f.values):
                fh.write(f"{st},{_fmt(xi)},{_fmt(ui)}\n")


def read_history_csv(path) -> tuple[np.ndarray, list[ScalarField]]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FieldCSVError(f"cannot read {path}: {exc}") from exc
    with fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["t", "x", "u"]:
        raise FieldCSVError(f"{path}: expected header 't,x,u'")
    blocks: list[tuple[float, int, list[float], list[float]]] = []
    for k, row in enumerate(rows[1:]):
        line = k + 2
        if len(row) != 3:
            raise FieldCSVError(f"{path}: line {line}: expected 3 cells, got {len(row)}")
        t, x, u = (_parse_float(c, line, path) for c in row)
        if not blocks or blocks[-1][0] != t:
            if blocks and t < blocks[-1][0]:
                raise FieldCSVError(f"{path}: line {line}: time {t!r} out of order")
            blocks.append((t, line, [], []))
        blocks[-1][2].append(x)
        blocks[-1][3].append(u)
    if not blocks:
        raise FieldCSVError(f"{path}: no data rows")
    times = np.array([b[0] for b in blocks])
    fields = []
    grid = None
    for t, line, xs, us in blocks:
        g = _grid_from_column(xs, path, line)
        if grid is not None and g != grid:
            raise FieldCSVError(f"{path}: slice t={t!r} has a different grid")
        grid = g
        fields.append(ScalarField(g, np.array(us)))
    return times, fields


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)
