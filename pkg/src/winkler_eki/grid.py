"""Uniform square-cell grid and interior-node scalar fields.

Interior nodes are addressed by integer pairs ``(i, j)`` with
``1 <= i, j <= n - 1`` at coordinates ``(x0 + i*h, y0 + j*h)``. Fields store
one value per interior node as a flat vector in row-major order (``j`` outer,
``i`` inner), the same ordering used by the block structure of the biharmonic
matrix and by the CSV serialization.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "snake_flatten",
    "snake_unflatten",
    "write_snake_csv",
    "read_snake_csv",
]

_FMT = "%.17g"  # full double precision for lossless CSV round-trips


@dataclass(frozen=True)
class Grid:
    """Uniform (n+1) x (n+1) discretization of a square-celled rectangle.

    Parameters
    ----------
    n : int
        Number of subdivisions per axis (n >= 2 so at least one interior
        node exists).
    x0, x1, y0, y1 : float
        Domain rectangle, default the unit square. Cells must be square:
        (x1 - x0)/n must equal (y1 - y0)/n.
    """

    n: int
    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid needs n >= 2 subdivisions, got n={self.n}")
        wx = self.x1 - self.x0
        wy = self.y1 - self.y0
        if not (wx > 0.0 and wy > 0.0):
            raise ValueError("domain rectangle has nonpositive extent")
        if not math.isclose(wx / self.n, wy / self.n, rel_tol=1e-12):
            raise ValueError(
                f"cells must be square: hx={wx / self.n!r} != hy={wy / self.n!r}"
            )

    @property
    def h(self) -> float:
        """Mesh width (identical in both directions)."""
        return (self.x1 - self.x0) / self.n

    @property
    def num_interior(self) -> int:
        return (self.n - 1) ** 2

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols) of the interior block: rows run over j, cols over i."""
        return (self.n - 1, self.n - 1)

    def flat_index(self, i: int, j: int) -> int:
        """Row-major flat index of interior node (i, j)."""
        if not (1 <= i <= self.n - 1 and 1 <= j <= self.n - 1):
            raise IndexError(f"({i}, {j}) is not an interior node of n={self.n}")
        return (j - 1) * (self.n - 1) + (i - 1)

    def node_of(self, q: int) -> tuple[int, int]:
        """Inverse of :meth:`flat_index`."""
        if not 0 <= q < self.num_interior:
            raise IndexError(f"flat index {q} out of range")
        j, i = divmod(q, self.n - 1)
        return (i + 1, j + 1)

    def point(self, i: int, j: int) -> tuple[float, float]:
        """Coordinates of node (i, j)."""
        return (self.x0 + i * self.h, self.y0 + j * self.h)

    def interior_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat arrays of x and y coordinates of all interior nodes."""
        h = self.h
        one_d = np.arange(1, self.n) * h
        x = np.tile(self.x0 + one_d, self.n - 1)
        y = np.repeat(self.y0 + one_d, self.n - 1)
        return x, y


@dataclass
class ScalarField:
    """Values of k or w on the interior nodes of a grid.

    ``values`` is the flat row-major vector; :meth:`matrix` exposes the same
    data as a 2-D array whose row index is j-1 and column index is i-1.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape == self.grid.shape:
            vals = vals.reshape(-1)
        if vals.shape != (self.grid.num_interior,):
            raise ValueError(
                f"field needs {self.grid.num_interior} values for n={self.grid.n}, "
                f"got shape {np.shape(self.values)}"
            )
        self.values = vals

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.num_interior))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        """Evaluate ``fn(x, y)`` (vectorized over arrays) at interior nodes."""
        x, y = grid.interior_coords()
        return cls(grid, np.asarray(fn(x, y), dtype=np.float64))

    def matrix(self) -> np.ndarray:
        """Interior values as a (n-1, n-1) array, rows over j, columns over i."""
        return self.values.reshape(self.grid.shape)

    def at(self, i: int, j: int) -> float:
        return float(self.values[self.grid.flat_index(i, j)])

    def write_csv(self, path) -> None:
        """Write the documented field format: header i,j,x,y,value."""
        n = self.grid.n
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "x", "y", "value"])
            q = 0
            for j in range(1, n):
                for i in range(1, n):
                    x, y = self.grid.point(i, j)
                    writer.writerow(
                        [i, j, _FMT % x, _FMT % y, _FMT % self.values[q]]
                    )
                    q += 1

    @classmethod
    def read_csv(cls, path, grid: Grid | None = None) -> "ScalarField":
        """Read the field format back; infers the grid when none is given.

        The inferred grid assumes the unit-square default only when the node
        coordinates are consistent with it; coordinates are always checked
        against the (given or inferred) grid to 1e-9.
        """
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["i", "j", "x", "y", "value"]:
                raise ValueError(f"{path}: expected header i,j,x,y,value, got {header}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 5:
                    raise ValueError(f"{path}:{lineno}: expected 5 columns")
                try:
                    rows.append(
                        (int(row[0]), int(row[1]), float(row[2]), float(row[3]), float(row[4]))
                    )
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not rows:
            raise ValueError(f"{path}: no data rows")
        if grid is None:
            n = max(r[0] for r in rows) + 1
            # Recover the domain from node coordinates: x = x0 + i*h.
            i1, j1, x1c, y1c, _ = rows[0]
            h = _infer_spacing(rows)
            grid = Grid(n, x0=x1c - i1 * h, x1=x1c + (n - i1) * h,
                        y0=y1c - j1 * h, y1=y1c + (n - j1) * h)
        if len(rows) != grid.num_interior:
            raise ValueError(
                f"{path}: expected {grid.num_interior} rows for n={grid.n}, got {len(rows)}"
            )
        values = np.empty(grid.num_interior)
        seen = np.zeros(grid.num_interior, dtype=bool)
        for i, j, x, y, v in rows:
            q = grid.flat_index(i, j)
            gx, gy = grid.point(i, j)
            if abs(x - gx) > 1e-9 or abs(y - gy) > 1e-9:
                raise ValueError(
                    f"{path}: node ({i},{j}) coordinates ({x},{y}) do not match the grid"
                )
            if seen[q]:
                raise ValueError(f"{path}: duplicate node ({i},{j})")
            seen[q] = True
            values[q] = v
        return cls(grid, values)


def _infer_spacing(rows):
    """Mesh width from any two distinct i values (fields have n >= 2)."""
    base_i, _, base_x, _, _ = rows[0]
    for i, _, x, _, _ in rows[1:]:
        if i != base_i:
            return (x - base_x) / (i - base_i)
    raise ValueError("cannot infer grid spacing from a single column of nodes")


def snake_flatten(fld: ScalarField) -> np.ndarray:
    """Boustrophedon flattening: rows in increasing j, even-indexed rows
    left-to-right, odd-indexed rows right-to-left."""
    mat = fld.matrix().copy()
    mat[1::2] = mat[1::2, ::-1]
    return mat.reshape(-1)


def snake_unflatten(grid: Grid, series: np.ndarray) -> ScalarField:
    """Inverse of :func:`snake_flatten`."""
    series = np.asarray(series, dtype=np.float64)
    if series.shape != (grid.num_interior,):
        raise ValueError(
            f"series length {series.size} does not match grid n={grid.n}"
        )
    mat = series.reshape(grid.shape).copy()
    mat[1::2] = mat[1::2, ::-1]
    return ScalarField(grid, mat.reshape(-1))


def write_snake_csv(path, series) -> None:
    """Write a snake-order series (header idx,value).

    A ScalarField is snake-flattened first; a flat array is written as-is.
    """
    if isinstance(series, ScalarField):
        series = snake_flatten(series)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["idx", "value"])
        for idx, v in enumerate(np.asarray(series, dtype=np.float64)):
            writer.writerow([idx, _FMT % v])


def read_snake_csv(path) -> np.ndarray:
    """Read a snake-order series back."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["idx", "value"]:
            raise ValueError(f"{path}: expected header idx,value, got {header}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or int(row[0]) != len(out):
                raise ValueError(f"{path}:{lineno}: malformed snake row")
            out.append(float(row[1]))
    return np.array(out)
