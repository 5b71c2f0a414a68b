"""Clamped thin-plate bending on a Winkler foundation, by finite differences.

The direct problem is [D·B + diag(k)] w = load, where B discretizes the
biharmonic operator with a 13-point stencil, the clamped conditions w = 0 and
dw/dn = 0 are eliminated by dropping boundary nodes and reflecting ghost
nodes, and the point load is a narrow Gaussian normalized to total force f.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import _kernels
from .errors import SolverFailure
from .grid import Grid, ScalarField

__all__ = [
    "PlateModel",
    "BiharmonicMatrix",
    "ForwardContext",
    "assemble_biharmonic",
    "gaussian_load",
    "forward_solve",
    "forward_map",
    "reactive_pressure",
    "flexural_rigidity",
]

# 13-point stencil of the biharmonic operator, multiplied by h^4:
# (offset_i, offset_j) -> integer coefficient.
_STENCIL = {
    (0, 0): 20,
    (1, 0): -8, (-1, 0): -8, (0, 1): -8, (0, -1): -8,
    (1, 1): 2, (1, -1): 2, (-1, 1): 2, (-1, -1): 2,
    (2, 0): 1, (-2, 0): 1, (0, 2): 1, (0, -2): 1,
}

_RESIDUAL_TOL = 1e-10  # relative to the load, contract of forward_solve


def flexural_rigidity(E: float, nu: float, h: float) -> float:
    """Plate bending stiffness E·h³ / (12·(1 − ν²)).

    Parameters
    ----------
    E : float
        Young's modulus, > 0.
    nu : float
        Poisson's ratio, −1 < nu < 0.5.
    h : float
        Plate thickness, > 0.
    """
    if not E > 0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not h > 0:
        raise ValueError(f"plate thickness must be positive, got {h}")
    if not -1.0 < nu < 0.5:
        raise ValueError(f"Poisson's ratio must lie in (-1, 0.5), got {nu}")
    return E * h**3 / (12.0 * (1.0 - nu**2))


@dataclass(frozen=True)
class PlateModel:
    """Physical description of the loaded plate.

    Parameters
    ----------
    D : float
        Flexural rigidity (uniform), > 0.
    f : float
        Point-load intensity, > 0.
    p0 : tuple of float
        Load application point, strictly inside the domain.
    s : float
        Precision of the Gaussian approximation of the point load
        (per-axis variance 1/s), > 0.
    """

    D: float = 1.0
    f: float = 1.0
    p0: tuple[float, float] = (0.5, 0.5)
    s: float = 1e5

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"flexural rigidity D must be positive, got {self.D}")
        if not self.f > 0:
            raise ValueError(f"load intensity f must be positive, got {self.f}")
        if not self.s > 0:
            raise ValueError(f"load sharpness s must be positive, got {self.s}")
        if len(self.p0) != 2 or not all(np.isfinite(self.p0)):
            raise ValueError(f"load point must be a finite (x, y) pair, got {self.p0}")


@dataclass
class BiharmonicMatrix:
    """Discrete clamped biharmonic operator scaled by 1/h⁴.

    ``mat`` is the CSR matrix; ``band`` is the same operator in the lower
    band layout used by the solver kernels (bandwidth 2(n−1)). Entries are
    exactly integer stencil weights times n⁴, so structural tests can compare
    without tolerance.
    """

    grid: Grid
    mat: scipy.sparse.csr_matrix = field(repr=False)
    band: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.grid.num_interior

    @property
    def bandwidth(self) -> int:
        return 2 * (self.grid.n - 1)

    def to_dense(self) -> np.ndarray:
        return self.mat.toarray()

    def dump_csv(self, path) -> None:
        """Debug dump in coordinate format: header row,col,value."""
        coo = self.mat.tocoo()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "col", "value"])
            for r, c, v in zip(coo.row, coo.col, coo.data):
                writer.writerow([r, c, "%.17g" % v])


def assemble_biharmonic(grid: Grid) -> BiharmonicMatrix:
    """Assemble the 13-point biharmonic matrix with clamped-boundary closure.

    Boundary nodes (w = 0) are dropped; ghost nodes one step outside the
    boundary take the value of their interior mirror (dw/dn = 0), which adds
    +1 to the diagonal weight of nodes adjacent to a boundary edge (20 -> 21,
    corners -> 22).
    """
    n = grid.n
    if n < 4:
        raise ValueError(
            f"assemble_biharmonic needs n >= 4 (at least a 3x3 interior grid), got n={n}"
        )
    m = n - 1
    rows, cols, vals = [], [], []
    for j in range(1, n):
        for i in range(1, n):
            q = (j - 1) * m + (i - 1)
            for (di, dj), c in _STENCIL.items():
                ti, tj = i + di, j + dj
                # Reflect ghost nodes across the boundary they overshoot.
                if ti < 0:
                    ti = -ti
                elif ti > n:
                    ti = 2 * n - ti
                if tj < 0:
                    tj = -tj
                elif tj > n:
                    tj = 2 * n - tj
                # Boundary nodes carry w = 0 and drop out.
                if ti == 0 or ti == n or tj == 0 or tj == n:
                    continue
                rows.append(q)
                cols.append((tj - 1) * m + (ti - 1))
                vals.append(c)
    # 1/h^4 by repeated multiplication: exact when n/side is an integer
    # (unit square), so stencil entries are exactly integer * n^4.
    inv_h = grid.n / (grid.x1 - grid.x0)
    scale = inv_h * inv_h * inv_h * inv_h
    coo = scipy.sparse.coo_matrix(
        (np.array(vals, dtype=np.float64) * scale, (rows, cols)),
        shape=(m * m, m * m),
    )
    mat = coo.tocsr()
    mat.sum_duplicates()

    bw = 2 * m
    band = np.zeros((bw + 1, m * m))
    lower = scipy.sparse.tril(mat).tocoo()
    band[lower.row - lower.col, lower.col] = lower.data
    return BiharmonicMatrix(grid=grid, mat=mat, band=band)


def gaussian_load(grid: Grid, model: PlateModel) -> ScalarField:
    """Gaussian approximation of the point load f·δ(P0) on interior nodes.

    The bivariate normal density with mean P0 and covariance diag(1/s, 1/s)
    is sampled at the interior nodes and discretely renormalized so that
    h² · Σ values = f: the load carries total force f on every grid.
    """
    px, py = model.p0
    if not (grid.x0 < px < grid.x1 and grid.y0 < py < grid.y1):
        raise ValueError(
            f"load point {model.p0} must lie strictly inside the domain "
            f"[{grid.x0},{grid.x1}]x[{grid.y0},{grid.y1}]"
        )
    # Offsets are computed per axis from the node index so that a load
    # point centred in the domain gives bitwise symmetric distances.
    idx = np.arange(1, grid.n, dtype=np.float64)
    dx = (idx - grid.n * (px - grid.x0) / (grid.x1 - grid.x0)) * grid.h
    dy = (idx - grid.n * (py - grid.y0) / (grid.y1 - grid.y0)) * grid.h
    expo = -0.5 * model.s * (np.tile(dx * dx, grid.n - 1) + np.repeat(dy * dy, grid.n - 1))
    # Shift by the max exponent: the density prefactor cancels in the
    # renormalization and the shift keeps the sum away from underflow.
    g = np.exp(expo - expo.max())
    total = grid.h**2 * g.sum()
    return ScalarField(grid, g * (model.f / total))


def _coerce(values, grid: Grid, name: str) -> np.ndarray:
    """Accept a ScalarField or array; return the flat float64 vector."""
    if isinstance(values, ScalarField):
        if values.grid != grid:
            raise ValueError(f"{name} is defined on a different grid")
        return values.values
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.shape != (grid.num_interior,):
        raise ValueError(
            f"{name} must have {grid.num_interior} values for n={grid.n}, "
            f"got {arr.size}"
        )
    return arr


def forward_solve(B: BiharmonicMatrix, k, load, D: float = 1.0) -> ScalarField:
    """Solve (D·B + diag(k)) w = load.

    ``k`` and ``load`` may be ScalarFields on B's grid or flat arrays.
    The returned solution satisfies ‖load − (D·B + diag(k))w‖₂ ≤ 1e-10·‖load‖₂
    (one step of iterative refinement is applied if the first solve misses).

    Raises
    ------
    SolverFailure
        If D·B + diag(k) is not positive definite (possible for candidate k
        fields with large negative values) or the residual contract cannot
        be met.
    """
    grid = B.grid
    kv = _coerce(k, grid, "k")
    fv = _coerce(load, grid, "load")
    if not D > 0:
        raise ValueError(f"rigidity D must be positive, got {D}")
    if not np.isfinite(kv).all():
        raise ValueError("k contains non-finite values")
    if not np.isfinite(fv).all():
        raise ValueError("load contains non-finite values")

    ab = B.band * D
    ab[0, :] += kv
    info = _kernels.cholesky_band(ab)
    if info:
        raise SolverFailure(
            f"factorization of D·B + diag(k) broke down at column {info} "
            "(system not positive definite)"
        )
    w = _kernels.solve_band(ab, fv)

    load_norm = float(np.linalg.norm(fv))
    if load_norm == 0.0:
        return ScalarField(grid, np.zeros_like(fv))
    residual = fv - (D * (B.mat @ w) + kv * w)
    rel = float(np.linalg.norm(residual)) / load_norm
    if rel > _RESIDUAL_TOL:
        w = w + _kernels.solve_band(ab, residual)
        residual = fv - (D * (B.mat @ w) + kv * w)
        rel = float(np.linalg.norm(residual)) / load_norm
        if rel > _RESIDUAL_TOL:
            raise SolverFailure(
                f"linear solve residual {rel:.3e} exceeds {_RESIDUAL_TOL:.0e} "
                "after refinement"
            )
    return ScalarField(grid, w)


@dataclass
class ForwardContext:
    """Frozen ingredients of the parameter-to-observation map k ↦ w.

    ``mask`` optionally restricts the observation to a subset of interior
    nodes (boolean vector); the default observes every interior node.
    """

    grid: Grid
    model: PlateModel
    B: BiharmonicMatrix
    load: ScalarField = None
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.load is None:
            self.load = gaussian_load(self.grid, self.model)
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool).reshape(-1)
            if self.mask.shape != (self.grid.num_interior,):
                raise ValueError("observation mask length does not match the grid")

    @property
    def q(self) -> int:
        """Observation dimension."""
        return int(self.mask.sum()) if self.mask is not None else self.grid.num_interior

    def __call__(self, k) -> np.ndarray:
        return forward_map(k, self)


def forward_map(k, ctx: ForwardContext) -> np.ndarray:
    """Evaluate G(k): solve the plate system and observe interior nodes."""
    w = forward_solve(ctx.B, k, ctx.load, ctx.model.D)
    out = w.values
    return out[ctx.mask] if ctx.mask is not None else out


def reactive_pressure(k: ScalarField, w: ScalarField) -> ScalarField:
    """Winkler reactive pressure p = k·w, pointwise."""
    if k.grid != w.grid:
        raise ValueError("k and w are defined on different grids")
    return ScalarField(k.grid, k.values * w.values)
