"""Core spatial data types: rectangular windows, point patterns, and
gridded covariates with deterministic location-to-value lookup.

All types are immutable after construction and safe to share between
worker processes.  Covariates are piecewise constant on raster cells
(pixel-image semantics): a location is assigned to the cell whose
half-open rectangle ``[x_lo, x_hi) x [y_lo, y_hi)`` contains it, with the
top/right window edges closed so that boundary points remain inside.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from .errors import DataError

__all__ = [
    "Window",
    "PointPattern",
    "RasterGrid",
    "CovariateStack",
    "StandardizeTransform",
    "evaluate_covariates",
    "standardize",
    "resample_grid",
]


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangular observation window."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise DataError(
                f"degenerate window [{self.x_min}, {self.x_max}] x "
                f"[{self.y_min}, {self.y_max}]"
            )

    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, x, y) -> NDArray[np.bool_]:
        """Boundary-inclusive membership test (vectorized)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (
            (x >= self.x_min)
            & (x <= self.x_max)
            & (y >= self.y_min)
            & (y <= self.y_max)
        )

    def expand(self, pad: float) -> "Window":
        return Window(self.x_min - pad, self.x_max + pad,
                      self.y_min - pad, self.y_max + pad)


@dataclass(frozen=True)
class PointPattern:
    """An ordered finite set of planar locations inside a window.

    Duplicate coordinates are permitted; ``has_duplicates`` flags them so
    downstream consumers can decide whether to care.
    """

    points: NDArray[np.float64]
    window: Window
    has_duplicates: bool = field(init=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DataError(f"points must be an (n, 2) array, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("point coordinates must be finite")
        inside = self.window.contains(pts[:, 0], pts[:, 1])
        if not np.all(inside):
            bad = pts[~inside][0]
            raise DataError(f"point ({bad[0]}, {bad[1]}) lies outside the window")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        dup = len(pts) > 1 and len(np.unique(pts, axis=0)) < len(pts)
        object.__setattr__(self, "has_duplicates", bool(dup))

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


def _cell_indices(window: Window, n_cols: int, n_rows: int, x, y):
    """Map locations to (row, col) cell indices.

    Cells partition the window as half-open rectangles; the closed top and
    right window edges fall into the last row/column.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    col = np.floor((x - window.x_min) / window.width * n_cols).astype(np.int64)
    row = np.floor((y - window.y_min) / window.height * n_rows).astype(np.int64)
    col = np.minimum(np.maximum(col, 0), n_cols - 1)
    row = np.minimum(np.maximum(row, 0), n_rows - 1)
    return row, col


@dataclass(frozen=True)
class RasterGrid:
    """A single gridded covariate: ``n_rows x n_cols`` values on a window.

    ``values[i, j]`` covers the cell in row ``i`` (counted from the bottom,
    i.e. from ``y_min``) and column ``j`` (from ``x_min``).
    """

    n_cols: int
    n_rows: int
    window: Window
    values: NDArray[np.float64]
    name: str = ""

    def __post_init__(self) -> None:
        if self.n_cols < 1 or self.n_rows < 1:
            raise DataError("grid dimensions must be positive")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.n_rows, self.n_cols):
            raise DataError(
                f"grid '{self.name}': values shape {vals.shape} does not match "
                f"(n_rows, n_cols)=({self.n_rows}, {self.n_cols})"
            )
        if not np.all(np.isfinite(vals)):
            raise DataError(
                f"grid '{self.name}' contains non-finite values; impute or "
                "reject missing cells at load time"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def cell_area(self) -> float:
        return self.window.area() / (self.n_cols * self.n_rows)

    @property
    def cell_dx(self) -> float:
        return self.window.width / self.n_cols

    @property
    def cell_dy(self) -> float:
        return self.window.height / self.n_rows

    def lookup(self, x, y) -> NDArray[np.float64]:
        """Value of the cell containing each location (piecewise constant)."""
        inside = self.window.contains(x, y)
        if not np.all(inside):
            raise DataError(f"location outside window of grid '{self.name}'")
        row, col = _cell_indices(self.window, self.n_cols, self.n_rows, x, y)
        return self.values[row, col]

    def cell_centers(self):
        """Center coordinates of every cell as (xs, ys) 1-d arrays."""
        xs = self.window.x_min + (np.arange(self.n_cols) + 0.5) * self.cell_dx
        ys = self.window.y_min + (np.arange(self.n_rows) + 0.5) * self.cell_dy
        return xs, ys


@dataclass(frozen=True)
class StandardizeTransform:
    """Per-covariate affine transform recorded by :func:`standardize`.

    Coefficients fitted on the standardized scale map back to the original
    scale via ``beta_orig_j = beta_std_j / sds[j]`` together with an
    intercept shift ``-sum_j beta_std_j * means[j] / sds[j]``.
    """

    means: NDArray[np.float64]
    sds: NDArray[np.float64]

    def coefficients_to_original(self, beta_std, intercept_std=None):
        beta_std = np.asarray(beta_std, dtype=float)
        beta = beta_std / self.sds
        if intercept_std is None:
            return beta
        intercept = intercept_std - float(np.sum(beta_std * self.means / self.sds))
        return beta, intercept


@dataclass(frozen=True)
class CovariateStack:
    """A set of covariate grids sharing one window and resolution.

    ``evaluate`` returns the covariate vector at a location, prepending a
    constant 1 when ``includes_intercept`` is set.
    """

    grids: tuple[RasterGrid, ...]
    includes_intercept: bool = False
    standardized: bool = False

    def __post_init__(self) -> None:
        grids = tuple(self.grids)
        if not grids:
            raise DataError("covariate stack needs at least one grid")
        ref = grids[0]
        for g in grids[1:]:
            if g.window != ref.window or g.n_cols != ref.n_cols or g.n_rows != ref.n_rows:
                raise DataError(
                    f"grid '{g.name}' does not share window/resolution with "
                    f"'{ref.name}'"
                )
        object.__setattr__(self, "grids", grids)

    @property
    def window(self) -> Window:
        return self.grids[0].window

    @property
    def n_covariates(self) -> int:
        return len(self.grids)

    @property
    def n_outputs(self) -> int:
        return len(self.grids) + (1 if self.includes_intercept else 0)

    @property
    def n_cols(self) -> int:
        return self.grids[0].n_cols

    @property
    def n_rows(self) -> int:
        return self.grids[0].n_rows

    @property
    def names(self) -> list[str]:
        return [g.name for g in self.grids]

    def column_names(self) -> list[str]:
        base = ["intercept"] if self.includes_intercept else []
        return base + self.names

    def evaluate(self, x, y) -> NDArray[np.float64]:
        """Design rows for locations: shape (n, p) or (n, p+1) with intercept."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        cols = [g.lookup(x, y) for g in self.grids]
        if self.includes_intercept:
            cols.insert(0, np.ones_like(x))
        return np.column_stack(cols)

    def cell_design_matrix(self) -> NDArray[np.float64]:
        """Design rows for all cells, flattened in row-major (row, col) order."""
        cols = [g.values.ravel() for g in self.grids]
        if self.includes_intercept:
            cols.insert(0, np.ones(self.n_cols * self.n_rows))
        return np.column_stack(cols)

    def with_intercept(self, flag: bool = True) -> "CovariateStack":
        return replace(self, includes_intercept=flag)

    def subset(self, indices) -> "CovariateStack":
        """Stack restricted to the given covariate indices (intercept flag kept)."""
        grids = tuple(self.grids[i] for i in indices)
        return CovariateStack(grids, self.includes_intercept, self.standardized)


def evaluate_covariates(stack: CovariateStack, x, y) -> NDArray[np.float64]:
    """Covariate vector(s) at locations; nearest-cell lookup per grid."""
    return stack.evaluate(x, y)


def standardize(stack: CovariateStack) -> tuple[CovariateStack, StandardizeTransform]:
    """Center and scale every covariate to mean 0, variance 1 over grid cells.

    Uses the population (divide-by-N) variance over cells.  Raises
    ``DataError`` for a zero-variance covariate, naming the grid.
    """
    means = np.empty(stack.n_covariates)
    sds = np.empty(stack.n_covariates)
    new_grids = []
    for k, g in enumerate(stack.grids):
        m = float(np.mean(g.values))
        v = float(np.mean((g.values - m) ** 2))
        if v <= 0.0 or not np.isfinite(v):
            raise DataError(f"covariate '{g.name}' has zero variance; cannot standardize")
        s = np.sqrt(v)
        means[k] = m
        sds[k] = s
        new_grids.append(replace(g, values=(g.values - m) / s))
    out = CovariateStack(tuple(new_grids), stack.includes_intercept, standardized=True)
    return out, StandardizeTransform(means=means, sds=sds)


def resample_grid(grid: RasterGrid, n_cols: int, n_rows: int) -> RasterGrid:
    """Nearest-cell resampling onto the same window.

    Each output cell takes the value of the source cell containing its
    center, so the output value range is a subset of the input range.
    """
    if n_cols < 1 or n_rows < 1:
        raise DataError("target dimensions must be positive")
    if n_cols == grid.n_cols and n_rows == grid.n_rows:
        return grid
    xs = grid.window.x_min + (np.arange(n_cols) + 0.5) * grid.window.width / n_cols
    ys = grid.window.y_min + (np.arange(n_rows) + 0.5) * grid.window.height / n_rows
    xg, yg = np.meshgrid(xs, ys)
    values = grid.lookup(xg.ravel(), yg.ravel()).reshape(n_rows, n_cols)
    return replace(grid, n_cols=n_cols, n_rows=n_rows, values=values)
