"""Quadrature discretization of the intensity estimating equations.

A quadrature scheme carries the observed points plus a rectangular grid of
dummy points, with counting weights: the window is tiled, each tile
contributes its area split evenly among the quadrature points it contains
(its dummy point plus any data points).  On such a scheme the Poisson and
logistic estimating functions reduce to weighted GLM objectives

    poisson:   sum_i v_i w_i (y_i log rho_i - rho_i),     y_i = 1/v_i or 0
    logistic:  sum_data w_i log(rho_i / (delta_i + rho_i))
               - sum_i v_i w_i delta_i log((rho_i + delta_i) / delta_i)

with rho_i = exp(z_i' beta).  Both are concave in beta.  Gradients and
curvatures are exposed in the per-point form used by the IRLS solver:
grad = Z' r and hessian = -Z' diag(W) Z.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .domain import CovariateStack, PointPattern, Window, _cell_indices
from .errors import DataError

__all__ = [
    "QuadratureScheme",
    "Likelihood",
    "POISSON",
    "build_scheme",
    "poisson_objective",
    "logistic_objective",
    "poisson_score",
    "logistic_score",
]

# linear predictors are clamped here before exponentiation
ETA_CLAMP = 700.0

WEIGHT_SUM_RTOL = 1e-8


@dataclass
class OverflowCounter:
    """Mutable tally of clamped linear-predictor evaluations."""

    count: int = 0


def exp_clamped(eta: NDArray[np.float64],
                counter: OverflowCounter | None = None) -> NDArray[np.float64]:
    clipped = np.clip(eta, -ETA_CLAMP, ETA_CLAMP)
    if counter is not None:
        counter.count += int(np.sum(np.abs(eta) > ETA_CLAMP))
    return np.exp(clipped)


@dataclass(frozen=True)
class QuadratureScheme:
    """Data + dummy points with counting weights and design rows.

    Data points come first (in pattern order), dummy points after (tile
    row-major order).  ``y`` is 1/weight for data points and 0 for dummies,
    so that ``sum_i v_i y_i f(u_i) = sum_data f(u_i)`` for any f.
    """

    points: NDArray[np.float64]
    is_data: NDArray[np.bool_]
    weights: NDArray[np.float64]
    Z: NDArray[np.float64]
    window: Window
    has_intercept: bool = False
    column_names: tuple[str, ...] = ()
    y: NDArray[np.float64] = field(init=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0):
            raise DataError("quadrature weights must be strictly positive")
        area = self.window.area()
        if abs(float(np.sum(w)) - area) > WEIGHT_SUM_RTOL * area:
            raise DataError(
                f"quadrature weights sum to {np.sum(w):.10g}, expected the "
                f"window area {area:.10g}"
            )
        if self.Z.shape != (len(pts), self.Z.shape[1]) or len(w) != len(pts):
            raise DataError("inconsistent quadrature array lengths")
        if self.has_intercept and not np.all(self.Z[:, 0] == 1.0):
            raise DataError("intercept column of the design must be constant 1")
        y = np.where(self.is_data, 1.0 / w, 0.0)
        object.__setattr__(self, "y", y)

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @property
    def n_data(self) -> int:
        return int(np.sum(self.is_data))

    @property
    def n_coefficients(self) -> int:
        return self.Z.shape[1]

    @property
    def penalized_columns(self) -> NDArray[np.int64]:
        start = 1 if self.has_intercept else 0
        return np.arange(start, self.n_coefficients)

    def domain_area(self) -> float:
        return self.window.area()


def build_scheme(pattern: PointPattern, stack: CovariateStack,
                 n_dummy_x: int, n_dummy_y: int) -> QuadratureScheme:
    """Counting-weight scheme with dummies at the centers of a tile grid."""
    if n_dummy_x < 1 or n_dummy_y < 1:
        raise DataError("dummy grid dimensions must be positive")
    if pattern.window != stack.window:
        raise DataError("pattern window does not match covariate window")
    win = pattern.window
    tile_area = win.area() / (n_dummy_x * n_dummy_y)

    dx = win.width / n_dummy_x
    dy = win.height / n_dummy_y
    cx = win.x_min + (np.arange(n_dummy_x) + 0.5) * dx
    cy = win.y_min + (np.arange(n_dummy_y) + 0.5) * dy
    gx, gy = np.meshgrid(cx, cy)
    dummy = np.column_stack([gx.ravel(), gy.ravel()])

    data = pattern.points
    drow, dcol = _cell_indices(win, n_dummy_x, n_dummy_y, data[:, 0], data[:, 1])
    data_tile = drow * n_dummy_x + dcol
    counts = np.bincount(data_tile, minlength=n_dummy_x * n_dummy_y)

    # every tile holds 1 dummy + counts[t] data points sharing tile_area
    w_data = tile_area / (1.0 + counts[data_tile])
    w_dummy = tile_area / (1.0 + counts)

    points = np.vstack([data, dummy])
    weights = np.concatenate([w_data, w_dummy])
    is_data = np.zeros(len(points), dtype=bool)
    is_data[: len(data)] = True
    Z = stack.evaluate(points[:, 0], points[:, 1])
    return QuadratureScheme(
        points=points, is_data=is_data, weights=weights, Z=Z, window=win,
        has_intercept=stack.includes_intercept,
        column_names=tuple(stack.column_names()),
    )


@dataclass(frozen=True)
class Likelihood:
    """Estimating-equation choice: ``poisson`` or ``logistic`` with its
    dummy-process rate ``delta`` (scalar or per-point array)."""

    kind: str
    delta: float | NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("poisson", "logistic"):
            raise ValueError(f"unknown likelihood '{self.kind}'")
        if self.kind == "logistic":
            if self.delta is None:
                raise ValueError("logistic likelihood needs a dummy-process rate delta")
            if np.any(np.asarray(self.delta) <= 0):
                raise ValueError("delta must be strictly positive")
        elif self.delta is not None:
            raise ValueError("poisson likelihood takes no delta")

    def delta_at(self, scheme: QuadratureScheme) -> NDArray[np.float64]:
        return np.broadcast_to(np.asarray(self.delta, dtype=float),
                               (scheme.n_points,))

    def objective(self, scheme, beta, w=1.0, counter=None) -> float:
        if self.kind == "poisson":
            return poisson_objective(scheme, beta, w, counter)
        return logistic_objective(scheme, beta, w, self.delta, counter)

    def irls_parts(self, scheme, beta, w=1.0, counter=None):
        """(objective, residual r, curvature W) with grad = Z'r, hess = -Z'WZ."""
        w = np.broadcast_to(np.asarray(w, dtype=float), (scheme.n_points,))
        eta = scheme.Z @ np.asarray(beta, dtype=float)
        rho = exp_clamped(eta, counter)
        v = scheme.weights
        if self.kind == "poisson":
            obj = float(np.sum(np.where(scheme.is_data, w * eta, 0.0))
                        - np.sum(v * w * rho))
            r = v * w * (scheme.y - rho)
            W = v * w * rho
            return obj, r, W
        delta = self.delta_at(scheme)
        p = rho / (rho + delta)
        data_term = np.where(scheme.is_data, w * np.log(p), 0.0)
        obj = float(np.sum(data_term) - np.sum(v * w * delta * np.log1p(rho / delta)))
        r = np.where(scheme.is_data, w * (1.0 - p), 0.0) - v * w * delta * p
        W = np.where(scheme.is_data, w * p * (1.0 - p), 0.0) + v * w * delta * p * (1.0 - p)
        return obj, r, W


POISSON = Likelihood("poisson")


def poisson_objective(scheme: QuadratureScheme, beta, w=1.0,
                      counter: OverflowCounter | None = None) -> float:
    """Weighted Poisson objective ``sum_i v_i w_i (y_i log rho_i - rho_i)``.

    Uses the convention ``y_i log rho_i = 0`` for dummy points; linear
    predictors beyond +-700 are clamped and tallied on ``counter``.
    """
    w = np.broadcast_to(np.asarray(w, dtype=float), (scheme.n_points,))
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    eta = scheme.Z @ np.asarray(beta, dtype=float)
    rho = exp_clamped(eta, counter)
    # v * y = 1 for data points, so the log term reduces to w * eta there
    log_term = np.where(scheme.is_data, w * np.clip(eta, -ETA_CLAMP, ETA_CLAMP), 0.0)
    return float(np.sum(log_term) - np.sum(scheme.weights * w * rho))


def logistic_objective(scheme: QuadratureScheme, beta, w=1.0, delta=1.0,
                       counter: OverflowCounter | None = None) -> float:
    """Discretized logistic-regression objective with dummy rate ``delta``."""
    w = np.broadcast_to(np.asarray(w, dtype=float), (scheme.n_points,))
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (scheme.n_points,))
    if np.any(delta <= 0):
        raise ValueError("delta must be strictly positive")
    eta = scheme.Z @ np.asarray(beta, dtype=float)
    rho = exp_clamped(eta, counter)
    data_term = np.where(scheme.is_data, w * np.log(rho / (rho + delta)), 0.0)
    integral = scheme.weights * w * delta * np.log1p(rho / delta)
    return float(np.sum(data_term) - np.sum(integral))


def poisson_score(scheme: QuadratureScheme, beta, w=1.0) -> NDArray[np.float64]:
    """Gradient ``sum_i v_i w_i (y_i - rho_i) z_i`` of the Poisson objective."""
    _, r, _ = POISSON.irls_parts(scheme, beta, w)
    return scheme.Z.T @ r


def logistic_score(scheme: QuadratureScheme, beta, w=1.0, delta=1.0) -> NDArray[np.float64]:
    _, r, _ = Likelihood("logistic", delta).irls_parts(scheme, beta, w)
    return scheme.Z.T @ r
