"""Point-process simulators with log-linear intensity.

Both simulators draw from a dominating homogeneous process and thin with
probability ``rho(u) / rho_max``, where ``rho`` is piecewise constant on
the covariate grid, so every draw is an exact sample of the target
intensity.  Randomness comes from the counter-based Philox generator;
per-replicate streams are split off a master seed so replicate ``k`` sees
the same draws no matter how many replicates run or in which order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp

from .domain import CovariateStack, PointPattern, Window, _cell_indices
from .errors import DataError, NumericError

__all__ = [
    "ThomasParams",
    "IntensityModel",
    "simulate_poisson",
    "simulate_thomas",
    "thomas_pair_correlation",
    "thomas_excess_closeness",
    "calibrate_intercept",
    "rng_from_seed",
    "replicate_seeds",
]

# hard cap on dominating-process draws; beyond this the model is
# almost certainly miscalibrated
MAX_PROPOSALS = 5e7

PARENT_PADDING_SDS = 4.0


def rng_from_seed(seed) -> np.random.Generator:
    """Philox generator from an int seed, SeedSequence, or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def replicate_seeds(master_seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent child seeds for ``n`` replicates of one master seed."""
    return np.random.SeedSequence(master_seed).spawn(n)


@dataclass(frozen=True)
class ThomasParams:
    """Cluster-process parameters: parent intensity ``kappa`` (points per
    unit area), offspring dispersion ``omega`` (length units), and mean
    offspring per parent ``mu``.

    ``mu`` may be left unset; the simulator always derives the offspring
    mean from the target intensity (see :func:`simulate_thomas`), so the
    field only matters for analytic bookkeeping.
    """

    kappa: float
    omega: float
    mu: float | None = None

    def __post_init__(self) -> None:
        if not (self.kappa > 0 and np.isfinite(self.kappa)):
            raise DataError(f"parent intensity kappa must be positive, got {self.kappa}")
        if not (self.omega > 0 and np.isfinite(self.omega)):
            raise DataError(f"offspring dispersion omega must be positive, got {self.omega}")
        if self.mu is not None and not self.mu > 0:
            raise DataError(f"mean offspring mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class IntensityModel:
    """Log-linear intensity ``rho(u) = exp(z(u)' beta)`` over a covariate stack."""

    stack: CovariateStack
    beta: NDArray[np.float64]

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=float)
        if beta.shape != (self.stack.n_outputs,):
            raise DataError(
                f"beta has length {beta.shape}, stack produces "
                f"{self.stack.n_outputs} outputs"
            )
        if not np.all(np.isfinite(beta)):
            raise DataError("beta must be finite")
        beta = beta.copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        Z = self.stack.cell_design_matrix()
        eta = (Z @ beta).reshape(self.stack.n_rows, self.stack.n_cols)
        grid = np.exp(eta)
        if not np.all(np.isfinite(grid)):
            raise DataError("intensity overflows on some grid cells; model invalid")
        eta.setflags(write=False)
        grid.setflags(write=False)
        object.__setattr__(self, "_eta_grid", eta)
        object.__setattr__(self, "_intensity_grid", grid)

    @property
    def window(self) -> Window:
        return self.stack.window

    def linear_predictor_grid(self) -> NDArray[np.float64]:
        return self._eta_grid

    def intensity_grid(self) -> NDArray[np.float64]:
        return self._intensity_grid

    def intensity_at(self, x, y) -> NDArray[np.float64]:
        # the intensity is piecewise constant on cells, so a grid lookup is
        # exact and avoids materializing design rows for large point sets
        inside = self.window.contains(x, y)
        if not np.all(inside):
            raise DataError("location outside the model window")
        row, col = _cell_indices(self.window, self.stack.n_cols,
                                 self.stack.n_rows, x, y)
        return self._intensity_grid[row, col]

    def expected_count(self) -> float:
        cell_area = self.window.area() / (self.stack.n_rows * self.stack.n_cols)
        return float(np.sum(self._intensity_grid) * cell_area)


def calibrate_intercept(stack: CovariateStack, beta_covariates,
                        target_count: float) -> NDArray[np.float64]:
    """Intercept making the expected point count over the window equal
    ``target_count``, given the non-intercept coefficients.

    Solves ``exp(b0) * sum_cells area * exp(z' beta) = target`` in closed
    form on the covariate grid.
    """
    if not stack.includes_intercept:
        raise DataError("intercept calibration needs a stack with an intercept")
    if target_count <= 0:
        raise DataError("target point count must be positive")
    beta_covariates = np.asarray(beta_covariates, dtype=float)
    Z = stack.cell_design_matrix()[:, 1:]
    cell_area = stack.window.area() / (stack.n_rows * stack.n_cols)
    log_mass = logsumexp(Z @ beta_covariates) + np.log(cell_area)
    b0 = np.log(target_count) - log_mass
    return np.concatenate([[b0], beta_covariates])


def _thin_to_intensity(points: NDArray[np.float64], model: IntensityModel,
                       rho_max: float, rng: np.random.Generator) -> NDArray[np.float64]:
    if len(points) == 0:
        return points.reshape(0, 2)
    rho = model.intensity_at(points[:, 0], points[:, 1])
    keep = rng.random(len(points)) * rho_max < rho
    return points[keep]


def simulate_poisson(model: IntensityModel, rng_seed) -> PointPattern:
    """Inhomogeneous Poisson sample via dominating-rate thinning."""
    rng = rng_from_seed(rng_seed)
    win = model.window
    rho_max = float(np.max(model.intensity_grid()))
    if rho_max == 0.0:
        return PointPattern(np.empty((0, 2)), win)
    expected = rho_max * win.area()
    if expected > MAX_PROPOSALS:
        raise NumericError(
            f"dominating intensity implies {expected:.3g} proposal points; "
            "the model looks miscalibrated"
        )
    n = rng.poisson(expected)
    pts = np.column_stack([
        rng.uniform(win.x_min, win.x_max, n),
        rng.uniform(win.y_min, win.y_max, n),
    ])
    return PointPattern(_thin_to_intensity(pts, model, rho_max, rng), win)


def simulate_thomas(model: IntensityModel, params: ThomasParams,
                    rng_seed) -> PointPattern:
    """Thomas cluster sample with the model's log-linear inhomogeneity.

    Parents are homogeneous Poisson(``kappa``) on the window padded by
    4 * omega per side (covering all but ~3e-5 of the offspring mass of
    outside parents); each parent emits Poisson(``mu_sim``) offspring with
    isotropic Gaussian(sd = omega) displacements.  The offspring mean is
    calibrated as ``mu_sim = rho_max / kappa`` so the stationary offspring
    intensity equals the thinning ceiling, and independent thinning by
    ``rho(u) / rho_max`` then reproduces the target intensity in
    expectation.
    """
    rng = rng_from_seed(rng_seed)
    win = model.window
    rho_max = float(np.max(model.intensity_grid()))
    if rho_max == 0.0:
        return PointPattern(np.empty((0, 2)), win)
    parent_win = win.expand(PARENT_PADDING_SDS * params.omega)
    mu_sim = rho_max / params.kappa
    expected = params.kappa * parent_win.area() * mu_sim
    if expected > MAX_PROPOSALS:
        raise NumericError(
            f"offspring budget {expected:.3g} is unreasonably large; "
            "check kappa/omega against the target intensity"
        )

    n_parents = rng.poisson(params.kappa * parent_win.area())
    parents = np.column_stack([
        rng.uniform(parent_win.x_min, parent_win.x_max, n_parents),
        rng.uniform(parent_win.y_min, parent_win.y_max, n_parents),
    ])
    counts = rng.poisson(mu_sim, n_parents)
    total = int(np.sum(counts))
    offspring = np.repeat(parents, counts, axis=0) + rng.normal(0.0, params.omega,
                                                                (total, 2))
    inside = win.contains(offspring[:, 0], offspring[:, 1])
    offspring = offspring[inside]
    return PointPattern(_thin_to_intensity(offspring, model, rho_max, rng), win)


def thomas_pair_correlation(params: ThomasParams, r) -> NDArray[np.float64]:
    """Pair correlation of the (stationary) Thomas process.

    Two points at distance ``r`` share a parent with a relative excess that
    follows from convolving two Gaussian(sd = omega) displacements (a
    Gaussian with sd ``omega * sqrt(2)``) and dividing the parent rate:

        g(r) = 1 + exp(-r^2 / (4 omega^2)) / (4 pi kappa omega^2)

    It decreases monotonically from ``1 + 1/(4 pi kappa omega^2)`` at r = 0
    to 1 at infinity; independent thinning leaves it unchanged, so the same
    g applies to the inhomogeneous samples drawn by 'simulate_thomas'.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("pair-correlation distance must be nonnegative")
    excess = np.exp(-(r ** 2) / (4.0 * params.omega ** 2))
    return 1.0 + excess / (4.0 * np.pi * params.kappa * params.omega ** 2)


def thomas_excess_closeness(params: ThomasParams, radius: float) -> float:
    """Closed form of ``integral over |v| <= R of (g(v) - 1) dv`` for the
    Thomas pair correlation: ``(1 - exp(-R^2/(4 omega^2))) / kappa``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return (1.0 - np.exp(-(radius ** 2) / (4.0 * params.omega ** 2))) / params.kappa
