"""Penalty functions for sparse intensity regression.

Supported kinds (``theta`` below is the coefficient magnitude, ``lam`` the
per-coordinate tuning parameter):

* ``ridge``           0.5 * lam * theta^2
* ``lasso``           lam * theta
* ``enet``            lam * (gamma * theta + 0.5 * (1 - gamma) * theta^2),
                      0 < gamma < 1
* ``adaptive_lasso``  lasso with per-coordinate lam_j
* ``adaptive_enet``   enet with per-coordinate lam_j
* ``scad``            lam*theta on [0, lam];
                      (gamma*lam*theta - 0.5*(theta^2 + lam^2)) / (gamma - 1)
                      on [lam, gamma*lam];
                      lam^2*(gamma^2 - 1) / (2*(gamma - 1)) beyond;  gamma > 2
* ``mcplus``          lam*theta - theta^2/(2*gamma) on [0, gamma*lam];
                      0.5*gamma*lam^2 beyond;  gamma > 1

All penalties are nonnegative with value 0 at 0, continuous (including at
the SCAD/MC+ knots), and continuously differentiable away from 0.  First
and second derivatives use the left-branch value at knots; the knots have
measure zero in coordinate descent so the convention never matters there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "PenaltySpec",
    "PENALTY_KINDS",
    "value",
    "dvalue",
    "d2value",
    "dvalue_at_zero",
    "penalty_total",
    "adaptive_lambdas",
    "PenaltyRates",
    "rate_sequences",
    "rate_sequences_closed_form",
]

PENALTY_KINDS = ("ridge", "lasso", "enet", "adaptive_lasso", "adaptive_enet",
                 "scad", "mcplus")
_GAMMA_DEFAULTS = {"enet": 0.5, "adaptive_enet": 0.5, "scad": 3.7, "mcplus": 3.0}
ADAPTIVE_WEIGHT_FLOOR = 1e-10


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty identity plus tuning parameters.

    ``lam`` is the base tuning parameter; ``lam_weights`` (optional) holds
    per-coordinate multipliers so that coordinate ``j`` is penalized with
    ``lam * lam_weights[j]``.  Adaptive kinds are the intended users of the
    weights but any kind accepts them.
    """

    kind: str
    lam: float
    gamma: float | None = None
    lam_weights: NDArray[np.float64] | None = None
    weight_capped: NDArray[np.bool_] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in PENALTY_KINDS:
            raise ValueError(f"unknown penalty kind '{self.kind}'")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be a nonnegative real, got {self.lam}")
        gamma = self.gamma
        if self.kind in _GAMMA_DEFAULTS:
            if gamma is None:
                gamma = _GAMMA_DEFAULTS[self.kind]
            if self.kind in ("enet", "adaptive_enet") and not 0 < gamma < 1:
                raise ValueError(f"enet mixing gamma must lie in (0, 1), got {gamma}")
            if self.kind == "scad" and not gamma > 2:
                raise ValueError(f"scad gamma must exceed 2, got {gamma}")
            if self.kind == "mcplus" and not gamma > 1:
                raise ValueError(f"mcplus gamma must exceed 1, got {gamma}")
        elif gamma is not None:
            raise ValueError(f"penalty '{self.kind}' takes no gamma parameter")
        object.__setattr__(self, "gamma", gamma)
        if self.lam_weights is not None:
            w = np.asarray(self.lam_weights, dtype=float)
            if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("lam_weights must be a 1-d nonnegative finite vector")
            w = w.copy()
            w.setflags(write=False)
            object.__setattr__(self, "lam_weights", w)

    def lam_at(self, j: int) -> float:
        if self.lam_weights is None:
            return self.lam
        return self.lam * float(self.lam_weights[j])

    def lam_vector(self, p: int) -> NDArray[np.float64]:
        if self.lam_weights is None:
            return np.full(p, self.lam)
        if len(self.lam_weights) != p:
            raise ValueError(
                f"penalty has {len(self.lam_weights)} per-coordinate weights "
                f"but {p} coordinates were requested"
            )
        return self.lam * np.asarray(self.lam_weights)

    def with_lam(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.kind, lam, self.gamma, self.lam_weights,
                           self.weight_capped)


def _value_scalar(kind: str, lam: float, gamma: float | None, theta: float) -> float:
    if kind == "ridge":
        return 0.5 * lam * theta * theta
    if kind in ("lasso", "adaptive_lasso"):
        return lam * theta
    if kind in ("enet", "adaptive_enet"):
        return lam * (gamma * theta + 0.5 * (1.0 - gamma) * theta * theta)
    if kind == "scad":
        if theta <= lam:
            return lam * theta
        if theta <= gamma * lam:
            return (gamma * lam * theta - 0.5 * (theta * theta + lam * lam)) / (gamma - 1.0)
        return lam * lam * (gamma * gamma - 1.0) / (2.0 * (gamma - 1.0))
    # mcplus
    if theta <= gamma * lam:
        return lam * theta - theta * theta / (2.0 * gamma)
    return 0.5 * gamma * lam * lam


def value(spec: PenaltySpec, j: int, theta: float) -> float:
    """Penalty value at magnitude ``theta >= 0`` for coordinate ``j``."""
    if theta < 0:
        raise ValueError(f"penalty argument must be nonnegative, got {theta}")
    return _value_scalar(spec.kind, spec.lam_at(j), spec.gamma, float(theta))


def dvalue(spec: PenaltySpec, j: int, theta: float) -> float:
    """First derivative at ``theta > 0`` (left branch at SCAD/MC+ knots)."""
    if theta <= 0:
        raise ValueError(f"penalty derivative needs theta > 0, got {theta}")
    lam, gamma = spec.lam_at(j), spec.gamma
    kind = spec.kind
    if kind == "ridge":
        return lam * theta
    if kind in ("lasso", "adaptive_lasso"):
        return lam
    if kind in ("enet", "adaptive_enet"):
        return lam * (gamma + (1.0 - gamma) * theta)
    if kind == "scad":
        if theta <= lam:
            return lam
        if theta <= gamma * lam:
            return (gamma * lam - theta) / (gamma - 1.0)
        return 0.0
    if theta <= gamma * lam:
        return lam - theta / gamma
    return 0.0


def d2value(spec: PenaltySpec, j: int, theta: float) -> float:
    """Second derivative at ``theta > 0`` (left branch at SCAD/MC+ knots)."""
    if theta <= 0:
        raise ValueError(f"penalty curvature needs theta > 0, got {theta}")
    lam, gamma = spec.lam_at(j), spec.gamma
    kind = spec.kind
    if kind == "ridge":
        return lam
    if kind in ("lasso", "adaptive_lasso"):
        return 0.0
    if kind in ("enet", "adaptive_enet"):
        return lam * (1.0 - gamma)
    if kind == "scad":
        if theta <= lam:
            return 0.0
        if theta <= gamma * lam:
            return -1.0 / (gamma - 1.0)
        return 0.0
    if theta <= gamma * lam:
        return -1.0 / gamma
    return 0.0


def dvalue_at_zero(spec: PenaltySpec, j: int) -> float:
    """Right limit of the first derivative at 0 (the null-exclusion slope)."""
    lam, gamma = spec.lam_at(j), spec.gamma
    kind = spec.kind
    if kind == "ridge":
        return 0.0
    if kind in ("enet", "adaptive_enet"):
        return lam * gamma
    return lam  # lasso, adaptive_lasso, scad, mcplus share slope lam at 0+


def penalty_total(spec: PenaltySpec, beta: NDArray[np.float64]) -> float:
    """Sum of penalty values over a coefficient vector (vectorized)."""
    theta = np.abs(np.asarray(beta, dtype=float))
    lam = spec.lam_vector(len(theta))
    gamma = spec.gamma
    kind = spec.kind
    if kind == "ridge":
        vals = 0.5 * lam * theta ** 2
    elif kind in ("lasso", "adaptive_lasso"):
        vals = lam * theta
    elif kind in ("enet", "adaptive_enet"):
        vals = lam * (gamma * theta + 0.5 * (1.0 - gamma) * theta ** 2)
    elif kind == "scad":
        inner = lam * theta
        middle = (gamma * lam * theta - 0.5 * (theta ** 2 + lam ** 2)) / (gamma - 1.0)
        outer = lam ** 2 * (gamma ** 2 - 1.0) / (2.0 * (gamma - 1.0))
        vals = np.where(theta <= lam, inner,
                        np.where(theta <= gamma * lam, middle, outer))
    else:  # mcplus
        inner = lam * theta - theta ** 2 / (2.0 * gamma)
        outer = 0.5 * gamma * lam ** 2
        vals = np.where(theta <= gamma * lam, inner, outer)
    return float(np.sum(vals))


def adaptive_lambdas(base_lambda: float,
                     ridge_fit: NDArray[np.float64]) -> tuple[NDArray[np.float64],
                                                              NDArray[np.bool_]]:
    """Per-coordinate tuning parameters ``base_lambda / |ridge_fit_j|``.

    Coordinates whose pilot coefficient is (numerically) zero would get an
    infinite penalty; they are capped at ``base_lambda / 1e-10`` and flagged,
    which effectively removes the covariate from the model.
    """
    beta = np.asarray(ridge_fit, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise ValueError("pilot coefficients must be finite")
    mag = np.abs(beta)
    capped = mag < ADAPTIVE_WEIGHT_FLOOR
    lam = base_lambda / np.maximum(mag, ADAPTIVE_WEIGHT_FLOOR)
    return lam, capped


# ---------------------------------------------------------------------------
# Slope/curvature rate summaries used by the asymptotic-regime diagnostics.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PenaltyRates:
    """Penalty-derivative summary for a given true coefficient vector.

    * ``signal_slope_max``: largest |p'| over the true nonzero magnitudes
      (scales the estimation bias the penalty can introduce).
    * ``noise_slope_inf``: smallest p' over noise coordinates within a
      shrinking neighborhood of zero (the force available to pin noise
      coefficients at exactly zero).
    * ``signal_curvature_max``: largest |p''| over the true nonzero
      magnitudes (curvature correction entering the covariance estimate).
    """

    signal_slope_max: float
    noise_slope_inf: float
    signal_curvature_max: float


def _split_signal(beta_true: NDArray[np.float64], n_coords: int) -> NDArray[np.float64]:
    beta = np.asarray(beta_true, dtype=float)
    if beta.ndim != 1 or len(beta) > n_coords:
        raise ValueError("true coefficient vector longer than n_coords")
    nz = np.flatnonzero(beta != 0.0)
    if nz.size == 0:
        raise ValueError("need at least one nonzero true coefficient")
    s = int(nz[-1]) + 1
    if nz.size != s:
        raise ValueError("true nonzero coefficients must come first, then exact zeros")
    return np.abs(beta[:s])


def near_zero_radius(n_coords: int, domain_area: float, margin_constant: float) -> float:
    """Radius of the near-zero neighborhood scanned for the noise slope."""
    if margin_constant <= 0:
        raise ValueError("margin_constant must be positive")
    return margin_constant * np.sqrt(n_coords / domain_area)


def rate_sequences(spec: PenaltySpec, beta_true, n_coords: int,
                   domain_area: float, margin_constant: float,
                   grid_size: int = 1000) -> PenaltyRates:
    """Rate summary with the noise slope taken over a dense evaluation grid.

    The infimum over the near-zero neighborhood ``(0, eps]`` is approximated
    on ``grid_size`` log-spaced magnitudes spanning twelve decades below
    ``eps``; the closed-form twin (:func:`rate_sequences_closed_form`) is the
    analytic cross-check.
    """
    signal = _split_signal(beta_true, n_coords)
    s = len(signal)
    eps = near_zero_radius(n_coords, domain_area, margin_constant)
    grid = np.geomspace(eps * 1e-12, eps, grid_size)

    a = max(abs(dvalue(spec, j, signal[j])) for j in range(s))
    c = max(abs(d2value(spec, j, signal[j])) for j in range(s))
    b = np.inf
    for j in range(s, n_coords):
        slopes = [dvalue(spec, j, t) for t in grid]
        b = min(b, min(slopes))
    return PenaltyRates(float(a), float(b), float(c))


def rate_sequences_closed_form(spec: PenaltySpec, beta_true, n_coords: int,
                               domain_area: float,
                               margin_constant: float) -> PenaltyRates:
    """Analytic rate summary (exact infima instead of a grid scan)."""
    signal = _split_signal(beta_true, n_coords)
    s = len(signal)
    eps = near_zero_radius(n_coords, domain_area, margin_constant)
    gamma = spec.gamma

    a = max(abs(dvalue(spec, j, signal[j])) for j in range(s))
    c = max(abs(d2value(spec, j, signal[j])) for j in range(s))

    def noise_inf(lam: float) -> float:
        kind = spec.kind
        if kind == "ridge":
            return 0.0
        if kind in ("lasso", "adaptive_lasso"):
            return lam
        if kind in ("enet", "adaptive_enet"):
            return lam * gamma
        if kind == "scad":
            if eps <= lam:
                return lam
            if eps <= gamma * lam:
                return (gamma * lam - eps) / (gamma - 1.0)
            return 0.0
        # mcplus: slope lam - theta/gamma decreases to 0 at theta = gamma*lam
        return max(lam - eps / gamma, 0.0)

    b = min(noise_inf(spec.lam_at(j)) for j in range(s, n_coords))
    return PenaltyRates(float(a), float(b), float(c))
