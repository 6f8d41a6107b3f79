"""Asymptotic covariance of the selected coefficients.

Builds the three sandwich ingredients by quadrature over the covariate
raster,

    A = integral  w   z z' rho du
    B = integral  w^2 z z' rho du
    C = double integral  w(u) w(v) z(u) z(v)' (g(|u - v|) - 1)
        rho(u) rho(v) du dv,

and combines their support blocks into

    Sigma = |D| (A11 + |D| Pi)^(-1) (B11 + C11) (A11 + |D| Pi)^(-1)

with Pi the diagonal of penalty second derivatives at the fitted nonzero
magnitudes (identically zero for lasso-type penalties).  ``Sigma / |D|``
estimates the covariance of the selected coefficient estimates.

For the logistic estimating equation the weight is replaced by
``w * delta / (rho + delta)`` throughout.

The double integral uses an FFT correlation over the raster when g is
isotropic (exact for the discretized sum, O(n log n)); a brute-force
double sum over cell pairs is available for general g on coarse grids and
as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.signal import fftconvolve

from .domain import CovariateStack
from .errors import DataError
from .penalties import PenaltySpec, d2value

__all__ = [
    "SandwichMatrices",
    "CovarianceEstimate",
    "compute_ABC",
    "compute_sigma",
]

DENSE_CELL_LIMIT = 4096
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class SandwichMatrices:
    """Score-normalization (A), score-variance (B) and clustering-excess
    (C) matrices, all p x p symmetric."""

    A: NDArray[np.float64]
    B: NDArray[np.float64]
    C: NDArray[np.float64]

    def __post_init__(self) -> None:
        for name in ("A", "B", "C"):
            m = getattr(self, name)
            if not np.all(np.isfinite(m)):
                raise DataError(f"matrix {name} has non-finite entries")

    def blocks(self, support) -> tuple[NDArray, NDArray, NDArray]:
        idx = np.asarray(support, dtype=np.int64)
        return (self.A[np.ix_(idx, idx)], self.B[np.ix_(idx, idx)],
                self.C[np.ix_(idx, idx)])


@dataclass(frozen=True)
class CovarianceEstimate:
    """Sigma restricted to the selected coefficients.

    ``standard_errors`` converts to per-coefficient standard errors via
    ``sqrt(diag(Sigma) / |D|)``.
    """

    sigma: NDArray[np.float64]
    pi: NDArray[np.float64]
    support: NDArray[np.int64]

    def __post_init__(self) -> None:
        s = self.sigma
        if not np.allclose(s, s.T, atol=1e-10 * (1.0 + np.abs(s).max())):
            raise DataError("covariance estimate is not symmetric")
        if np.any(np.diag(s) < -1e-12):
            raise DataError("covariance estimate has negative variances")

    def standard_errors(self, domain_area: float) -> NDArray[np.float64]:
        return np.sqrt(np.maximum(np.diag(self.sigma), 0.0) / domain_area)


def _effective_weight(w, x, y, rho, likelihood, delta):
    if callable(w):
        w_val = np.asarray(w(x, y), dtype=float)
    elif w is None:
        w_val = np.ones_like(rho)
    else:
        w_val = np.broadcast_to(np.asarray(w, dtype=float), rho.shape).copy()
    if likelihood == "logistic":
        if delta is None:
            raise ValueError("logistic sandwich weights need delta")
        d = delta(x, y) if callable(delta) else delta
        w_val = w_val * d / (rho + d)
    elif likelihood != "poisson":
        raise ValueError(f"unknown likelihood '{likelihood}'")
    return w_val


def _radial_C(F_cols, g_r, n_rows, n_cols, dx, dy, cell_area):
    """C via FFT correlation with the isotropic excess kernel."""
    di = np.arange(-(n_rows - 1), n_rows)
    dj = np.arange(-(n_cols - 1), n_cols)
    dist = np.hypot(np.abs(di)[:, None] * dy, np.abs(dj)[None, :] * dx)
    kernel = (np.asarray(g_r(dist), dtype=float) - 1.0) * cell_area
    p = F_cols.shape[1]
    M = np.empty_like(F_cols)
    for j in range(p):
        grid = F_cols[:, j].reshape(n_rows, n_cols)
        conv = fftconvolve(grid, kernel, mode="same")
        M[:, j] = conv.ravel()
    C = cell_area * (F_cols.T @ M)
    return 0.5 * (C + C.T)


def _dense_C(F_cols, centers_x, centers_y, g_pair, cell_area):
    n = len(centers_x)
    if n > DENSE_CELL_LIMIT:
        raise DataError(
            f"dense pair-correlation quadrature limited to {DENSE_CELL_LIMIT} "
            f"cells, got {n}; supply an isotropic g or coarsen the grid"
        )
    u = np.column_stack([centers_x, centers_y])
    H = np.asarray(g_pair(u[:, None, :], u[None, :, :]), dtype=float) - 1.0
    C = cell_area ** 2 * (F_cols.T @ H @ F_cols)
    return 0.5 * (C + C.T)


def compute_ABC(stack: CovariateStack, beta, w=None, g_r=None, g_pair=None,
                likelihood: str = "poisson", delta=None) -> SandwichMatrices:
    """Sandwich matrices by cell-center quadrature over the covariate grid.

    ``w`` may be None (unit weight), a scalar, or a callable ``w(x, y)``.
    ``g_r`` is an isotropic pair-correlation callable ``g(r)``; ``g_pair``
    a general ``g(u, v)`` handled by the dense double sum (coarse grids
    only).  Omitting both treats the process as Poisson (C = 0).
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (stack.n_outputs,):
        raise ValueError(
            f"beta length {beta.shape} does not match stack outputs "
            f"{stack.n_outputs}"
        )
    if g_r is not None and g_pair is not None:
        raise ValueError("give either an isotropic g_r or a general g_pair")

    Z = stack.cell_design_matrix()
    grid0 = stack.grids[0]
    xs, ys = grid0.cell_centers()
    gx, gy = np.meshgrid(xs, ys)
    x, y = gx.ravel(), gy.ravel()
    cell_area = grid0.cell_area
    rho = np.exp(Z @ beta)
    w_eff = _effective_weight(w, x, y, rho, likelihood, delta)

    base = cell_area * w_eff * rho
    A = Z.T @ (Z * base[:, None])
    B = Z.T @ (Z * (base * w_eff)[:, None])
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)

    if g_r is None and g_pair is None:
        C = np.zeros_like(A)
    else:
        F = Z * (w_eff * rho)[:, None]
        if g_r is not None:
            C = _radial_C(F, g_r, grid0.n_rows, grid0.n_cols,
                          grid0.cell_dx, grid0.cell_dy, cell_area)
        else:
            C = _dense_C(F, x, y, g_pair, cell_area)
    return SandwichMatrices(A=A, B=B, C=C)


def compute_sigma(mats: SandwichMatrices, support, spec: PenaltySpec | None,
                  beta_hat, domain_area: float,
                  intercept_col: int | None = 0) -> CovarianceEstimate:
    """Sigma on the selected support.

    ``support`` holds design-column indices (include the intercept column
    if the model has one).  ``spec=None`` or a lasso-type penalty yields
    Pi = 0; otherwise Pi is the penalty curvature at |beta_hat_j|.  Raises
    ``DataError`` when the curvature-adjusted normalization block is
    ill-conditioned, naming the covariates in the offending direction.
    """
    support = np.asarray(sorted(int(j) for j in support), dtype=np.int64)
    if support.size == 0:
        raise ValueError("empty support; nothing to estimate")
    beta_hat = np.asarray(beta_hat, dtype=float)
    A11, B11, C11 = mats.blocks(support)

    pi = np.zeros(len(support))
    if spec is not None and spec.lam > 0 and spec.kind not in ("lasso", "adaptive_lasso"):
        for k, col in enumerate(support):
            if intercept_col is not None and col == intercept_col:
                continue
            pen_index = col - 1 if (intercept_col is not None and col > intercept_col) else col
            mag = abs(beta_hat[col])
            if mag > 0:
                pi[k] = d2value(spec, pen_index, mag)

    M = A11 + domain_area * np.diag(pi)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        eigvals, eigvecs = np.linalg.eigh(0.5 * (M + M.T))
        worst = eigvecs[:, 0]
        guilty = [int(support[i]) for i in np.flatnonzero(np.abs(worst) > 0.3)]
        raise DataError(
            f"normalization block is rank deficient (condition {cond:.3g}); "
            f"near-collinear columns: {guilty}"
        )
    Minv = np.linalg.inv(M)
    sigma = domain_area * Minv @ (B11 + C11) @ Minv
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceEstimate(sigma=sigma, pi=pi, support=support)
