"""Tuning-parameter selection along the regularization path.

The selection criterion is

    WQBIC(lambda) = -2 * loglik(w; beta_hat(lambda)) + s(lambda) * log|D|

with ``s`` the number of selected (non-intercept) covariates and the
log-likelihood the weighted objective of the estimating equation in use,
evaluated on the quadrature scheme.  Ties are broken toward the larger
lambda (the sparser model).

Adaptive penalties are fitted in two stages: a ridge pilot path selected
by the same criterion provides per-coordinate penalty weights
``1 / |pilot_j|``, then the adaptive path over the base multiplier is
selected by the criterion again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .penalties import PenaltySpec, adaptive_lambdas
from .quadrature import Likelihood, POISSON, QuadratureScheme
from .solver import FitResult, SolverConfig, fit_penalized, lambda_path

__all__ = ["wqbic", "PathRecord", "PathSelection", "select_lambda", "fit_adaptive"]


def wqbic(loglik: float, s_lambda: int, domain_area: float) -> float:
    """Model-size-penalized criterion; smaller is better."""
    if domain_area <= 1.0:
        raise ValueError("domain area must exceed 1 for the log penalty term")
    if s_lambda < 0:
        raise ValueError("selected-covariate count cannot be negative")
    return -2.0 * loglik + s_lambda * np.log(domain_area)


@dataclass(frozen=True)
class PathRecord:
    lam: float
    loglik: float
    n_selected: int
    wqbic: float
    converged: bool


@dataclass(frozen=True)
class PathSelection:
    records: tuple[PathRecord, ...]
    chosen_index: int

    @property
    def chosen(self) -> PathRecord:
        return self.records[self.chosen_index]


def _normalize_path(path) -> list[tuple[float, FitResult]]:
    out = []
    for entry in path:
        if isinstance(entry, FitResult):
            out.append((entry.lam, entry))
        else:
            lam, fit = entry
            out.append((float(lam), fit))
    return out


def select_lambda(path, scheme: QuadratureScheme, w=1.0,
                  likelihood: Likelihood = POISSON) -> PathSelection:
    """Criterion values for every path entry plus the argmin.

    The log-likelihood is re-evaluated on the scheme at each fitted
    coefficient vector, so selection depends only on (path, scheme, w,
    likelihood).  Non-converged fits are recorded but never chosen; if no
    entry converged a ``NumericError`` is raised.
    """
    entries = _normalize_path(path)
    if not entries:
        raise ValueError("empty path")
    area = scheme.domain_area()
    records = []
    for lam, fit in entries:
        loglik = likelihood.objective(scheme, fit.beta_hat, w)
        s = len(fit.support)
        records.append(PathRecord(lam=lam, loglik=float(loglik), n_selected=s,
                                  wqbic=float(wqbic(loglik, s, area)),
                                  converged=fit.converged))
    candidates = [i for i, rec in enumerate(records) if rec.converged]
    if not candidates:
        raise NumericError("no converged fit on the path; cannot select lambda")
    best = min(candidates, key=lambda i: (records[i].wqbic, -records[i].lam))
    return PathSelection(records=tuple(records), chosen_index=best)


def fit_adaptive(scheme: QuadratureScheme, w, likelihood: Likelihood,
                 base_kind: str, config: SolverConfig | None = None,
                 gamma: float | None = None) -> FitResult:
    """Two-stage adaptive fit (``adaptive_lasso`` or ``adaptive_enet``).

    Stage 1 fits a ridge path and selects the pilot by the criterion;
    stage 2 turns the pilot magnitudes into per-coordinate penalty weights
    and selects over the base multiplier.  Stage-1 failures are re-raised
    with a stage tag.
    """
    if base_kind not in ("adaptive_lasso", "adaptive_enet"):
        raise ValueError(f"not an adaptive penalty kind: '{base_kind}'")
    config = config or SolverConfig()
    try:
        pilot_path = lambda_path(scheme, w, likelihood, PenaltySpec("ridge", 1.0),
                                 config)
        pilot_sel = select_lambda(pilot_path, scheme, w, likelihood)
        pilot = pilot_path[pilot_sel.chosen_index][1]
    except Exception as exc:
        raise NumericError(f"adaptive stage 1 (ridge pilot) failed: {exc}") from exc

    pencols = scheme.penalized_columns
    pilot_coefs = pilot.beta_hat[pencols]
    lam_weights, capped = adaptive_lambdas(1.0, pilot_coefs)
    spec = PenaltySpec(base_kind, 1.0, gamma, lam_weights=lam_weights,
                       weight_capped=capped)
    path = lambda_path(scheme, w, likelihood, spec, config)
    sel = select_lambda(path, scheme, w, likelihood)
    chosen = path[sel.chosen_index][1]
    chosen.diagnostics.update(
        pilot_lambda=pilot.lam,
        pilot_index=pilot_sel.chosen_index,
        n_capped_weights=int(np.sum(capped)),
    )
    return chosen
