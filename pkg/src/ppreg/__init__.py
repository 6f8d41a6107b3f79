"""Penalized intensity estimation for spatial point processes.

Fits log-linear intensity models to planar point patterns over gridded
covariates by penalized Poisson or logistic estimating equations on a
counting-weight quadrature scheme, with coordinate-descent solvers for
ridge/lasso/elastic-net/adaptive/SCAD/MC+ penalties, sandwich covariance
estimates for the selected coefficients, information-criterion tuning,
and a replicated simulation-study harness with cluster-process samplers.
"""

from .domain import (CovariateStack, PointPattern, RasterGrid, Window,
                     evaluate_covariates, resample_grid, standardize)
from .errors import DataError, NumericError, PPRegError
from .inference import (CovarianceEstimate, SandwichMatrices, compute_ABC,
                        compute_sigma)
from .penalties import (PenaltySpec, adaptive_lambdas, d2value, dvalue,
                        rate_sequences, rate_sequences_closed_form, value)
from .quadrature import (Likelihood, POISSON, QuadratureScheme, build_scheme,
                         logistic_objective, poisson_objective)
from .simulate import (IntensityModel, ThomasParams, calibrate_intercept,
                       simulate_poisson, simulate_thomas,
                       thomas_pair_correlation)
from .solver import (FitResult, SolverConfig, compute_wpl_weights,
                     fit_penalized, kkt_residual, lambda_path)
from .study import (MethodSpec, ScenarioSpec, StudyConfig, StudyReport,
                    build_scenario, prediction_metrics, run_study,
                    selection_metrics)
from .tuning import PathSelection, fit_adaptive, select_lambda, wqbic

__version__ = "0.1.0"

__all__ = [
    "Window", "PointPattern", "RasterGrid", "CovariateStack",
    "evaluate_covariates", "standardize", "resample_grid",
    "PPRegError", "DataError", "NumericError",
    "PenaltySpec", "value", "dvalue", "d2value", "adaptive_lambdas",
    "rate_sequences", "rate_sequences_closed_form",
    "QuadratureScheme", "Likelihood", "POISSON", "build_scheme",
    "poisson_objective", "logistic_objective",
    "ThomasParams", "IntensityModel", "simulate_poisson", "simulate_thomas",
    "thomas_pair_correlation", "calibrate_intercept",
    "SolverConfig", "FitResult", "fit_penalized", "kkt_residual",
    "lambda_path", "compute_wpl_weights",
    "SandwichMatrices", "CovarianceEstimate", "compute_ABC", "compute_sigma",
    "wqbic", "select_lambda", "fit_adaptive", "PathSelection",
    "ScenarioSpec", "MethodSpec", "StudyConfig", "StudyReport",
    "build_scenario", "selection_metrics", "prediction_metrics", "run_study",
    "__version__",
]
