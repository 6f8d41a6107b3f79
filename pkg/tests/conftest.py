import numpy as np
import pytest

from ppreg import (CovariateStack, IntensityModel, RasterGrid, Window,
                   build_scheme, calibrate_intercept, simulate_poisson,
                   standardize)


@pytest.fixture
def unit_window():
    return Window(0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def paper_window():
    return Window(0.0, 1000.0, 0.0, 500.0)


def make_noise_stack(window, n_cols, n_rows, p, seed, intercept=True):
    """Standardized white-noise covariate stack (deterministic)."""
    rng = np.random.default_rng(seed)
    grids = tuple(
        RasterGrid(n_cols, n_rows, window,
                   rng.standard_normal((n_rows, n_cols)), name=f"z{j + 1}")
        for j in range(p)
    )
    stack, _ = standardize(CovariateStack(grids))
    return stack.with_intercept(intercept)


def make_fitting_instance(seed, p=3, n_cols=16, n_rows=8, target=250.0,
                          beta_scale=0.7, window=None, n_dummy=(16, 8)):
    """Simulated pattern + scheme on a small window; used all over the tests."""
    window = window or Window(0.0, 80.0, 0.0, 40.0)
    stack = make_noise_stack(window, n_cols, n_rows, p, seed)
    rng = np.random.default_rng(seed + 1)
    beta_cov = beta_scale * rng.standard_normal(p)
    beta = calibrate_intercept(stack, beta_cov, target)
    model = IntensityModel(stack, beta)
    pattern = simulate_poisson(model, seed + 2)
    scheme = build_scheme(pattern, stack, *n_dummy)
    return stack, model, pattern, scheme
