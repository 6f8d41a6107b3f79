import numpy as np
import pytest

from ppreg import (CovariateStack, DataError, IntensityModel, RasterGrid,
                   ThomasParams, Window, calibrate_intercept,
                   simulate_poisson, simulate_thomas,
                   thomas_pair_correlation)
from ppreg.simulate import (replicate_seeds, rng_from_seed,
                            thomas_excess_closeness)

from conftest import make_noise_stack


def _homogeneous_model(window, target):
    g = RasterGrid(4, 4, window, np.zeros((4, 4)), "z0")
    stack = CovariateStack((g,), includes_intercept=True)
    beta = np.array([np.log(target / window.area()), 0.0])
    return IntensityModel(stack, beta)


def _pcf_estimate(patterns, r, bandwidth):
    """Kernel pair-correlation estimate with translation edge correction,
    averaged over patterns (Epanechnikov kernel)."""
    total = 0.0
    n_pat = 0
    for pat in patterns:
        pts = pat.points
        n = len(pts)
        if n < 2:
            continue
        win = pat.window
        a, b = win.width, win.height
        dx = pts[:, None, 0] - pts[None, :, 0]
        dy = pts[:, None, 1] - pts[None, :, 1]
        iu = np.triu_indices(n, k=1)
        dxx, dyy = np.abs(dx[iu]), np.abs(dy[iu])
        d = np.hypot(dxx, dyy)
        u = (d - r) / bandwidth
        kern = np.where(np.abs(u) < 1, 0.75 * (1 - u ** 2) / bandwidth, 0.0)
        overlap = (a - dxx) * (b - dyy)
        rho2 = n * (n - 1) / win.area() ** 2
        total += 2.0 * np.sum(kern / overlap) / (2 * np.pi * r * rho2)
        n_pat += 1
    return total / n_pat


class TestPoissonSimulator:
    def test_same_seed_identical(self):
        model = _homogeneous_model(Window(0, 100, 0, 50), 200.0)
        a = simulate_poisson(model, 7)
        b = simulate_poisson(model, 7)
        assert np.array_equal(a.points, b.points)

    def test_different_seed_differs(self):
        model = _homogeneous_model(Window(0, 100, 0, 50), 200.0)
        assert not np.array_equal(simulate_poisson(model, 1).points,
                                  simulate_poisson(model, 2).points)

    def test_zero_intensity_gives_empty_pattern(self):
        win = Window(0, 10, 0, 10)
        g = RasterGrid(2, 2, win, np.full((2, 2), -2000.0), "deep")
        model = IntensityModel(CovariateStack((g,)), np.array([1.0]))
        assert simulate_poisson(model, 0).n_points == 0

    def test_mean_count_and_dispersion(self):
        # homogeneous target 200; over 500 seeds the mean is within 3 SE and
        # the variance/mean ratio is Poisson-like
        model = _homogeneous_model(Window(0, 100, 0, 50), 200.0)
        counts = np.array([simulate_poisson(model, s).n_points for s in range(500)])
        se = np.sqrt(200.0 / 500)
        assert abs(counts.mean() - 200.0) < 3 * se
        ratio = counts.var(ddof=1) / counts.mean()
        assert abs(ratio - 1.0) < 3 * np.sqrt(2.0 / 500)

    def test_inhomogeneous_campbell_identity(self):
        # MC mean of sum k(u) over >= 500 replicates matches the intensity
        # integral within 4 MC standard errors
        win = Window(0, 60, 0, 30)
        stack = make_noise_stack(win, 12, 6, 2, seed=10)
        beta = calibrate_intercept(stack, [0.8, -0.5], 150.0)
        model = IntensityModel(stack, beta)
        rng = np.random.default_rng(0)
        k_grid = RasterGrid(12, 6, win, rng.random((6, 12)), "k")
        cell_area = win.area() / (12 * 6)
        expected = float(np.sum(k_grid.values *
                                model.intensity_grid()) * cell_area)
        sums = []
        for s in range(500):
            pat = simulate_poisson(model, 1000 + s)
            if pat.n_points:
                sums.append(float(np.sum(k_grid.lookup(pat.points[:, 0],
                                                       pat.points[:, 1]))))
            else:
                sums.append(0.0)
        sums = np.array(sums)
        mc_se = sums.std(ddof=1) / np.sqrt(len(sums))
        assert abs(sums.mean() - expected) < 4 * mc_se


class TestThomasSimulator:
    def test_same_seed_identical(self):
        model = _homogeneous_model(Window(0, 100, 0, 50), 150.0)
        params = ThomasParams(kappa=0.01, omega=5.0)
        a = simulate_thomas(model, params, 3)
        b = simulate_thomas(model, params, 3)
        assert np.array_equal(a.points, b.points)

    def test_invalid_params_rejected(self):
        with pytest.raises(DataError):
            ThomasParams(kappa=0.0, omega=5.0)
        with pytest.raises(DataError):
            ThomasParams(kappa=0.1, omega=-1.0)
        with pytest.raises(DataError):
            ThomasParams(kappa=0.1, omega=1.0, mu=0.0)

    def test_mean_count_calibrated(self):
        win = Window(0, 200, 0, 100)
        model = _homogeneous_model(win, 300.0)
        params = ThomasParams(kappa=0.01, omega=20.0)
        counts = np.array([simulate_thomas(model, params, s).n_points
                           for s in range(500)])
        se = counts.std(ddof=1) / np.sqrt(500)
        assert abs(counts.mean() - 300.0) < 3 * se

    def test_overdispersed_in_clustered_regime(self):
        win = Window(0, 200, 0, 100)
        model = _homogeneous_model(win, 300.0)
        params = ThomasParams(kappa=5e-4, omega=10.0)
        counts = np.array([simulate_thomas(model, params, s).n_points
                           for s in range(500)])
        assert counts.var(ddof=1) / counts.mean() > 1.0

    def test_poisson_limit_of_pair_correlation(self):
        # huge parent intensity at fixed target count -> g(10) ~ 1
        win = Window(0, 40, 0, 40)
        model = _homogeneous_model(win, 500.0)
        params = ThomasParams(kappa=10.0, omega=2.0)
        pats = [simulate_thomas(model, params, s) for s in range(200)]
        ghat = _pcf_estimate(pats, r=10.0, bandwidth=1.0)
        assert abs(ghat - 1.0) < 0.1

    def test_clustered_pair_correlation_matches_closed_form(self):
        # moderate clustering: the kernel estimate tracks the closed form
        win = Window(0, 100, 0, 100)
        model = _homogeneous_model(win, 400.0)
        params = ThomasParams(kappa=0.01, omega=3.0)
        pats = [simulate_thomas(model, params, s) for s in range(200)]
        r = 4.0
        ghat = _pcf_estimate(pats, r=r, bandwidth=1.0)
        gtrue = float(thomas_pair_correlation(params, r))
        assert ghat == pytest.approx(gtrue, rel=0.15)


class TestPairCorrelation:
    def test_limit_at_infinity(self):
        params = ThomasParams(5e-4, 20.0)
        assert thomas_pair_correlation(params, 1e9) == pytest.approx(1.0)

    def test_hand_value_at_zero(self):
        params = ThomasParams(5e-4, 20.0)
        expected = 1.0 + 1.0 / (4 * np.pi * 5e-4 * 400.0)
        assert expected == pytest.approx(1.3979, abs=1e-4)
        assert thomas_pair_correlation(params, 0.0) == pytest.approx(expected)

    def test_monotone_nonincreasing(self):
        params = ThomasParams(2e-3, 7.0)
        r = np.linspace(0, 100, 400)
        g = thomas_pair_correlation(params, r)
        assert np.all(np.diff(g) <= 1e-15)
        assert np.all(g >= 1.0)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            thomas_pair_correlation(ThomasParams(1.0, 1.0), -0.5)

    def test_excess_closeness_closed_form(self):
        params = ThomasParams(5e-4, 20.0)
        # R -> infinity limit is 1/kappa = 2000
        assert thomas_excess_closeness(params, 1e6) == pytest.approx(2000.0)
        R = 80.0
        expected = (1 - np.exp(-(R ** 2) / (4 * 400.0))) / 5e-4
        assert thomas_excess_closeness(params, R) == pytest.approx(expected)


class TestCalibration:
    def test_expected_count_hits_target(self, paper_window):
        stack = make_noise_stack(paper_window, 40, 20, 3, seed=4)
        beta = calibrate_intercept(stack, [2.0, 0.75, 0.0], 1600.0)
        model = IntensityModel(stack, beta)
        assert model.expected_count() == pytest.approx(1600.0, rel=1e-10)

    def test_needs_intercept(self, paper_window):
        stack = make_noise_stack(paper_window, 8, 4, 1, seed=0, intercept=False)
        with pytest.raises(DataError):
            calibrate_intercept(stack, [1.0], 100.0)


class TestSeeds:
    def test_replicate_streams_are_stable_and_distinct(self):
        seeds = replicate_seeds(123, 5)
        again = replicate_seeds(123, 5)
        for s, t in zip(seeds, again):
            a = rng_from_seed(s).random(4)
            b = rng_from_seed(t).random(4)
            assert np.array_equal(a, b)
        draws = [tuple(rng_from_seed(s).random(4)) for s in seeds]
        assert len(set(draws)) == 5

    def test_prefix_stability(self):
        # first k child streams do not depend on how many are spawned
        first = replicate_seeds(9, 3)
        longer = replicate_seeds(9, 10)[:3]
        for s, t in zip(first, longer):
            assert np.array_equal(rng_from_seed(s).random(3),
                                  rng_from_seed(t).random(3))
