import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppreg import PenaltySpec, adaptive_lambdas, d2value, dvalue, value
from ppreg.penalties import (PENALTY_KINDS, dvalue_at_zero, penalty_total,
                             rate_sequences, rate_sequences_closed_form)

ALL_SPECS = [
    PenaltySpec("ridge", 0.8),
    PenaltySpec("lasso", 0.8),
    PenaltySpec("enet", 0.8, 0.5),
    PenaltySpec("adaptive_lasso", 0.8, lam_weights=np.array([1.0, 2.5, 0.3])),
    PenaltySpec("adaptive_enet", 0.8, 0.5, lam_weights=np.array([1.0, 2.5, 0.3])),
    PenaltySpec("scad", 0.8, 3.7),
    PenaltySpec("mcplus", 0.8, 3.0),
]


class TestValues:
    def test_lasso_direct(self):
        assert value(PenaltySpec("lasso", 0.5), 0, 2.0) == 1.0

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
    def test_zero_at_zero(self, spec):
        assert value(spec, 0, 0.0) == 0.0

    def test_scad_knot_value_from_both_branches(self):
        lam, gamma = 1.0, 3.7
        theta = gamma * lam
        middle = (gamma * lam * theta - 0.5 * (theta ** 2 + lam ** 2)) / (gamma - 1)
        outer = lam ** 2 * (gamma ** 2 - 1) / (2 * (gamma - 1))
        assert middle == pytest.approx(outer, abs=1e-12)
        assert value(PenaltySpec("scad", lam, gamma), 0, theta) == pytest.approx(2.35)

    def test_mcplus_outer_branch(self):
        spec = PenaltySpec("mcplus", 1.0, 3.0)
        assert value(spec, 0, 3.0) == pytest.approx(1.5)
        assert value(spec, 0, 17.2) == pytest.approx(1.5)

    def test_negative_theta_rejected(self):
        with pytest.raises(ValueError):
            value(PenaltySpec("lasso", 1.0), 0, -0.1)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
    def test_nondecreasing_on_grid(self, spec):
        grid = np.linspace(0.0, 6.0, 400)
        vals = [value(spec, 1, t) for t in grid]
        assert all(b >= a - 1e-14 for a, b in zip(vals, vals[1:]))

    @settings(max_examples=80, deadline=None)
    @given(lam=st.floats(1e-3, 10.0), gamma=st.floats(2.01, 8.0))
    def test_scad_continuous_at_knots(self, lam, gamma):
        spec = PenaltySpec("scad", lam, gamma)
        for knot in (lam, gamma * lam):
            left = value(spec, 0, knot * (1 - 1e-13))
            right = value(spec, 0, knot * (1 + 1e-13))
            assert abs(left - right) < 1e-12 * max(1.0, value(spec, 0, knot))

    @settings(max_examples=80, deadline=None)
    @given(lam=st.floats(1e-3, 10.0), gamma=st.floats(1.01, 8.0))
    def test_mcplus_continuous_at_knot(self, lam, gamma):
        spec = PenaltySpec("mcplus", lam, gamma)
        knot = gamma * lam
        left = value(spec, 0, knot * (1 - 1e-13))
        right = value(spec, 0, knot * (1 + 1e-13))
        assert abs(left - right) < 1e-12 * max(1.0, value(spec, 0, knot))


class TestDerivatives:
    def test_lasso_flat(self):
        spec = PenaltySpec("lasso", 0.7)
        assert dvalue(spec, 0, 0.4) == 0.7
        assert d2value(spec, 0, 0.4) == 0.0

    def test_ridge(self):
        spec = PenaltySpec("ridge", 0.7)
        assert dvalue(spec, 0, 2.0) == pytest.approx(1.4)
        assert d2value(spec, 0, 2.0) == pytest.approx(0.7)

    def test_scad_flat_tail(self):
        spec = PenaltySpec("scad", 1.0, 3.7)
        assert dvalue(spec, 0, 3.71) == 0.0
        assert d2value(spec, 0, 3.71) == 0.0

    def test_zero_theta_rejected(self):
        for fn in (dvalue, d2value):
            with pytest.raises(ValueError):
                fn(PenaltySpec("lasso", 1.0), 0, 0.0)

    @pytest.mark.parametrize("kind", ["lasso", "adaptive_lasso"])
    def test_l1_types_have_no_curvature(self, kind):
        spec = PenaltySpec(kind, 0.9,
                           lam_weights=np.ones(4) if kind.startswith("adaptive") else None)
        for theta in (0.01, 0.5, 3.0, 50.0):
            assert d2value(spec, 0, theta) == 0.0

    def test_derivative_matches_finite_differences(self):
        # 200 random (spec, theta) draws away from the branch knots
        rng = np.random.default_rng(123)
        kinds = ["ridge", "lasso", "enet", "scad", "mcplus"]
        checked = 0
        while checked < 200:
            kind = kinds[rng.integers(len(kinds))]
            lam = float(rng.uniform(0.05, 3.0))
            gamma = {"enet": float(rng.uniform(0.1, 0.9)),
                     "scad": float(rng.uniform(2.2, 6.0)),
                     "mcplus": float(rng.uniform(1.2, 6.0))}.get(kind)
            spec = PenaltySpec(kind, lam, gamma)
            theta = float(rng.uniform(0.01, 5.0))
            knots = {"scad": (lam, (gamma or 0) * lam),
                     "mcplus": ((gamma or 0) * lam,)}.get(kind, ())
            h = 1e-6 * max(theta, 1.0)
            if any(abs(theta - k) < 2 * h for k in knots) or theta - h <= 0:
                continue
            fd = (value(spec, 0, theta + h) - value(spec, 0, theta - h)) / (2 * h)
            an = dvalue(spec, 0, theta)
            assert abs(fd - an) <= 1e-6 * max(1.0, abs(an)), (kind, lam, gamma, theta)
            checked += 1

    def test_penalty_total_matches_scalar_sum(self):
        rng = np.random.default_rng(5)
        beta = rng.standard_normal(6) * 2
        for spec in ALL_SPECS:
            s = PenaltySpec(spec.kind, spec.lam, spec.gamma,
                            lam_weights=np.abs(rng.standard_normal(6)) + 0.1)
            direct = sum(value(s, j, abs(b)) for j, b in enumerate(beta))
            assert penalty_total(s, beta) == pytest.approx(direct, rel=1e-12)


class TestSpecValidation:
    def test_gamma_domains(self):
        with pytest.raises(ValueError):
            PenaltySpec("enet", 1.0, 1.5)
        with pytest.raises(ValueError):
            PenaltySpec("scad", 1.0, 2.0)
        with pytest.raises(ValueError):
            PenaltySpec("mcplus", 1.0, 1.0)
        with pytest.raises(ValueError):
            PenaltySpec("lasso", 1.0, 0.5)

    def test_gamma_defaults(self):
        assert PenaltySpec("enet", 1.0).gamma == 0.5
        assert PenaltySpec("scad", 1.0).gamma == 3.7
        assert PenaltySpec("mcplus", 1.0).gamma == 3.0

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            PenaltySpec("lasso", -0.1)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PenaltySpec("bridge", 1.0)


class TestAdaptiveLambdas:
    def test_direct_formula(self):
        lam, capped = adaptive_lambdas(1.0, np.array([2.0, 0.5]))
        assert lam.tolist() == [0.5, 2.0]
        assert not capped.any()

    def test_large_pilot_vanishing_penalty(self):
        lam, _ = adaptive_lambdas(1.0, np.array([1e8]))
        assert lam[0] == pytest.approx(1e-8)

    def test_zero_pilot_capped_and_flagged(self):
        lam, capped = adaptive_lambdas(2.0, np.array([0.0, 1.0]))
        assert lam[0] == pytest.approx(2e10)
        assert capped.tolist() == [True, False]


class TestRateSequences:
    AREA = 5e5
    K1 = 1.0

    def test_lasso_row(self):
        spec = PenaltySpec("lasso", 0.1)
        rates = rate_sequences_closed_form(spec, [2.0, 0.75], 50, self.AREA, self.K1)
        assert rates.signal_slope_max == pytest.approx(0.1)
        assert rates.noise_slope_inf == pytest.approx(0.1)
        assert rates.signal_curvature_max == 0.0

    def test_ridge_noise_slope_vanishes(self):
        spec = PenaltySpec("ridge", 0.4)
        rates = rate_sequences_closed_form(spec, [2.0], 20, self.AREA, self.K1)
        assert rates.noise_slope_inf == 0.0
        grid = rate_sequences(spec, [2.0], 20, self.AREA, self.K1)
        assert grid.noise_slope_inf == pytest.approx(0.0, abs=1e-9)

    def test_mcplus_row_inside_taper(self):
        lam, gamma, p, area = 0.05, 3.0, 50, 5e5
        eps = self.K1 * np.sqrt(p / area)
        assert lam > eps / gamma  # taper still active at the neighborhood edge
        spec = PenaltySpec("mcplus", lam, gamma)
        rates = rate_sequences_closed_form(spec, [2.0, 0.75], p, area, self.K1)
        expected = lam - self.K1 * np.sqrt(p) / (gamma * np.sqrt(area))
        assert rates.noise_slope_inf == pytest.approx(expected, rel=1e-12)

    def test_scad_flat_tail_kills_signal_terms(self):
        lam, gamma = 0.05, 3.7
        spec = PenaltySpec("scad", lam, gamma)
        beta = [2.0, 0.75]  # both exceed gamma*lam = 0.185
        rates = rate_sequences_closed_form(spec, beta, 50, self.AREA, self.K1)
        assert rates.signal_slope_max == 0.0
        assert rates.signal_curvature_max == 0.0
        assert rates.noise_slope_inf == pytest.approx(lam)  # eps < lam here

    def test_adaptive_rows_use_extreme_weights(self):
        p = 10
        weights = np.linspace(0.5, 5.0, p)
        spec = PenaltySpec("adaptive_lasso", 0.2, lam_weights=weights)
        beta = [3.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        rates = rate_sequences_closed_form(spec, beta, p, self.AREA, self.K1)
        lam_j = 0.2 * weights
        assert rates.signal_slope_max == pytest.approx(lam_j[:2].max())
        assert rates.noise_slope_inf == pytest.approx(lam_j[2:].min())
        assert rates.signal_curvature_max == 0.0

    def test_grid_matches_closed_form_over_random_draws(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            kind = PENALTY_KINDS[rng.integers(len(PENALTY_KINDS))]
            p = int(rng.integers(5, 40))
            s = int(rng.integers(1, 4))
            gamma = {"enet": 0.5, "adaptive_enet": 0.5, "scad": 3.7,
                     "mcplus": 3.0}.get(kind)
            weights = (np.abs(rng.standard_normal(p)) + 0.2
                       if kind.startswith("adaptive") else None)
            spec = PenaltySpec(kind, float(rng.uniform(0.01, 1.0)), gamma,
                               lam_weights=weights)
            beta = np.zeros(p)
            beta[:s] = rng.uniform(0.5, 3.0, s)
            area = float(rng.uniform(1e3, 1e6))
            k1 = float(rng.uniform(0.2, 3.0))
            got = rate_sequences(spec, beta, p, area, k1)
            want = rate_sequences_closed_form(spec, beta, p, area, k1)
            assert got.signal_slope_max == pytest.approx(want.signal_slope_max, abs=1e-9)
            assert got.noise_slope_inf == pytest.approx(want.noise_slope_inf, abs=1e-9)
            assert got.signal_curvature_max == pytest.approx(want.signal_curvature_max,
                                                             abs=1e-9)

    def test_nonleading_nonzeros_rejected(self):
        with pytest.raises(ValueError):
            rate_sequences(PenaltySpec("lasso", 0.1), [1.0, 0.0, 2.0], 5,
                           self.AREA, self.K1)


def test_dvalue_at_zero_slopes():
    assert dvalue_at_zero(PenaltySpec("ridge", 2.0), 0) == 0.0
    assert dvalue_at_zero(PenaltySpec("lasso", 2.0), 0) == 2.0
    assert dvalue_at_zero(PenaltySpec("enet", 2.0, 0.25), 0) == pytest.approx(0.5)
    assert dvalue_at_zero(PenaltySpec("scad", 2.0), 0) == 2.0
    assert dvalue_at_zero(PenaltySpec("mcplus", 2.0), 0) == 2.0
