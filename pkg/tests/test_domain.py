import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppreg import (CovariateStack, DataError, PointPattern, RasterGrid,
                   Window, evaluate_covariates, resample_grid, standardize)


class TestWindow:
    def test_paper_domain_area(self):
        assert Window(0, 1000, 0, 500).area() == 5e5

    def test_degenerate_rejected(self):
        with pytest.raises(DataError):
            Window(0, 0, 0, 1)
        with pytest.raises(DataError):
            Window(0, 1, 2, 1)

    def test_contains_boundary_inclusive(self):
        win = Window(0, 10, 0, 5)
        assert win.contains(0.0, 0.0) and win.contains(10.0, 5.0)
        assert not win.contains(10.0001, 2.0)


class TestPointPattern:
    def test_outside_point_rejected(self):
        with pytest.raises(DataError):
            PointPattern(np.array([[11.0, 1.0]]), Window(0, 10, 0, 10))

    def test_empty_ok(self):
        pat = PointPattern(np.empty((0, 2)), Window(0, 1, 0, 1))
        assert pat.n_points == 0 and not pat.has_duplicates

    def test_duplicates_flagged_but_allowed(self):
        pts = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
        pat = PointPattern(pts, Window(0, 10, 0, 10))
        assert pat.n_points == 3 and pat.has_duplicates


class TestRasterGrid:
    def test_nan_rejected(self):
        vals = np.array([[1.0, np.nan]])
        with pytest.raises(DataError):
            RasterGrid(2, 1, Window(0, 1, 0, 1), vals, "bad")

    def test_cell_area(self):
        g = RasterGrid(201, 101, Window(0, 1000, 0, 500), np.zeros((101, 201)))
        assert g.cell_area == pytest.approx(5e5 / (201 * 101))

    def test_half_open_cells_top_right_closed(self):
        vals = np.array([[1.0, 2.0], [3.0, 4.0]])  # row 0 = south
        g = RasterGrid(2, 2, Window(0, 2, 0, 2), vals)
        # interior boundary belongs to the upper cell
        assert g.lookup(1.0, 0.5) == 2.0
        assert g.lookup(0.5, 1.0) == 3.0
        # closed top/right edge folds into the last cell
        assert g.lookup(2.0, 2.0) == 4.0
        assert g.lookup(0.0, 0.0) == 1.0


class TestEvaluateCovariates:
    def test_constant_grid_with_intercept(self):
        g = RasterGrid(4, 4, Window(0, 1, 0, 1), np.full((4, 4), 3.0), "c")
        stack = CovariateStack((g,), includes_intercept=True)
        out = evaluate_covariates(stack, 0.37, 0.91)
        assert out.tolist() == [[1.0, 3.0]]

    def test_two_cell_grid_left_half(self):
        g = RasterGrid(2, 1, Window(0, 1, 0, 1), np.array([[7.0, -2.0]]), "ab")
        stack = CovariateStack((g,), includes_intercept=True)
        assert evaluate_covariates(stack, 0.2, 0.5).tolist() == [[1.0, 7.0]]
        assert evaluate_covariates(stack, 0.9, 0.5).tolist() == [[1.0, -2.0]]

    def test_outside_location_rejected(self):
        g = RasterGrid(2, 2, Window(0, 1, 0, 1), np.zeros((2, 2)))
        with pytest.raises(DataError):
            CovariateStack((g,)).evaluate(1.5, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.0, 0.2499), st.floats(0.0, 0.2499),
           st.floats(0.0, 0.2499), st.floats(0.0, 0.2499))
    def test_constant_within_cell(self, ax, ay, bx, by):
        rng = np.random.default_rng(5)
        g = RasterGrid(4, 4, Window(0, 1, 0, 1), rng.standard_normal((4, 4)))
        stack = CovariateStack((g,))
        # both locations inside the cell [0.25, 0.5) x [0.5, 0.75)
        u = stack.evaluate(0.25 + ax, 0.5 + ay)
        v = stack.evaluate(0.25 + bx, 0.5 + by)
        assert u.tolist() == v.tolist()


class TestStandardize:
    def test_hand_computed_three_values(self):
        g = RasterGrid(3, 1, Window(0, 3, 0, 1), np.array([[1.0, 2.0, 3.0]]), "t")
        out, transform = standardize(CovariateStack((g,)))
        expected = pytest.approx([-1.224744871391589, 0.0, 1.224744871391589])
        assert out.grids[0].values[0].tolist() == expected
        assert transform.means[0] == 2.0
        assert transform.sds[0] == pytest.approx(np.sqrt(2.0 / 3.0))

    def test_mean_and_variance_by_direct_summation(self):
        rng = np.random.default_rng(11)
        g = RasterGrid(20, 10, Window(0, 10, 0, 5), 4 + 3 * rng.random((10, 20)), "r")
        out, _ = standardize(CovariateStack((g,)))
        vals = out.grids[0].values
        total = 0.0
        for row in vals:
            for x in row:
                total += x
        mean = total / vals.size
        assert abs(mean) < 1e-10
        sq = 0.0
        for row in vals:
            for x in row:
                sq += (x - mean) ** 2
        assert abs(sq / vals.size - 1.0) < 1e-10
        assert out.standardized

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        g = RasterGrid(8, 8, Window(0, 1, 0, 1), rng.standard_normal((8, 8)), "x")
        once, _ = standardize(CovariateStack((g,)))
        twice, _ = standardize(once)
        assert np.max(np.abs(twice.grids[0].values - once.grids[0].values)) < 1e-12

    def test_constant_covariate_errors_with_name(self):
        g = RasterGrid(2, 2, Window(0, 1, 0, 1), np.ones((2, 2)), "flatline")
        with pytest.raises(DataError, match="flatline"):
            standardize(CovariateStack((g,)))

    def test_coefficient_back_transform(self):
        rng = np.random.default_rng(7)
        g = RasterGrid(6, 6, Window(0, 1, 0, 1), 2 + rng.random((6, 6)), "x")
        out, tr = standardize(CovariateStack((g,)))
        beta, intercept = tr.coefficients_to_original([0.5], intercept_std=1.0)
        # linear predictor must agree on both scales
        z_orig = g.values[2, 3]
        z_std = out.grids[0].values[2, 3]
        assert 1.0 + 0.5 * z_std == pytest.approx(intercept + beta[0] * z_orig)


class TestResample:
    def test_upsample_replicates_blocks(self):
        vals = np.array([[1.0, 2.0], [3.0, 4.0]])
        g = RasterGrid(2, 2, Window(0, 1, 0, 1), vals)
        up = resample_grid(g, 4, 4)
        expected = np.repeat(np.repeat(vals, 2, axis=0), 2, axis=1)
        assert np.array_equal(up.values, expected)

    def test_identity_dimensions_bit_identical(self):
        rng = np.random.default_rng(1)
        g = RasterGrid(5, 3, Window(0, 1, 0, 1), rng.random((3, 5)))
        assert resample_grid(g, 5, 3) is g

    def test_range_preserved_on_paper_sizes(self):
        rng = np.random.default_rng(2)
        g = RasterGrid(50, 25, Window(0, 1000, 0, 500), rng.standard_normal((25, 50)))
        out = resample_grid(g, 201, 101)
        lo, hi = g.values.min(), g.values.max()
        scanned_lo = min(min(row) for row in out.values)
        scanned_hi = max(max(row) for row in out.values)
        assert lo <= scanned_lo and scanned_hi <= hi


class TestStack:
    def test_mismatched_grids_rejected(self):
        a = RasterGrid(2, 2, Window(0, 1, 0, 1), np.zeros((2, 2)), "a")
        b = RasterGrid(3, 2, Window(0, 1, 0, 1), np.zeros((2, 3)), "b")
        with pytest.raises(DataError):
            CovariateStack((a, b))

    def test_subset_keeps_flags(self):
        rng = np.random.default_rng(0)
        grids = tuple(RasterGrid(2, 2, Window(0, 1, 0, 1),
                                 rng.random((2, 2)), f"g{i}") for i in range(3))
        stack = CovariateStack(grids, includes_intercept=True)
        sub = stack.subset([2, 0])
        assert sub.names == ["g2", "g0"] and sub.includes_intercept
