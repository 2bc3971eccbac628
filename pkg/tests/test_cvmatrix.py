"""Tests for the cross-validation matrix engine.

The primary oracle is :func:`naive_training_products`, which materializes
each training partition and preprocesses rows explicitly. Small frozen
values below were worked by hand from a four-row example.
"""

import numpy as np
import pytest

from fastpls import Dataset, FoldSpec, PreprocessSpec, ZeroVarianceError, make_folds
from fastpls.cvmatrix import (
    naive_training_products,
    precompute,
    stream_training_products,
    training_products,
)
from fastpls.errors import DataError, NumericError
from fastpls.pls import fit_ikpls1, fit_ikpls2

HAND_X = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]])
HAND_Y = np.array([[1.0], [2.0], [3.0], [4.0]])
HAND_FOLDS = FoldSpec(assignment=[0, 0, 1, 1], n_folds=2)


def max_rel_diff(a, b):
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()), 1e-30)
    return float(np.abs(np.asarray(a) - np.asarray(b)).max()) / scale


def assert_products_close(got, expected, tol=1e-10):
    assert max_rel_diff(got.xtx, expected.xtx) < tol
    assert max_rel_diff(got.xty, expected.xty) < tol
    for name in ("stats_x", "stats_y"):
        g, e = getattr(got, name), getattr(expected, name)
        np.testing.assert_allclose(g.mean, e.mean, rtol=tol, atol=tol)
        np.testing.assert_allclose(g.std, e.std, rtol=tol, atol=tol)
        assert g.weight_total == pytest.approx(e.weight_total, rel=1e-12)
        assert g.nonzero_weight_count == e.nonzero_weight_count
    assert got.n_train_rows == expected.n_train_rows


class TestHandWorkedExample:
    def test_totals(self):
        g = precompute(Dataset(x=HAND_X, y=HAND_Y), HAND_FOLDS)
        np.testing.assert_allclose(g.xtx_total, [[84.0, 100.0], [100.0, 120.0]], atol=1e-12)
        np.testing.assert_allclose(g.xty_total, [[50.0], [60.0]], atol=1e-12)

    def test_fold0_validation_contribution(self):
        g = precompute(Dataset(x=HAND_X, y=HAND_Y), HAND_FOLDS)
        np.testing.assert_allclose(g.xtx_val[0], [[10.0, 14.0], [14.0, 20.0]], atol=1e-12)
        np.testing.assert_allclose(g.xty_val[0], [[7.0], [10.0]], atol=1e-12)

    def test_fold0_raw_training_products(self):
        g = precompute(Dataset(x=HAND_X, y=HAND_Y), HAND_FOLDS)
        tp = training_products(g, 0, PreprocessSpec())
        np.testing.assert_allclose(tp.xtx, [[74.0, 86.0], [86.0, 100.0]], atol=1e-12)
        np.testing.assert_allclose(tp.xty, [[43.0], [50.0]], atol=1e-12)
        assert tp.n_train_rows == 2

    def test_fold0_centered_training_products(self):
        # Training rows (5,6) and (7,8) have means (6,7); y mean is 3.5.
        g = precompute(Dataset(x=HAND_X, y=HAND_Y), HAND_FOLDS)
        tp = training_products(g, 0, PreprocessSpec(center_x=True, center_y=True))
        np.testing.assert_allclose(tp.xtx, [[2.0, 2.0], [2.0, 2.0]], atol=1e-12)
        np.testing.assert_allclose(tp.xty, [[1.0], [1.0]], atol=1e-12)
        np.testing.assert_allclose(tp.stats_x.mean, [6.0, 7.0], atol=1e-12)
        np.testing.assert_allclose(tp.stats_y.mean, [3.5], atol=1e-12)

    def test_fold0_fully_standardized(self):
        # Column sds are sqrt(2) (x) and sqrt(1/2) (y), so everything lands
        # on exact ones.
        g = precompute(Dataset(x=HAND_X, y=HAND_Y), HAND_FOLDS)
        spec = PreprocessSpec(center_x=True, center_y=True, scale_x=True, scale_y=True)
        tp = training_products(g, 0, spec)
        np.testing.assert_allclose(tp.xtx, [[1.0, 1.0], [1.0, 1.0]], atol=1e-12)
        np.testing.assert_allclose(tp.xty, [[1.0], [1.0]], atol=1e-12)

    def test_validation_contributions_sum_to_totals(self):
        g = precompute(Dataset(x=HAND_X, y=HAND_Y), HAND_FOLDS)
        acc = np.zeros_like(g.xtx_total)
        for fold in range(g.n_folds):
            acc = acc + g.xtx_val[fold]
        np.testing.assert_array_equal(acc, g.xtx_total)


class TestAgainstNaiveOracle:
    @pytest.mark.parametrize("weighted", [False, True])
    @pytest.mark.parametrize("n_folds", [2, 5, 30])
    def test_all_16_combinations(self, n_folds, weighted):
        rng = np.random.default_rng(100 + n_folds)
        n, k, m = 30, 6, 2
        data = Dataset(
            x=rng.standard_normal((n, k)) * 2.0 + 1.0,
            y=rng.standard_normal((n, m)),
            weights=rng.uniform(0.2, 3.0, size=n) if weighted else None,
        )
        folds = make_folds(n, n_folds, seed=0)
        g = precompute(data, folds)
        for spec in PreprocessSpec.all_combinations():
            for fold in range(n_folds):
                fast = training_products(g, fold, spec)
                naive = naive_training_products(data, folds, fold, spec)
                assert_products_close(fast, naive)

    def test_leave_one_out(self):
        rng = np.random.default_rng(200)
        n = 12
        data = Dataset(x=rng.standard_normal((n, 4)), y=rng.standard_normal((n, 1)))
        folds = FoldSpec(assignment=np.arange(n), n_folds=n)
        g = precompute(data, folds)
        spec = PreprocessSpec(center_x=True, center_y=True, scale_x=True, scale_y=True)
        for fold in range(n):
            fast = training_products(g, fold, spec)
            naive = naive_training_products(data, folds, fold, spec)
            assert_products_close(fast, naive)

    def test_streaming_matches_retained(self):
        rng = np.random.default_rng(300)
        n = 40
        data = Dataset(
            x=rng.standard_normal((n, 5)),
            y=rng.standard_normal((n, 2)),
            weights=rng.uniform(0.5, 2.0, size=n),
        )
        folds = make_folds(n, 8, seed=1)
        g = precompute(data, folds)
        spec = PreprocessSpec(center_x=True, scale_x=True, scale_y=True)
        streamed = list(stream_training_products(data, folds, spec))
        assert [s.fold for s in streamed] == list(range(8))
        for s in streamed:
            assert_products_close(s, training_products(g, s.fold, spec), tol=1e-12)

    def test_near_constant_column_cancellation_guard(self):
        # A column sitting at 1e8 with unit-scale wiggle: deriving its
        # variance from the sum-of-squares identity loses ~16 digits, so the
        # guard must re-sweep that column. The training statistics then match
        # the naive two-pass oracle even though the identity alone would give
        # a garbage (possibly negative) variance.
        rng = np.random.default_rng(400)
        n = 60
        x = rng.standard_normal((n, 3))
        x[:, 1] = 1e8 + rng.standard_normal(n)
        data = Dataset(x=x, y=rng.standard_normal((n, 1)))
        folds = make_folds(n, 4, seed=2)
        g = precompute(data, folds)
        spec = PreprocessSpec(center_x=True, scale_x=True)
        for fold in range(4):
            fast = training_products(g, fold, spec)
            naive = naive_training_products(data, folds, fold, spec)
            np.testing.assert_allclose(fast.stats_x.mean, naive.stats_x.mean, rtol=1e-10)
            np.testing.assert_allclose(fast.stats_x.std, naive.stats_x.std, rtol=1e-10)
            idx = folds.train_indices(fold)
            direct = float(np.std(x[idx, 1], ddof=1))
            assert fast.stats_x.std[1] == pytest.approx(direct, rel=1e-10)
            # The wiggle is unit-scale, so a garbage variance would be far
            # from 1; the re-sweep keeps it honest.
            assert 0.5 < fast.stats_x.std[1] < 2.0

    def test_raw_products_agree_even_with_huge_offset(self):
        # Without centering there is no cancellation: both routes are plain
        # weighted sums and agree tightly despite the 1e8 column.
        rng = np.random.default_rng(401)
        n = 40
        x = rng.standard_normal((n, 3))
        x[:, 0] = 1e8 + rng.standard_normal(n)
        data = Dataset(x=x, y=rng.standard_normal((n, 2)))
        folds = make_folds(n, 4, seed=2)
        g = precompute(data, folds)
        for fold in range(4):
            fast = training_products(g, fold, PreprocessSpec())
            naive = naive_training_products(data, folds, fold, PreprocessSpec())
            assert_products_close(fast, naive)


class TestStructuralInvariants:
    @staticmethod
    def random_case(seed=500, n=24, k=5, m=2, n_folds=4, weighted=True):
        rng = np.random.default_rng(seed)
        data = Dataset(
            x=rng.standard_normal((n, k)),
            y=rng.standard_normal((n, m)),
            weights=rng.uniform(0.1, 2.0, size=n) if weighted else None,
        )
        return data, make_folds(n, n_folds, seed=3)

    def test_totals_match_independent_full_product(self):
        data, folds = self.random_case()
        g = precompute(data, folds)
        w = data.effective_weights()
        xtx = (w[:, None] * data.x.data).T @ data.x.data
        xty = (w[:, None] * data.x.data).T @ data.y.data
        assert max_rel_diff(g.xtx_total, xtx) < 1e-9
        assert max_rel_diff(g.xty_total, xty) < 1e-9

    def test_training_gram_symmetric_and_psd(self):
        data, folds = self.random_case(seed=501)
        g = precompute(data, folds)
        for spec in [PreprocessSpec(), PreprocessSpec(center_x=True, scale_x=True)]:
            for fold in range(folds.n_folds):
                tp = training_products(g, fold, spec)
                np.testing.assert_array_equal(tp.xtx, tp.xtx.T)
                eigenvalues = np.linalg.eigvalsh(tp.xtx)
                assert eigenvalues.min() >= -1e-8 * max(eigenvalues.max(), 1.0)

    def test_centering_y_is_irrelevant_once_x_is_centered(self):
        data, folds = self.random_case(seed=502)
        g = precompute(data, folds)
        for scale_bits in range(4):
            sx, sy = bool(scale_bits & 1), bool(scale_bits & 2)
            a = training_products(
                g, 1, PreprocessSpec(center_x=True, center_y=False, scale_x=sx, scale_y=sy)
            )
            b = training_products(
                g, 1, PreprocessSpec(center_x=True, center_y=True, scale_x=sx, scale_y=sy)
            )
            np.testing.assert_array_equal(a.xtx, b.xtx)
            np.testing.assert_array_equal(a.xty, b.xty)

    def test_exactly_12_distinct_product_pairs(self):
        data, folds = self.random_case(seed=503)
        g = precompute(data, folds)
        seen = set()
        for spec in PreprocessSpec.all_combinations():
            tp = training_products(g, 0, spec)
            seen.add((tp.xtx.tobytes(), tp.xty.tobytes()))
        assert len(seen) == 12

    def test_zero_weight_fold_contributes_nothing(self):
        rng = np.random.default_rng(504)
        n = 20
        w = rng.uniform(0.5, 2.0, size=n)
        folds = make_folds(n, 4, seed=4)
        w[folds.val_indices(2)] = 0.0
        data = Dataset(
            x=rng.standard_normal((n, 3)), y=rng.standard_normal((n, 1)), weights=w
        )
        g = precompute(data, folds)
        np.testing.assert_array_equal(g.xtx_val[2], 0.0)
        np.testing.assert_array_equal(g.xty_val[2], 0.0)
        assert g.weight_val[2] == 0.0
        # Training products for that fold coincide with the grand totals.
        tp = training_products(g, 2, PreprocessSpec())
        assert max_rel_diff(tp.xtx, g.xtx_total) < 1e-12
        assert max_rel_diff(tp.xty, g.xty_total) < 1e-12
        assert tp.stats_x.weight_total == pytest.approx(float(w.sum()), rel=1e-12)

    def test_zero_weight_training_partition_rejected(self):
        n = 6
        folds = FoldSpec(assignment=[0, 0, 0, 1, 1, 1], n_folds=2)
        w = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
        data = Dataset(x=np.eye(6), y=np.ones((6, 1)), weights=w)
        g = precompute(data, folds)
        with pytest.raises(NumericError):
            training_products(g, 0, PreprocessSpec())  # training rows all weigh zero

    def test_row_count_mismatch_rejected(self):
        data = Dataset(x=np.ones((4, 2)), y=np.ones((4, 1)))
        with pytest.raises(DataError):
            precompute(data, FoldSpec(assignment=[0, 1, 0], n_folds=2))

    def test_fold_out_of_range(self):
        data, folds = self.random_case(seed=505)
        g = precompute(data, folds)
        with pytest.raises(DataError):
            training_products(g, folds.n_folds, PreprocessSpec())

    def test_zero_variance_training_column_under_scaling(self):
        rng = np.random.default_rng(506)
        x = rng.standard_normal((12, 3))
        x[:, 2] = 4.25
        data = Dataset(x=x, y=rng.standard_normal((12, 1)))
        folds = make_folds(12, 3, seed=5)
        g = precompute(data, folds)
        with pytest.raises(ZeroVarianceError) as exc:
            training_products(g, 0, PreprocessSpec(scale_x=True))
        assert exc.value.details["col"] == 3
        tp = training_products(g, 0, PreprocessSpec(scale_x=True), on_zero_std="unit")
        assert np.isfinite(tp.xtx).all()


class TestLeakageGuard:
    def test_mutating_validation_rows_leaves_training_products_bit_identical(self):
        rng = np.random.default_rng(600)
        n, k, m = 25, 4, 2
        x = rng.standard_normal((n, k))
        y = rng.standard_normal((n, m))
        w = rng.uniform(0.5, 2.0, size=n)
        folds = make_folds(n, 5, seed=6)
        target_fold = 3
        victims = folds.val_indices(target_fold)

        x2 = x.copy()
        y2 = y.copy()
        x2[victims] += rng.standard_normal((victims.size, k)) * 50.0
        y2[victims] -= 17.5

        g1 = precompute(Dataset(x=x, y=y, weights=w), folds)
        g2 = precompute(Dataset(x=x2, y=y2, weights=w), folds)
        for spec in PreprocessSpec.all_combinations():
            a = training_products(g1, target_fold, spec)
            b = training_products(g2, target_fold, spec)
            assert a.xtx.tobytes() == b.xtx.tobytes()
            assert a.xty.tobytes() == b.xty.tobytes()
            assert a.stats_x.mean.tobytes() == b.stats_x.mean.tobytes()
            assert a.stats_x.std.tobytes() == b.stats_x.std.tobytes()
            assert a.stats_y.mean.tobytes() == b.stats_y.mean.tobytes()
        # Sanity: other folds trained on the mutated rows must change.
        spec = PreprocessSpec(center_x=True)
        other = 0
        assert (
            training_products(g1, other, spec).xtx.tobytes()
            != training_products(g2, other, spec).xtx.tobytes()
        )


class TestFitIntegration:
    def test_products_fit_matches_materialized_fit(self):
        rng = np.random.default_rng(700)
        n, k, m = 40, 6, 2
        data = Dataset(
            x=rng.standard_normal((n, k)) + 0.5,
            y=rng.standard_normal((n, m)),
            weights=rng.uniform(0.3, 2.0, size=n),
        )
        folds = make_folds(n, 4, seed=7)
        g = precompute(data, folds)
        spec = PreprocessSpec(center_x=True, center_y=True, scale_x=True)
        a = 3
        for fold in range(4):
            tp = training_products(g, fold, spec)
            from_products = fit_ikpls2(
                tp.xtx, tp.xty, tp.stats_x, tp.stats_y, spec, a
            )
            idx = folds.train_indices(fold)
            materialized = Dataset(
                x=data.x.data[idx], y=data.y.data[idx], weights=data.weights[idx]
            )
            from_rows = fit_ikpls1(materialized, spec, a)
            assert max_rel_diff(from_products.coef_stack, from_rows.coef_stack) < 1e-8
