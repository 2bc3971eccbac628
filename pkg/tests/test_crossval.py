"""Tests for cross-validation orchestration.

The oracle here is a from-scratch loop: materialize each training
partition, fit with the row-route solver, predict held-out rows one
component count at a time, and score. It shares no code with the
product-space engine used by ``cross_validate``.
"""

import numpy as np
import pytest

from fastpls import (
    Dataset,
    FoldSpec,
    PreprocessSpec,
    accuracy,
    balanced_accuracy,
    class_weights,
    cross_validate,
    make_folds,
    rmse,
    weighted_accuracy,
)
from fastpls.errors import DataError
from fastpls.pls import fit_ikpls1, predict, predict_class


def naive_cv_table(data, folds, spec, a_max, metric):
    """Independent re-implementation of the per-fold metric table."""
    table = np.empty((folds.n_folds, a_max))
    weights_all = data.effective_weights()
    for fold in range(folds.n_folds):
        tr = folds.train_indices(fold)
        va = folds.val_indices(fold)
        train = Dataset(
            x=data.x.data[tr],
            y=data.y.data[tr],
            weights=None if data.weights is None else data.weights[tr],
        )
        model = fit_ikpls1(train, spec, a_max)
        x_val = data.x.data[va]
        y_val = data.y.data[va]
        for a in range(1, a_max + 1):
            if metric == "rmse":
                pred = predict(model, x_val, a).data
                table[fold, a - 1] = rmse(pred.ravel(), y_val.ravel())
            else:
                if y_val.shape[1] == 1:
                    levels = tuple(np.unique(data.y.data[:, 0]))
                    labels = predict_class(model, x_val, a, classes=levels)
                    true = y_val[:, 0]
                else:
                    labels = predict_class(model, x_val, a)
                    true = 1 + y_val.argmax(axis=1)
                if metric == "accuracy":
                    table[fold, a - 1] = accuracy(labels, true)
                elif metric == "balanced_accuracy":
                    table[fold, a - 1] = balanced_accuracy(labels, true)
                else:
                    table[fold, a - 1] = weighted_accuracy(labels, true, weights_all[va])
    return table


def make_regression(seed=0, n=60, k=8, m=2, weighted=False, noise=0.1):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, k))
    coef = rng.standard_normal((k, m))
    y = x @ coef + noise * rng.standard_normal((n, m))
    w = rng.uniform(0.3, 2.0, size=n) if weighted else None
    return Dataset(x=x, y=y, weights=w)


class TestAgainstNaiveLoop:
    @pytest.mark.parametrize("weighted", [False, True])
    def test_rmse_table_matches_for_all_16_combinations(self, weighted):
        data = make_regression(seed=1, n=50, k=6, m=2, weighted=weighted)
        folds = make_folds(50, 5, seed=0)
        for spec in PreprocessSpec.all_combinations():
            report = cross_validate(data, folds, spec, a_max=4, metric="rmse")
            naive = naive_cv_table(data, folds, spec, 4, "rmse")
            np.testing.assert_allclose(report.per_fold, naive, rtol=1e-8, atol=1e-10)

    def test_metrics_match_on_larger_problem(self):
        data = make_regression(seed=2, n=100, k=10, m=1, noise=0.5)
        folds = make_folds(100, 4, seed=1)
        spec = PreprocessSpec(center_x=True, center_y=True)
        report = cross_validate(data, folds, spec, a_max=8)
        naive = naive_cv_table(data, folds, spec, 8, "rmse")
        np.testing.assert_allclose(report.per_fold, naive, rtol=1e-8, atol=1e-10)
        naive_best = tuple(int(a) for a in naive.argmin(axis=1) + 1)
        assert report.best_a_per_fold == naive_best

    def test_classification_metrics_match(self):
        rng = np.random.default_rng(3)
        n = 60
        labels = np.array([1] * 40 + [2] * 20)
        x = rng.standard_normal((n, 5)) + np.where(labels == 1, -1.0, 1.0)[:, None]
        y = np.column_stack([(labels == 1) * 1.0, (labels == 2) * 1.0])
        w = class_weights(labels).per_row(labels)
        data = Dataset(x=x, y=y, weights=w)
        folds = make_folds(n, 4, seed=2, labels=labels)
        spec = PreprocessSpec(center_x=True, center_y=True)
        for metric in ("accuracy", "balanced_accuracy", "weighted_accuracy"):
            report = cross_validate(data, folds, spec, a_max=3, metric=metric)
            naive = naive_cv_table(data, folds, spec, 3, metric)
            np.testing.assert_allclose(report.per_fold, naive, rtol=1e-8, atol=1e-10)

    def test_two_level_single_column_classification(self):
        rng = np.random.default_rng(4)
        n = 40
        labels = np.repeat([0.0, 1.0], n // 2)
        x = rng.standard_normal((n, 4)) + labels[:, None] * 2.0
        data = Dataset(x=x, y=labels.reshape(-1, 1))
        folds = make_folds(n, 4, seed=3, labels=labels)
        spec = PreprocessSpec(center_x=True, center_y=True)
        report = cross_validate(data, folds, spec, a_max=3, metric="accuracy")
        naive = naive_cv_table(data, folds, spec, 3, "accuracy")
        np.testing.assert_allclose(report.per_fold, naive, atol=1e-12)
        assert report.per_fold[:, -1].mean() > 0.9


class TestSelectionRule:
    def test_noiseless_linear_data_selects_true_complexity(self):
        # X has rank two and Y is an exact linear map of it, so two
        # components reproduce Y perfectly on held-out rows and every fold
        # picks a=2.
        rng = np.random.default_rng(5)
        scores = rng.standard_normal((30, 2))
        directions = rng.standard_normal((2, 6))
        x = scores @ directions
        data = Dataset(x=x, y=x @ rng.standard_normal((6, 1)))
        folds = make_folds(30, 3, seed=4)
        report = cross_validate(data, folds, PreprocessSpec(), a_max=2)
        assert report.per_fold[:, -1].max() < 1e-8
        assert report.best_a_per_fold == (2, 2, 2)
        assert report.selected_a == 2

    def test_duplicated_halves_give_identical_fold_rows(self):
        rng = np.random.default_rng(6)
        half_x = rng.standard_normal((10, 4))
        half_y = rng.standard_normal((10, 1))
        data = Dataset(x=np.vstack([half_x, half_x]), y=np.vstack([half_y, half_y]))
        folds = FoldSpec(assignment=[0] * 10 + [1] * 10, n_folds=2)
        report = cross_validate(
            data, folds, PreprocessSpec(center_x=True, center_y=True), a_max=3
        )
        np.testing.assert_allclose(report.per_fold[0], report.per_fold[1], rtol=1e-10)

    def test_tie_breaks_toward_fewer_components(self):
        # Rank-one X exhausts after one component, so the metric is exactly
        # tied across a=1..3; argmin must stay at the first (fewest).
        rng = np.random.default_rng(7)
        x = np.outer(rng.standard_normal(24), rng.standard_normal(5))
        data = Dataset(x=x, y=(x[:, :1] * 3.0))
        folds = make_folds(24, 3, seed=5)
        report = cross_validate(data, folds, PreprocessSpec(), a_max=3)
        np.testing.assert_array_equal(report.per_fold[:, 0], report.per_fold[:, 1])
        np.testing.assert_array_equal(report.per_fold[:, 0], report.per_fold[:, 2])
        assert report.best_a_per_fold == (1, 1, 1)
        assert report.selected_a == 1

    def test_half_up_rounding_of_mean_best(self):
        # best_a_per_fold (1, 2) has mean 1.5 -> selects 2.
        rng = np.random.default_rng(8)
        data = make_regression(seed=8, n=40, k=5, m=1, noise=0.3)
        folds = make_folds(40, 5, seed=6)
        report = cross_validate(
            data, folds, PreprocessSpec(center_x=True, center_y=True), a_max=5
        )
        expected = int(np.floor(np.mean(report.best_a_per_fold) + 0.5))
        assert report.selected_a == expected

    def test_final_model_is_full_data_refit(self):
        data = make_regression(seed=9, n=30, k=4, m=1)
        folds = make_folds(30, 3, seed=7)
        spec = PreprocessSpec(center_x=True, center_y=True)
        report = cross_validate(data, folds, spec, a_max=3)
        direct = fit_ikpls1(data, spec, report.selected_a)
        assert report.final_model.coef_stack.tobytes() == direct.coef_stack.tobytes()
        assert report.final_model.a_max == report.selected_a


class TestDeterminismAndThreads:
    def test_thread_count_does_not_change_report(self):
        data = make_regression(seed=10, n=80, k=7, m=2, weighted=True)
        folds = make_folds(80, 8, seed=8)
        spec = PreprocessSpec(center_x=True, scale_x=True, center_y=True)
        base = cross_validate(data, folds, spec, a_max=5, n_threads=1)
        for threads in (2, 4, 7):
            alt = cross_validate(data, folds, spec, a_max=5, n_threads=threads)
            assert base.per_fold.tobytes() == alt.per_fold.tobytes()
            assert base.best_a_per_fold == alt.best_a_per_fold
            assert base.selected_a == alt.selected_a
            assert (
                base.final_model.coef_stack.tobytes()
                == alt.final_model.coef_stack.tobytes()
            )

    def test_repeated_runs_identical(self):
        data = make_regression(seed=11, n=40, k=5, m=1)
        folds = make_folds(40, 4, seed=9)
        spec = PreprocessSpec(center_x=True)
        a = cross_validate(data, folds, spec, a_max=4)
        b = cross_validate(data, folds, spec, a_max=4)
        assert a.per_fold.tobytes() == b.per_fold.tobytes()
        assert a.to_dict(include_runtime=False) == b.to_dict(include_runtime=False)

    def test_report_dict_shape(self):
        data = make_regression(seed=12, n=30, k=4, m=1)
        folds = make_folds(30, 3, seed=10)
        report = cross_validate(data, folds, PreprocessSpec(center_x=True), a_max=3)
        d = report.to_dict()
        assert d["metric"] == "rmse"
        assert d["flags"] == "cx"
        assert len(d["per_fold"]) == 3
        assert len(d["per_fold"][0]) == 3
        assert d["selected_a"] == report.selected_a
        assert "runtime" in d
        assert set(d["runtime"]) == {"precompute", "fit", "predict", "total"}
        assert "runtime" not in report.to_dict(include_runtime=False)


class TestLeakage:
    def test_training_fold_models_ignore_validation_rows(self):
        rng = np.random.default_rng(13)
        n = 40
        x = rng.standard_normal((n, 5))
        y = rng.standard_normal((n, 2))
        folds = make_folds(n, 4, seed=11)
        target = 1
        victims = folds.val_indices(target)
        x2, y2 = x.copy(), y.copy()
        x2[victims] *= -3.0
        y2[victims] += 100.0
        spec = PreprocessSpec(center_x=True, center_y=True, scale_x=True)
        r1 = cross_validate(
            Dataset(x=x, y=y), folds, spec, a_max=3, keep_fold_models=True
        )
        r2 = cross_validate(
            Dataset(x=x2, y=y2), folds, spec, a_max=3, keep_fold_models=True
        )
        assert (
            r1.fold_models[target].coef_stack.tobytes()
            == r2.fold_models[target].coef_stack.tobytes()
        )
        # Other folds see the mutated rows in training and must differ.
        other = 0
        assert (
            r1.fold_models[other].coef_stack.tobytes()
            != r2.fold_models[other].coef_stack.tobytes()
        )

    def test_fold_models_omitted_by_default(self):
        data = make_regression(seed=14, n=30, k=4, m=1)
        folds = make_folds(30, 3, seed=12)
        report = cross_validate(data, folds, PreprocessSpec(), a_max=2)
        assert report.fold_models is None


class TestValidation:
    def test_unknown_metric(self):
        data = make_regression(seed=15, n=20, k=3, m=1)
        folds = make_folds(20, 4, seed=13)
        with pytest.raises(DataError):
            cross_validate(data, folds, PreprocessSpec(), a_max=2, metric="mse")

    def test_a_max_bounds(self):
        data = make_regression(seed=16, n=20, k=3, m=1)
        folds = make_folds(20, 4, seed=14)
        with pytest.raises(DataError):
            cross_validate(data, folds, PreprocessSpec(), a_max=0)
        with pytest.raises(DataError):
            cross_validate(data, folds, PreprocessSpec(), a_max=4)  # only 3 predictors
        # 15 training rows per fold allow at most 14 components even if K
        # were large enough; 3 predictors bind first here.
        report = cross_validate(data, folds, PreprocessSpec(), a_max=3)
        assert report.a_max == 3

    def test_fold_row_mismatch(self):
        data = make_regression(seed=17, n=20, k=3, m=1)
        with pytest.raises(DataError):
            cross_validate(data, make_folds(19, 4, seed=15), PreprocessSpec(), a_max=2)

    def test_classification_metric_on_continuous_y(self):
        data = make_regression(seed=18, n=20, k=3, m=1)
        folds = make_folds(20, 4, seed=16)
        with pytest.raises(DataError) as exc:
            cross_validate(data, folds, PreprocessSpec(), a_max=2, metric="accuracy")
        assert "two-level" in str(exc.value)

    def test_bad_thread_count(self):
        data = make_regression(seed=19, n=20, k=3, m=1)
        folds = make_folds(20, 4, seed=17)
        with pytest.raises(DataError):
            cross_validate(data, folds, PreprocessSpec(), a_max=2, n_threads=0)
