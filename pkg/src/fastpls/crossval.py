"""Cross-validation orchestration.

Drives the product-space engine fold by fold: training cross products come
from :mod:`fastpls.cvmatrix` (so no training pass ever touches held-out
rows), each fold is fitted from products alone, and the held-out rows are
scored for *every* component count up to ``a_max`` in one sweep. Per-fold
optima are averaged (half-up rounding) to pick the final component count,
and the returned model is refitted on all rows with that count.

Validation rows are preprocessed with the *training* fold's frozen column
statistics — never their own — which keeps the procedure leak-free by
construction.

Fold evaluations are independent and may run on a thread pool; results land
in fold-indexed slots, so the report is byte-identical regardless of thread
count or scheduling order.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import __version__
from .core import Dataset, FoldSpec, PreprocessSpec
from .cvmatrix import precompute, training_products
from .errors import DataError
from .metrics import accuracy, balanced_accuracy, rmse, weighted_accuracy
from .pls import PlsModel, fit_ikpls1, fit_ikpls2, predict_all

__all__ = ["CvReport", "cross_validate", "METRIC_NAMES"]

# Metric name -> True when larger values are better.
_METRIC_LARGER_IS_BETTER = {
    "rmse": False,
    "accuracy": True,
    "balanced_accuracy": True,
    "weighted_accuracy": True,
}

METRIC_NAMES = tuple(sorted(_METRIC_LARGER_IS_BETTER))


@dataclass(frozen=True)
class CvReport:
    """Outcome of one cross-validation run.

    ``per_fold`` holds the validation metric for every fold (rows) and every
    component count ``1..a_max`` (columns). ``timing`` carries wall-clock
    seconds and is the only non-deterministic field; everything else is a
    pure function of the inputs.
    """

    metric: str
    spec: PreprocessSpec
    a_max: int
    per_fold: np.ndarray
    best_a_per_fold: tuple[int, ...]
    selected_a: int
    final_model: PlsModel
    timing: Mapping[str, float]
    fold_models: tuple[PlsModel, ...] | None = None

    @property
    def n_folds(self) -> int:
        return self.per_fold.shape[0]

    def to_dict(self, include_runtime: bool = True) -> dict:
        """JSON-ready report; the volatile part lives under ``runtime``."""
        report = {
            "version": __version__,
            "metric": self.metric,
            "flags": self.spec.to_flags(),
            "a_max": self.a_max,
            "n_folds": self.n_folds,
            "per_fold": [[float(v) for v in row] for row in self.per_fold],
            "best_a_per_fold": list(self.best_a_per_fold),
            "selected_a": self.selected_a,
            "final_n_effective": self.final_model.n_effective,
            "final_notes": list(self.final_model.notes),
        }
        if include_runtime:
            report["runtime"] = {k: float(v) for k, v in self.timing.items()}
        return report


def _class_truth(data: Dataset) -> tuple[np.ndarray, tuple | None]:
    """True labels for every row, derived from the response coding.

    A single response column must be two-level numeric coding (its distinct
    values become the labels); multiple columns are treated as per-class
    indicators and the label is ``1 +`` the arg-max column.
    """
    y = data.y.data
    if y.shape[1] == 1:
        levels = np.unique(y[:, 0])
        if levels.size != 2:
            raise DataError(
                "classification metrics need a two-level response column; "
                f"got {levels.size} distinct value(s)",
                distinct=int(levels.size),
            )
        classes = (float(levels[0]), float(levels[1]))
        return y[:, 0].copy(), classes
    return 1 + y.argmax(axis=1), None


def _predicted_labels(preds: np.ndarray, classes: tuple | None) -> np.ndarray:
    """Labels from raw predicted responses, mirroring ``predict_class``."""
    if preds.shape[1] == 1:
        lo, hi = classes
        midpoint = 0.5 * (lo + hi)
        return np.where(preds[:, 0] > midpoint, hi, lo)
    return 1 + preds.argmax(axis=1)


def cross_validate(
    data: Dataset,
    folds: FoldSpec,
    spec: PreprocessSpec,
    a_max: int,
    metric: str = "rmse",
    on_zero_std: str = "error",
    n_threads: int = 1,
    keep_fold_models: bool = False,
) -> CvReport:
    """Score every component count on every validation fold and refit.

    For each fold: training cross products (leak-free by construction) →
    product-space fit with ``a_max`` components → validation predictions for
    every count ``1..a_max`` using frozen training statistics → one metric
    value per count. The best count per fold (ties broken toward fewer
    components) is averaged with half-up rounding to give ``selected_a``,
    and the final model is refitted on all rows with that count.
    """
    if metric not in _METRIC_LARGER_IS_BETTER:
        raise DataError(
            f"unknown metric '{metric}'", metric=metric, allowed=list(METRIC_NAMES)
        )
    if n_threads < 1:
        raise DataError("n_threads must be at least 1", n_threads=n_threads)
    if folds.n_rows != data.n_rows:
        raise DataError(
            "fold assignment covers a different number of rows than the data",
            fold_rows=folds.n_rows,
            data_rows=data.n_rows,
        )
    a_max = int(a_max)
    limit = min(
        min(data.n_rows - size for size in folds.fold_sizes()) - 1,
        data.n_predictors,
    )
    if a_max < 1 or a_max > limit:
        raise DataError(
            f"a_max must be in [1, {limit}] for this fold layout "
            "(smallest training partition minus one, capped by the number "
            "of predictors)",
            a_max=a_max,
            limit=limit,
        )

    classification = metric != "rmse"
    truth = classes = None
    if classification:
        truth, classes = _class_truth(data)
    weights_all = data.effective_weights()

    timing: dict[str, float] = {}
    t0 = time.perf_counter()
    products = precompute(data, folds)
    timing["precompute"] = time.perf_counter() - t0

    metric_rows: list[np.ndarray | None] = [None] * folds.n_folds
    model_slots: list[PlsModel | None] = [None] * folds.n_folds
    fit_seconds = [0.0] * folds.n_folds
    predict_seconds = [0.0] * folds.n_folds

    def evaluate_fold(fold: int) -> None:
        t_fit = time.perf_counter()
        tp = training_products(products, fold, spec, on_zero_std=on_zero_std)
        model = fit_ikpls2(tp.xtx, tp.xty, tp.stats_x, tp.stats_y, spec, a_max)
        fit_seconds[fold] = time.perf_counter() - t_fit

        t_pred = time.perf_counter()
        val_idx = folds.val_indices(fold)
        preds = predict_all(model, data.x.data[val_idx])
        row = np.empty(a_max)
        if classification:
            true_labels = truth[val_idx]
            w_val = weights_all[val_idx]
            for a in range(a_max):
                labels = _predicted_labels(preds[a], classes)
                if metric == "accuracy":
                    row[a] = accuracy(labels, true_labels)
                elif metric == "balanced_accuracy":
                    row[a] = balanced_accuracy(labels, true_labels)
                else:
                    row[a] = weighted_accuracy(labels, true_labels, w_val)
        else:
            y_val = data.y.data[val_idx]
            for a in range(a_max):
                row[a] = rmse(preds[a].ravel(), y_val.ravel())
        predict_seconds[fold] = time.perf_counter() - t_pred
        metric_rows[fold] = row
        if keep_fold_models:
            model_slots[fold] = model

    if n_threads == 1 or folds.n_folds == 1:
        for fold in range(folds.n_folds):
            evaluate_fold(fold)
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(evaluate_fold, range(folds.n_folds)))

    per_fold = np.vstack(metric_rows)
    per_fold.flags.writeable = False
    if _METRIC_LARGER_IS_BETTER[metric]:
        best = per_fold.argmax(axis=1) + 1
    else:
        best = per_fold.argmin(axis=1) + 1
    selected_a = int(np.floor(best.mean() + 0.5))

    t_refit = time.perf_counter()
    final_model = fit_ikpls1(data, spec, selected_a, on_zero_std=on_zero_std)
    timing["fit"] = sum(fit_seconds) + (time.perf_counter() - t_refit)
    timing["predict"] = sum(predict_seconds)
    timing["total"] = time.perf_counter() - t0

    return CvReport(
        metric=metric,
        spec=spec,
        a_max=a_max,
        per_fold=per_fold,
        best_a_per_fold=tuple(int(a) for a in best),
        selected_a=selected_a,
        final_model=final_model,
        timing=timing,
        fold_models=tuple(model_slots) if keep_fold_models else None,
    )
