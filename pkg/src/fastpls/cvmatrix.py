"""Cross-validation matrix engine: every training fold's cross products
from one pass over the data.

For P-fold cross-validation the naive approach materializes each training
partition and recomputes ``X'X``/``X'Y`` from scratch, costing
``P * N * K * (K + M)`` operations. This engine instead computes each fold's
*validation* contribution once and combines them, so total work stays
``(N + P) * K * (K + M)`` — flat in the number of folds. Centering and
scaling are applied afterwards in pure ``K``-space algebra:

* centered predictor Gram:   ``X'WX - w_tr * mu_x mu_x'``
* centered cross product:    ``X'WY - w_tr * mu_x mu_y'``  (any centering flag)
* scaling: divide rows/columns by the training standard deviations.

All 16 centering/scaling combinations are served by the same single-pass
aggregates, with weighted rows supported throughout (``W = diag(w)``).

Two retention modes:

* :func:`precompute` (retained) keeps per-fold contributions *and* builds
  each fold's training-side aggregates by summing the other folds'
  contributions directly (an exclusive prefix + suffix over folds). A
  training fold's numbers are therefore computed without ever reading the
  held-out rows — mutating a validation row leaves training products
  bit-identical, not merely close.
* :func:`stream_training_products` visits folds one at a time and derives
  training aggregates by subtracting the fold's contribution from the
  totals. Peak extra memory is one contribution set, ``O(K*(K+M))``,
  regardless of P; the subtraction is algebraically (not bitwise) exact.

Variance safety: training variances derived from the sum-of-squares
identity can cancel catastrophically for near-constant columns. Whenever
the derived squared deviation falls below ``1e-12`` times the column's sum
of squares, it is recomputed by a compensated two-pass sweep over the
training rows of that column only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import Dataset, FoldSpec, PreprocessSpec
from .errors import DataError, NumericError
from .preprocess import _scale_divisors, apply_center_scale
from .stats import ColumnStats, VectorAccumulator, column_stats, neumaier_sum

#: Fixed row-block size for product accumulation. Constant (never derived
#: from thread counts or partition layout) so results are reproducible.
_BLOCK_ROWS = 256

#: Threshold of the catastrophic-cancellation guard, relative to the
#: column's weighted sum of squares.
_VARIANCE_GUARD_RTOL = 1e-12


@dataclass(frozen=True)
class CvProducts:
    """Preprocessed training-fold cross products plus frozen statistics.

    ``xtx``/``xty`` are the (weighted) cross products of the training rows
    *after* the requested centering/scaling; ``stats_x``/``stats_y`` are the
    raw training statistics that produce that preprocessing (and that a
    downstream model must freeze for prediction).
    """

    fold: int
    spec: PreprocessSpec
    xtx: np.ndarray
    xty: np.ndarray
    stats_x: ColumnStats
    stats_y: ColumnStats
    n_train_rows: int


@dataclass(frozen=True)
class GlobalProducts:
    """Single-pass aggregates: totals, per-fold validation contributions,
    and exactly-excluded per-fold training aggregates.

    Shapes: ``P`` folds, ``K`` predictors, ``M`` responses. ``*_val[p]``
    holds the contribution of fold ``p``'s rows; ``*_train[p]`` holds the
    sum of every other fold's contribution (never touching fold ``p``).
    """

    data: Dataset
    folds: FoldSpec
    xtx_total: np.ndarray
    xty_total: np.ndarray
    xtx_val: np.ndarray
    xty_val: np.ndarray
    col_sum_x_val: np.ndarray
    col_ssq_x_val: np.ndarray
    col_sum_y_val: np.ndarray
    col_ssq_y_val: np.ndarray
    weight_val: np.ndarray
    nonzero_weight_val: np.ndarray
    xtx_train: np.ndarray
    xty_train: np.ndarray
    col_sum_x_train: np.ndarray
    col_ssq_x_train: np.ndarray
    col_sum_y_train: np.ndarray
    col_ssq_y_train: np.ndarray
    weight_train: np.ndarray
    nonzero_weight_train: np.ndarray

    @property
    def n_folds(self) -> int:
        return self.folds.n_folds


class _FoldAccumulator:
    """Blocked accumulator for one row subset's raw weighted products."""

    def __init__(self, k: int, m: int) -> None:
        self.xtx = np.zeros((k, k))
        self.xty = np.zeros((k, m))
        self.sum_x = VectorAccumulator(k)
        self.ssq_x = VectorAccumulator(k)
        self.sum_y = VectorAccumulator(m)
        self.ssq_y = VectorAccumulator(m)
        self.weight = VectorAccumulator(1)
        self.nonzero = 0

    def add_block(self, xb: np.ndarray, yb: np.ndarray, wb: np.ndarray) -> None:
        xw = wb[:, None] * xb
        self.xtx += xw.T @ xb
        self.xty += xw.T @ yb
        yw = wb[:, None] * yb
        for i in range(xb.shape[0]):
            self.sum_x.add(xw[i])
            self.ssq_x.add(xw[i] * xb[i])
            self.sum_y.add(yw[i])
            self.ssq_y.add(yw[i] * yb[i])
            self.weight.add(wb[i : i + 1])
        self.nonzero += int(np.count_nonzero(wb))

    def finish(self) -> dict:
        return {
            "xtx": 0.5 * (self.xtx + self.xtx.T),
            "xty": self.xty,
            "sum_x": self.sum_x.total(),
            "ssq_x": self.ssq_x.total(),
            "sum_y": self.sum_y.total(),
            "ssq_y": self.ssq_y.total(),
            "weight": float(self.weight.total()[0]),
            "nonzero": self.nonzero,
        }


def _accumulate_rows(
    x: np.ndarray, y: np.ndarray, w: np.ndarray, indices: np.ndarray
) -> dict:
    """Raw products of the given rows (ascending order, fixed block size)."""
    acc = _FoldAccumulator(x.shape[1], y.shape[1])
    for start in range(0, indices.shape[0], _BLOCK_ROWS):
        sel = indices[start : start + _BLOCK_ROWS]
        acc.add_block(x[sel], y[sel], w[sel])
    return acc.finish()


def _exclusive_sums(stacked: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-slot sums of all *other* slots, plus the grand total.

    ``out[p]`` is built as (sum of slots before ``p``, ascending) plus
    (sum of slots after ``p``, descending); slot ``p`` itself is never read
    while forming ``out[p]``.
    """
    p = stacked.shape[0]
    out = np.zeros_like(stacked)
    run = np.zeros_like(stacked[0])
    for i in range(p):
        out[i] = run
        run = run + stacked[i]
    total = run
    run = np.zeros_like(stacked[0])
    for i in range(p - 1, -1, -1):
        out[i] += run
        run = run + stacked[i]
    return out, total


def precompute(data: Dataset, folds: FoldSpec) -> GlobalProducts:
    """One pass over the rows: totals plus per-fold contribution sets.

    Retains all ``P`` contribution sets and the exactly-excluded training
    aggregates, so any fold (and any of the 16 preprocessing combinations)
    can be queried afterwards without touching the rows again.
    """
    if folds.n_rows != data.n_rows:
        raise DataError(
            f"fold assignment covers {folds.n_rows} rows but data has {data.n_rows}",
            folds=folds.n_rows,
            rows=data.n_rows,
        )
    x = data.x.data
    y = data.y.data
    w = data.effective_weights()
    p = folds.n_folds
    per_fold = [
        _accumulate_rows(x, y, w, folds.val_indices(fold)) for fold in range(p)
    ]

    def stack(key, dtype=np.float64):
        return np.array([c[key] for c in per_fold], dtype=dtype)

    fields: dict[str, np.ndarray] = {}
    totals: dict[str, np.ndarray] = {}
    for key in ("xtx", "xty", "sum_x", "ssq_x", "sum_y", "ssq_y", "weight"):
        val = stack(key)
        train, total = _exclusive_sums(val)
        fields[key] = (val, train)
        totals[key] = total
    nz_val = stack("nonzero", dtype=np.int64)
    nz_train, _ = _exclusive_sums(nz_val)

    arrays = dict(
        xtx_total=totals["xtx"],
        xty_total=totals["xty"],
        xtx_val=fields["xtx"][0],
        xty_val=fields["xty"][0],
        col_sum_x_val=fields["sum_x"][0],
        col_ssq_x_val=fields["ssq_x"][0],
        col_sum_y_val=fields["sum_y"][0],
        col_ssq_y_val=fields["ssq_y"][0],
        weight_val=fields["weight"][0],
        nonzero_weight_val=nz_val,
        xtx_train=fields["xtx"][1],
        xty_train=fields["xty"][1],
        col_sum_x_train=fields["sum_x"][1],
        col_ssq_x_train=fields["ssq_x"][1],
        col_sum_y_train=fields["sum_y"][1],
        col_ssq_y_train=fields["ssq_y"][1],
        weight_train=fields["weight"][1],
        nonzero_weight_train=nz_train,
    )
    for arr in arrays.values():
        arr.flags.writeable = False
    return GlobalProducts(data=data, folds=folds, **arrays)


def _training_stats(
    col_sum: np.ndarray,
    col_ssq: np.ndarray,
    weight_total: float,
    nonzero: int,
    fold: int,
    column_values,  # callable: j -> (values, weights) of training rows
) -> ColumnStats:
    """Training-fold column statistics from aggregates, with the
    cancellation guard re-sweeping suspicious columns."""
    if weight_total <= 0.0:
        raise NumericError(
            f"training partition for fold {fold} carries zero total weight",
            fold=fold,
        )
    mean = col_sum / weight_total
    sq_dev = col_ssq - weight_total * mean * mean
    guard = sq_dev < _VARIANCE_GUARD_RTOL * col_ssq
    for j in np.flatnonzero(guard):
        values, weights = column_values(int(j))
        dev = values - mean[j]
        sq_dev[j] = neumaier_sum(weights * dev * dev)
    sq_dev = np.maximum(sq_dev, 0.0)
    std_defined = nonzero >= 2
    if std_defined:
        std = np.sqrt(nonzero * sq_dev / ((nonzero - 1) * weight_total))
    else:
        std = np.zeros_like(mean)
    mean = mean.copy()
    col_sum = np.array(col_sum)
    col_ssq = np.array(col_ssq)
    for arr in (mean, std, col_sum, col_ssq):
        arr.flags.writeable = False
    return ColumnStats(
        mean=mean,
        std=std,
        col_sum=col_sum,
        col_sum_sq=col_ssq,
        weight_total=float(weight_total),
        nonzero_weight_count=int(nonzero),
        std_defined=std_defined,
    )


def _preprocess_products(
    xtx: np.ndarray,
    xty: np.ndarray,
    stats_x: ColumnStats,
    stats_y: ColumnStats,
    weight_total: float,
    spec: PreprocessSpec,
    on_zero_std: str,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply centering/scaling to raw training products in K-space."""
    mu_x = stats_x.mean
    mu_y = stats_y.mean
    if spec.center_x or spec.center_y:
        xty = xty - weight_total * np.outer(mu_x, mu_y)
    if spec.center_x:
        xtx = xtx - weight_total * np.outer(mu_x, mu_x)
    if spec.scale_x:
        dx = _scale_divisors(stats_x, on_zero_std)
        xtx = xtx / np.outer(dx, dx)
        xty = xty / dx[:, None]
    if spec.scale_y:
        dy = _scale_divisors(stats_y, on_zero_std)
        xty = xty / dy[None, :]
    if xtx.base is not None or xtx.flags.writeable is False:
        xtx = np.array(xtx)
    if xty.base is not None or xty.flags.writeable is False:
        xty = np.array(xty)
    xtx.flags.writeable = False
    xty.flags.writeable = False
    return xtx, xty


def _assemble(
    data: Dataset,
    folds: FoldSpec,
    fold: int,
    raw: dict,
    spec: PreprocessSpec,
    on_zero_std: str,
) -> CvProducts:
    w = data.effective_weights()
    train_idx_cache: list[np.ndarray] = []

    def column_values_x(j: int):
        if not train_idx_cache:
            train_idx_cache.append(folds.train_indices(fold))
        idx = train_idx_cache[0]
        return data.x.data[idx, j], w[idx]

    def column_values_y(j: int):
        if not train_idx_cache:
            train_idx_cache.append(folds.train_indices(fold))
        idx = train_idx_cache[0]
        return data.y.data[idx, j], w[idx]

    stats_x = _training_stats(
        raw["sum_x"], raw["ssq_x"], raw["weight"], raw["nonzero"], fold, column_values_x
    )
    stats_y = _training_stats(
        raw["sum_y"], raw["ssq_y"], raw["weight"], raw["nonzero"], fold, column_values_y
    )
    xtx, xty = _preprocess_products(
        raw["xtx"], raw["xty"], stats_x, stats_y, raw["weight"], spec, on_zero_std
    )
    n_train = int(data.n_rows - folds.val_indices(fold).shape[0])
    return CvProducts(
        fold=fold,
        spec=spec,
        xtx=xtx,
        xty=xty,
        stats_x=stats_x,
        stats_y=stats_y,
        n_train_rows=n_train,
    )


def training_products(
    products: GlobalProducts,
    fold: int,
    spec: PreprocessSpec,
    on_zero_std: str = "error",
) -> CvProducts:
    """Preprocessed training products for one fold from retained aggregates.

    Pure ``K``-space algebra: no row data is touched except by the
    cancellation guard. Any of the 16 flag combinations can be requested
    against the same :class:`GlobalProducts`.
    """
    folds = products.folds
    if not 0 <= fold < folds.n_folds:
        raise DataError(f"fold {fold} outside 0..{folds.n_folds - 1}", fold=fold)
    raw = {
        "xtx": products.xtx_train[fold],
        "xty": products.xty_train[fold],
        "sum_x": products.col_sum_x_train[fold],
        "ssq_x": products.col_ssq_x_train[fold],
        "sum_y": products.col_sum_y_train[fold],
        "ssq_y": products.col_ssq_y_train[fold],
        "weight": float(products.weight_train[fold]),
        "nonzero": int(products.nonzero_weight_train[fold]),
    }
    return _assemble(products.data, folds, fold, raw, spec, on_zero_std)


def stream_training_products(
    data: Dataset,
    folds: FoldSpec,
    spec: PreprocessSpec,
    on_zero_std: str = "error",
) -> Iterator[CvProducts]:
    """Yield training products fold by fold with O(K*(K+M)) extra memory.

    First accumulates the grand totals in fixed-size row blocks, then per
    fold recomputes only that fold's contribution and subtracts it from the
    totals. One contribution set lives at a time; nothing scales with the
    number of folds.
    """
    if folds.n_rows != data.n_rows:
        raise DataError(
            f"fold assignment covers {folds.n_rows} rows but data has {data.n_rows}",
            folds=folds.n_rows,
            rows=data.n_rows,
        )
    x = data.x.data
    y = data.y.data
    w = data.effective_weights()
    totals = _accumulate_rows(x, y, w, np.arange(data.n_rows))
    for fold in range(folds.n_folds):
        val = _accumulate_rows(x, y, w, folds.val_indices(fold))
        raw = {
            "xtx": totals["xtx"] - val["xtx"],
            "xty": totals["xty"] - val["xty"],
            "sum_x": totals["sum_x"] - val["sum_x"],
            "ssq_x": totals["ssq_x"] - val["ssq_x"],
            "sum_y": totals["sum_y"] - val["sum_y"],
            "ssq_y": totals["ssq_y"] - val["ssq_y"],
            "weight": totals["weight"] - val["weight"],
            "nonzero": totals["nonzero"] - val["nonzero"],
        }
        yield _assemble(data, folds, fold, raw, spec, on_zero_std)


def naive_training_products(
    data: Dataset,
    folds: FoldSpec,
    fold: int,
    spec: PreprocessSpec,
    on_zero_std: str = "error",
) -> CvProducts:
    """Reference implementation: materialize the training partition,
    preprocess its rows explicitly, and contract directly.

    Kept deliberately independent of the aggregate algebra above; used to
    cross-check the engine and as the timing baseline.
    """
    idx = folds.train_indices(fold)
    x_tr = data.x.data[idx]
    y_tr = data.y.data[idx]
    w_tr = data.effective_weights()[idx]
    if not (w_tr > 0).any():
        raise NumericError(
            f"training partition for fold {fold} carries zero total weight", fold=fold
        )
    stats_x = column_stats(x_tr, w_tr, two_pass=True)
    stats_y = column_stats(y_tr, w_tr, two_pass=True)
    xp = apply_center_scale(x_tr, stats_x, spec.center_x, spec.scale_x, on_zero_std)
    yp = apply_center_scale(y_tr, stats_y, spec.center_y, spec.scale_y, on_zero_std)
    xw = w_tr[:, None] * xp
    xtx = xw.T @ xp
    xtx = 0.5 * (xtx + xtx.T)
    xty = xw.T @ yp
    xtx.flags.writeable = False
    xty.flags.writeable = False
    return CvProducts(
        fold=fold,
        spec=spec,
        xtx=xtx,
        xty=xty,
        stats_x=stats_x,
        stats_y=stats_y,
        n_train_rows=int(idx.shape[0]),
    )
