"""Numerically careful column statistics and weighting utilities.

Summations use Neumaier's compensated scheme so that column means and
variances stay accurate on badly scaled data. Weighted variance follows the
frequency-style estimator

    var_w = N' * sum_i w_i (x_i - mean_w)^2 / ((N' - 1) * sum_i w_i)

where ``N'`` counts the rows with non-zero weight. This estimator is
invariant under rescaling all weights by a positive constant and reduces to
the ordinary ``n-1`` sample variance for unit weights. The alternative
"reliability" estimator that divides by ``(sum_i w_i) - 1`` is provided for
reference; it is undefined when the weights sum to one.

Class weighting makes every class contribute equally: class ``c`` with
``N_c`` members out of ``N`` rows and ``C`` classes gets weight
``N / (C * N_c)``, so each class's total weight is ``N / C`` and the mean
per-row weight is one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DenseMatrix, as_dense
from .errors import DataError, UndefinedVarianceError

#: Relative half-width of the guard band around ``sum(w) == 1`` inside which
#: the reliability-weights variance is treated as undefined.
_SUM_ONE_TOL = 1e-12


def neumaier_sum(values) -> float:
    """Sum ``values`` with Neumaier's improved Kahan compensation.

    The running compensation also captures the error when the incoming term
    is larger in magnitude than the running sum, so cancellation-heavy
    sequences such as ``[1e16, 1.0, -1e16]`` sum exactly. The empty sum
    is 0.0.
    """
    s = 0.0
    c = 0.0
    for v in values:
        x = float(v)
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


class VectorAccumulator:
    """Per-column Neumaier accumulator; terms are absorbed in call order."""

    def __init__(self, n_cols: int) -> None:
        self._sum = np.zeros(n_cols)
        self._comp = np.zeros(n_cols)

    def add(self, x: np.ndarray) -> None:
        s = self._sum
        t = s + x
        big = np.abs(s) >= np.abs(x)
        self._comp += np.where(big, (s - t) + x, (x - t) + s)
        self._sum = t

    def total(self) -> np.ndarray:
        return self._sum + self._comp


def _column_sums(matrix: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Compensated per-column ``sum(w*x)`` and ``sum(w*x^2)`` in one sweep."""
    acc1 = VectorAccumulator(matrix.shape[1])
    acc2 = VectorAccumulator(matrix.shape[1])
    for i in range(matrix.shape[0]):
        wx = weights[i] * matrix[i]
        acc1.add(wx)
        acc2.add(wx * matrix[i])
    return acc1.total(), acc2.total()


def _column_sq_dev(matrix: np.ndarray, weights: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Compensated per-column ``sum(w*(x-mean)^2)``."""
    acc = VectorAccumulator(matrix.shape[1])
    for i in range(matrix.shape[0]):
        d = matrix[i] - mean
        acc.add(weights[i] * d * d)
    return acc.total()


def _validate_weights(weights, n_rows: int) -> np.ndarray:
    w = np.array(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != n_rows:
        raise DataError(
            f"weights has length {w.shape[0]} but data has {n_rows} rows",
            weights=w.shape[0],
            rows=n_rows,
        )
    if not np.isfinite(w).all():
        i = int(np.argwhere(~np.isfinite(w))[0][0])
        raise DataError(f"weight at row {i + 1} is not finite", row=i + 1)
    if (w < 0).any():
        i = int(np.argwhere(w < 0)[0][0])
        raise DataError(f"weight at row {i + 1} is negative", row=i + 1, value=float(w[i]))
    if not (w > 0).any():
        raise DataError("all row weights are zero")
    return w


@dataclass(frozen=True)
class ColumnStats:
    """Per-column weighted moments of a matrix.

    Attributes
    ----------
    mean, std : arrays of shape (k,)
        Weighted column means and standard deviations. ``std`` is the square
        root of the frequency-weighted variance described in the module
        docstring; it is all zeros (and flagged undefined) when fewer than
        two rows carry non-zero weight.
    col_sum, col_sum_sq : arrays of shape (k,)
        Compensated ``sum(w*x)`` and ``sum(w*x^2)`` per column.
    weight_total : float
        Compensated ``sum(w)``.
    nonzero_weight_count : int
        ``N'``, the number of rows with non-zero weight.
    std_defined : bool
        Whether the variance estimator was defined (``N' >= 2``).
    """

    mean: np.ndarray
    std: np.ndarray
    col_sum: np.ndarray
    col_sum_sq: np.ndarray
    weight_total: float
    nonzero_weight_count: int
    std_defined: bool

    @property
    def n_cols(self) -> int:
        return int(self.mean.shape[0])

    @property
    def variance(self) -> np.ndarray:
        return self.std * self.std


def _finalize_stats(
    s1: np.ndarray,
    s2: np.ndarray,
    sq_dev: np.ndarray | None,
    weight_total: float,
    nonzero: int,
) -> ColumnStats:
    if weight_total <= 0.0:
        raise DataError("total weight is not positive", weight_total=weight_total)
    mean = s1 / weight_total
    if sq_dev is None:
        # Single-sweep identity: sum w (x-mean)^2 = sum w x^2 - mean^2 * sum w.
        sq_dev = s2 - weight_total * mean * mean
    sq_dev = np.maximum(sq_dev, 0.0)
    std_defined = nonzero >= 2
    if std_defined:
        var = nonzero * sq_dev / ((nonzero - 1) * weight_total)
        std = np.sqrt(var)
    else:
        std = np.zeros_like(mean)
    for arr in (mean, std, s1, s2):
        arr.flags.writeable = False
    return ColumnStats(
        mean=mean,
        std=std,
        col_sum=s1,
        col_sum_sq=s2,
        weight_total=float(weight_total),
        nonzero_weight_count=int(nonzero),
        std_defined=std_defined,
    )


def column_stats(
    x: DenseMatrix | np.ndarray,
    weights: np.ndarray | Sequence | None = None,
    two_pass: bool = True,
) -> ColumnStats:
    """Weighted per-column statistics of a matrix.

    Parameters
    ----------
    x : matrix of shape (n, k)
    weights : array of shape (n,), optional
        Non-negative finite row weights, at least one positive. ``None``
        means unit weights, for which the results reduce to ordinary sample
        statistics with ``n-1`` degrees of freedom.
    two_pass : bool
        When true (default), the variance numerator is recomputed from
        deviations about the mean in a second sweep, which is robust to
        large column offsets. When false, it is derived from the one-sweep
        identity ``sum(w*x^2) - mean^2*sum(w)``, which is faster but can
        cancel catastrophically; negative results are clipped to zero.
    """
    matrix = as_dense(x, "x").data
    n = matrix.shape[0]
    w = np.ones(n) if weights is None else _validate_weights(weights, n)
    s1, s2 = _column_sums(matrix, w)
    weight_total = neumaier_sum(w)
    nonzero = int(np.count_nonzero(w))
    sq_dev = None
    if two_pass:
        mean = s1 / weight_total
        sq_dev = _column_sq_dev(matrix, w, mean)
    return _finalize_stats(s1, s2, sq_dev, weight_total, nonzero)


def becker_ismail_variance(values, weights) -> float:
    """Reference "reliability weights" variance: ``sum w (x-mean)^2 / (sum w - 1)``.

    Provided for comparison against :func:`column_stats`; the two agree (per
    column) exactly when ``sum(w)`` equals the non-zero-weight count. This
    estimator is undefined when the weights sum to one — normalized weights
    zero its denominator — and such inputs are rejected.
    """
    vals = np.array(values, dtype=np.float64).reshape(-1)
    w = _validate_weights(weights, vals.shape[0])
    weight_total = neumaier_sum(w)
    denom = weight_total - 1.0
    if abs(denom) <= _SUM_ONE_TOL * max(1.0, abs(weight_total)):
        raise UndefinedVarianceError(
            "weights sum to one, so the reliability-weights variance divides by zero",
            weight_total=weight_total,
        )
    mean = neumaier_sum(w * vals) / weight_total
    dev = vals - mean
    return neumaier_sum(w * dev * dev) / denom


@dataclass(frozen=True)
class ClassWeightTable:
    """Balanced per-class weights: class ``c`` gets ``N / (C * N_c)``.

    Every class's members then carry equal total weight ``N / C``, the grand
    total equals ``N``, and the mean per-row weight is one.
    """

    classes: tuple
    counts: np.ndarray
    weights: np.ndarray

    @property
    def n_total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def weight_of(self, label) -> float:
        try:
            return float(self.weights[self.classes.index(label)])
        except ValueError:
            raise DataError(f"unknown class label {label!r}", label=str(label)) from None

    def per_row(self, labels: Sequence | np.ndarray) -> np.ndarray:
        """Expand the table to one weight per row of ``labels``."""
        return np.array([self.weight_of(lbl) for lbl in np.asarray(labels).reshape(-1)])


def class_weights(labels: Sequence | np.ndarray) -> ClassWeightTable:
    """Balanced class weights from a label sequence (classes sorted)."""
    arr = np.asarray(labels).reshape(-1)
    if arr.shape[0] == 0:
        raise DataError("no labels given")
    classes, counts = np.unique(arr, return_counts=True)
    n = arr.shape[0]
    c = classes.shape[0]
    weights = n / (c * counts.astype(np.float64))
    counts = counts.astype(np.int64)
    weights.flags.writeable = False
    counts.flags.writeable = False
    return ClassWeightTable(
        classes=tuple(classes.tolist()), counts=counts, weights=weights
    )
