"""Prediction-quality metrics and linear bias/scale calibration.

Regression metrics
------------------
``rmse`` is the plain root-mean-square error. ``syx`` is the standard error
of the estimate: the RMSE that remains after the best linear (bias + scale)
adjustment of the predictions, with two degrees of freedom spent on that
line. It therefore measures scatter around the trend rather than raw
disagreement, and ``syx == 0`` whenever predictions are a perfect affine
transform of the references.

Calibration
-----------
``fit_bias_scale`` regresses the *references on the predictions*, returning
the line ``y ≈ scale·ŷ + bias`` that minimizes the squared vertical
residuals in reference space (equivalently, horizontal residuals in the
conventional predicted-vs-reference plot). Applying the fitted line to the
predictions it came from and refitting yields the identity line.

A :class:`CalibrationLine` records its *provenance* — which rows the fit
used. Only training rows, or training plus validation rows, are acceptable
sources; a line fitted on test rows would leak the very data it is later
judged on, so that provenance is refused outright.

Classification metrics
----------------------
``accuracy`` is the fraction of correct predictions. ``balanced_accuracy``
is the unweighted mean of per-class recall and is undefined when some class
has no true members. ``weighted_accuracy`` is the weight-mass fraction of
correct predictions; with balanced class weights it coincides with balanced
accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateFitError, UndefinedRecallError

__all__ = [
    "CalibrationLine",
    "accuracy",
    "apply_calibration",
    "balanced_accuracy",
    "fit_bias_scale",
    "rmse",
    "syx",
    "weighted_accuracy",
]

CALIBRATION_SOURCES = ("train", "train_plus_validation")


def _as_vector(values: object, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional", shape=list(arr.shape))
    if arr.size and not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise DataError(f"{name} contains a non-finite value", index=bad + 1)
    return arr


def _paired(predictions: object, references: object) -> tuple[np.ndarray, np.ndarray]:
    pred = _as_vector(predictions, "predictions")
    ref = _as_vector(references, "references")
    if pred.size != ref.size:
        raise DataError(
            "predictions and references must have equal length",
            predictions=pred.size,
            references=ref.size,
        )
    return pred, ref


@dataclass(frozen=True)
class CalibrationLine:
    """An affine correction ``corrected = scale·predicted + bias``.

    ``source`` records which partition the line was fitted on and is
    restricted to leak-free provenances.
    """

    scale: float
    bias: float
    source: str = "train"

    def __post_init__(self) -> None:
        if self.source not in CALIBRATION_SOURCES:
            raise DataError(
                "calibration lines may only be fitted on training data "
                "(optionally including validation rows); other provenances "
                "are refused",
                source=self.source,
                allowed=list(CALIBRATION_SOURCES),
            )
        if not (math.isfinite(self.scale) and math.isfinite(self.bias)):
            raise DataError(
                "calibration parameters must be finite",
                scale=self.scale,
                bias=self.bias,
            )


def fit_bias_scale(
    predictions: object, references: object, source: str = "train"
) -> CalibrationLine:
    """Least-squares line mapping predictions onto references.

    Minimizes ``Σ (scale·ŷᵢ + bias − yᵢ)²`` over scale and bias. Requires at
    least three pairs and non-constant predictions.
    """
    pred, ref = _paired(predictions, references)
    if pred.size < 3:
        raise DataError(
            "calibration requires at least three prediction/reference pairs",
            n=int(pred.size),
        )
    pred_mean = float(pred.mean())
    ref_mean = float(ref.mean())
    dev = pred - pred_mean
    var_sum = float(dev @ dev)
    if var_sum <= 0.0:
        raise DegenerateFitError(
            "predictions are constant; the calibration scale is undefined",
            value=pred_mean,
        )
    scale = float(dev @ (ref - ref_mean)) / var_sum
    bias = ref_mean - scale * pred_mean
    return CalibrationLine(scale=scale, bias=bias, source=source)


def apply_calibration(line: CalibrationLine, predictions: object) -> np.ndarray:
    """Apply ``scale·ŷ + bias`` elementwise."""
    pred = _as_vector(predictions, "predictions")
    return line.scale * pred + line.bias


def rmse(predictions: object, references: object) -> float:
    """Root-mean-square error over ``n`` pairs (``n ≥ 1``)."""
    pred, ref = _paired(predictions, references)
    if pred.size == 0:
        raise DataError("rmse requires at least one pair")
    diff = pred - ref
    return math.sqrt(float(diff @ diff) / pred.size)


def syx(predictions: object, references: object) -> float:
    """Standard error of the estimate: RMSE after the best affine correction.

    Spends two degrees of freedom on the fitted line, so the denominator is
    ``n − 2`` and at least three pairs are required.
    """
    pred, ref = _paired(predictions, references)
    if pred.size <= 2:
        raise DataError(
            "syx requires at least three pairs (two degrees of freedom are "
            "spent on the calibration line)",
            n=int(pred.size),
        )
    line = fit_bias_scale(pred, ref)
    residual = ref - (line.scale * pred + line.bias)
    return math.sqrt(float(residual @ residual) / (pred.size - 2))


def _paired_classes(pred_classes: object, true_classes: object) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred_classes)
    true = np.asarray(true_classes)
    if pred.ndim != 1 or true.ndim != 1:
        raise DataError("class vectors must be one-dimensional")
    if pred.size != true.size:
        raise DataError(
            "predicted and true class vectors must have equal length",
            predicted=pred.size,
            true=true.size,
        )
    if pred.size == 0:
        raise DataError("classification metrics require at least one pair")
    return pred, true


def accuracy(pred_classes: object, true_classes: object) -> float:
    """Fraction of predictions equal to the true class."""
    pred, true = _paired_classes(pred_classes, true_classes)
    return float(np.mean(pred == true))


def balanced_accuracy(pred_classes: object, true_classes: object) -> float:
    """Unweighted mean of per-class recall.

    The class set is the union of predicted and true labels; every class in
    that set must appear among the true labels, otherwise its recall is
    undefined.
    """
    pred, true = _paired_classes(pred_classes, true_classes)
    classes = np.union1d(np.unique(pred), np.unique(true))
    recalls = []
    for cls in classes:
        mask = true == cls
        members = int(mask.sum())
        if members == 0:
            raise UndefinedRecallError(
                "class has no true members; its recall is undefined",
                class_label=cls.item() if hasattr(cls, "item") else cls,
            )
        recalls.append(float(np.mean(pred[mask] == cls)))
    return float(np.mean(recalls))


def weighted_accuracy(
    pred_classes: object, true_classes: object, weights: object
) -> float:
    """Weight-mass fraction of correct predictions.

    ``Σ wᵢ·[ŷᵢ == yᵢ] / Σ wᵢ``. With balanced class weights this equals
    balanced accuracy.
    """
    pred, true = _paired_classes(pred_classes, true_classes)
    w = _as_vector(weights, "weights")
    if w.size != pred.size:
        raise DataError(
            "weights must match the class vectors in length",
            weights=w.size,
            classes=pred.size,
        )
    if (w < 0).any():
        bad = int(np.flatnonzero(w < 0)[0])
        raise DataError("weights must be non-negative", index=bad + 1)
    total = float(w.sum())
    if total <= 0.0:
        raise DataError("weights must not all be zero")
    return float(w[pred == true].sum()) / total
