"""Row-local spectral preprocessing and column centering/scaling.

Row-local transforms operate independently on each sample row:

* :func:`snv` — standard normal variate: subtract the row mean and divide by
  the row standard deviation (``n-1`` denominator).
* :func:`savgol_apply` — Savitzky-Golay smoothing or differentiation. The
  filter coefficients come from solving the local least-squares polynomial
  normal equations directly, not from lookup tables.
* :func:`to_pseudo_absorbance` — ``-log(x)`` (natural logarithm) for
  strictly positive reflectance/transmittance values.

Column transforms (:func:`apply_center_scale`, :func:`invert_center_scale`)
consume frozen :class:`~fastpls.stats.ColumnStats`, so a validation block can
be shifted and scaled with *training* statistics — statistics are never
recomputed from the rows being transformed here.

:func:`parse_pipeline` understands strings such as
``"snv|savgol:w=7,p=2,d=2|center_x|scale_x"``: row-local steps apply left to
right, while ``center_*``/``scale_*`` tokens merely collect into the
:class:`~fastpls.core.PreprocessSpec` consumed at fit time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import DenseMatrix, PreprocessSpec, as_dense
from .errors import DataError, NumericError, ZeroVarianceError
from .stats import ColumnStats

_EDGE_POLICIES = ("shrink", "reflect")


def snv(x: DenseMatrix | np.ndarray) -> DenseMatrix:
    """Standard normal variate: standardize each row to mean 0, spread 1.

    Uses the ``n-1`` standard deviation, requires at least two columns, and
    rejects rows with zero spread (they cannot be standardized). The
    transform is idempotent.
    """
    m = as_dense(x, "x")
    if m.cols < 2:
        raise DataError(
            f"standard normal variate needs at least 2 columns, got {m.cols}",
            cols=m.cols,
        )
    data = m.data
    means = data.mean(axis=1, keepdims=True)
    stds = data.std(axis=1, ddof=1, keepdims=True)
    zero = np.flatnonzero(stds.reshape(-1) == 0.0)
    if zero.size:
        row = int(zero[0])
        raise ZeroVarianceError(
            f"row {row + 1} has zero spread and cannot be standardized", row=row + 1
        )
    return DenseMatrix((data - means) / stds)


@dataclass(frozen=True)
class SavgolSpec:
    """Savitzky-Golay filter configuration.

    Parameters
    ----------
    window : int
        Odd window length, at least 3.
    polyorder : int
        Degree of the local polynomial, below ``window``.
    deriv : int
        Derivative order to evaluate at the window center, at most
        ``polyorder``.
    delta : float
        Spacing between adjacent samples; derivative outputs are divided by
        ``delta ** deriv``.
    edge : str
        ``"shrink"`` (default) emits only fully covered positions, so a row
        of length ``k`` maps to ``k - window + 1`` outputs. ``"reflect"``
        keeps the width by mirror-padding the row ends (the boundary sample
        is not repeated).
    """

    window: int
    polyorder: int
    deriv: int = 0
    delta: float = 1.0
    edge: str = "shrink"

    def __post_init__(self) -> None:
        if self.window < 3 or self.window % 2 == 0:
            raise DataError(
                f"window must be odd and at least 3, got {self.window}",
                window=self.window,
            )
        if not 0 <= self.polyorder < self.window:
            raise DataError(
                f"polyorder must satisfy 0 <= polyorder < window, got {self.polyorder}",
                polyorder=self.polyorder,
                window=self.window,
            )
        if not 0 <= self.deriv <= self.polyorder:
            raise DataError(
                f"deriv must satisfy 0 <= deriv <= polyorder, got {self.deriv}",
                deriv=self.deriv,
                polyorder=self.polyorder,
            )
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DataError(f"delta must be positive, got {self.delta}", delta=self.delta)
        if self.edge not in _EDGE_POLICIES:
            raise DataError(
                f"edge must be one of {_EDGE_POLICIES}, got {self.edge!r}", edge=self.edge
            )


def savgol_coefficients(spec: SavgolSpec) -> np.ndarray:
    """Window coefficients for one Savitzky-Golay output position.

    Fits a degree-``polyorder`` polynomial to the window samples at integer
    offsets ``-h..h`` by least squares and returns the linear functional
    that evaluates the ``deriv``-th derivative of that fit at the center.
    Solved from the normal equations of the offset Vandermonde system; the
    result is ordered leftmost sample first, so applying the filter is a
    sliding dot product in natural reading order.
    """
    half = spec.window // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    vander = offsets[:, None] ** np.arange(spec.polyorder + 1)[None, :]
    gram = vander.T @ vander
    # Row `deriv` of the pseudo-inverse gives the fitted polynomial
    # coefficient of t**deriv as a linear functional of the samples.
    pseudo = np.linalg.solve(gram, vander.T)
    coeffs = pseudo[spec.deriv] * math.factorial(spec.deriv)
    return coeffs / spec.delta**spec.deriv


def savgol_apply(x: DenseMatrix | np.ndarray, spec: SavgolSpec) -> DenseMatrix:
    """Apply a Savitzky-Golay filter along each row.

    With ``edge="shrink"`` the output has ``cols - window + 1`` columns; with
    ``edge="reflect"`` the width is preserved using mirrored end padding.
    """
    m = as_dense(x, "x")
    if m.cols < spec.window:
        raise DataError(
            f"rows have {m.cols} columns but the filter window is {spec.window}",
            cols=m.cols,
            window=spec.window,
        )
    coeffs = savgol_coefficients(spec)
    data = m.data
    if spec.edge == "reflect":
        half = spec.window // 2
        data = np.pad(data, ((0, 0), (half, half)), mode="reflect")
    windows = np.lib.stride_tricks.sliding_window_view(data, spec.window, axis=1)
    return DenseMatrix(windows @ coeffs)


def to_pseudo_absorbance(x: DenseMatrix | np.ndarray) -> DenseMatrix:
    """Convert strictly positive intensities to pseudo-absorbance ``-ln(x)``."""
    m = as_dense(x, "x")
    bad = m.data <= 0.0
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataError(
            f"pseudo-absorbance needs positive values; row {r + 1}, column {c + 1} "
            f"is {m.data[r, c]!r}",
            row=int(r) + 1,
            col=int(c) + 1,
        )
    return DenseMatrix(-np.log(m.data))


def _scale_divisors(stats: ColumnStats, on_zero_std: str) -> np.ndarray:
    if on_zero_std not in ("error", "unit"):
        raise DataError(
            f"on_zero_std must be 'error' or 'unit', got {on_zero_std!r}",
            on_zero_std=on_zero_std,
        )
    if not stats.std_defined:
        raise NumericError(
            "standard deviation undefined: fewer than two rows carry non-zero weight",
            nonzero_weight_count=stats.nonzero_weight_count,
        )
    std = stats.std
    zero = np.flatnonzero(std == 0.0)
    if zero.size == 0:
        return std
    if on_zero_std == "error":
        col = int(zero[0])
        raise ZeroVarianceError(
            f"column {col + 1} has zero variance and cannot be scaled", col=col + 1
        )
    out = std.copy()
    out[zero] = 1.0
    return out


def apply_center_scale(
    x: DenseMatrix | np.ndarray,
    stats: ColumnStats,
    center: bool,
    scale: bool,
    on_zero_std: str = "error",
) -> np.ndarray:
    """Shift/scale columns using frozen statistics (never recomputed here).

    Centering subtracts ``stats.mean``; scaling divides by ``stats.std``.
    Zero-variance columns under scaling raise by default; ``on_zero_std=
    "unit"`` leaves such columns unscaled instead.
    """
    m = as_dense(x, "x")
    if stats.n_cols != m.cols:
        raise DataError(
            f"statistics cover {stats.n_cols} columns but data has {m.cols}",
            stats_cols=stats.n_cols,
            cols=m.cols,
        )
    out = m.data
    if center:
        out = out - stats.mean
    if scale:
        divisors = _scale_divisors(stats, on_zero_std)
        out = out / divisors
    if out is m.data:
        out = out.copy()
    return out


def invert_center_scale(
    y: np.ndarray, stats: ColumnStats, center: bool, scale: bool, on_zero_std: str = "error"
) -> np.ndarray:
    """Exact inverse of :func:`apply_center_scale` on transformed values."""
    out = np.array(y, dtype=np.float64, copy=True)
    if out.ndim != 2 or out.shape[1] != stats.n_cols:
        raise DataError(
            f"statistics cover {stats.n_cols} columns but data has "
            f"{out.shape[-1] if out.ndim else 0}",
            stats_cols=stats.n_cols,
        )
    if scale:
        out *= _scale_divisors(stats, on_zero_std)
    if center:
        out += stats.mean
    return out


#: One row-local pipeline step: the literal names or a filter spec.
RowStep = Union[str, SavgolSpec]


@dataclass(frozen=True)
class Pipeline:
    """Parsed preprocessing pipeline: ordered row steps plus fit-time flags."""

    steps: tuple[RowStep, ...] = ()
    spec: PreprocessSpec = PreprocessSpec()


_SAVGOL_KEYS = {
    "w": "window",
    "p": "polyorder",
    "d": "deriv",
    "delta": "delta",
    "edge": "edge",
}
_FLAG_TOKENS = {
    "center_x": "center_x",
    "center_y": "center_y",
    "scale_x": "scale_x",
    "scale_y": "scale_y",
}


def _parse_savgol_params(body: str) -> SavgolSpec:
    params: dict = {}
    for part in body.split(","):
        part = part.strip()
        if not part or "=" not in part:
            raise DataError(
                f"savgol parameter {part!r} is not of the form key=value", token=part
            )
        key, _, value = part.partition("=")
        key = key.strip().lower()
        if key not in _SAVGOL_KEYS:
            raise DataError(
                f"unknown savgol parameter {key!r}; expected one of {sorted(_SAVGOL_KEYS)}",
                key=key,
            )
        name = _SAVGOL_KEYS[key]
        if name in params:
            raise DataError(f"duplicate savgol parameter {key!r}", key=key)
        if name == "edge":
            params[name] = value.strip().lower()
        elif name == "delta":
            try:
                params[name] = float(value)
            except ValueError:
                raise DataError(f"savgol delta {value!r} is not a number", value=value) from None
        else:
            try:
                params[name] = int(value)
            except ValueError:
                raise DataError(
                    f"savgol parameter {key}={value!r} is not an integer", value=value
                ) from None
    if "window" not in params or "polyorder" not in params:
        raise DataError("savgol needs at least w= and p= parameters")
    return SavgolSpec(**params)


def parse_pipeline(text: str) -> Pipeline:
    """Parse a ``|``-separated preprocessing pipeline string.

    Row-local steps (``snv``, ``absorbance``, ``savgol:...``) keep their
    order; ``center_x``/``center_y``/``scale_x``/``scale_y`` tokens turn on
    the corresponding fit-time toggle regardless of position. The empty
    string is an empty pipeline.
    """
    steps: list[RowStep] = []
    flags = {name: False for name in _FLAG_TOKENS.values()}
    text = text.strip()
    if text:
        for raw in text.split("|"):
            token = raw.strip()
            lowered = token.lower()
            if lowered in ("snv", "absorbance"):
                steps.append(lowered)
            elif lowered.startswith("savgol"):
                _, sep, body = token.partition(":")
                if not sep or not body.strip():
                    raise DataError("savgol step needs parameters, e.g. savgol:w=7,p=2,d=2")
                steps.append(_parse_savgol_params(body))
            elif lowered in _FLAG_TOKENS:
                if flags[_FLAG_TOKENS[lowered]]:
                    raise DataError(f"duplicate pipeline token {token!r}", token=token)
                flags[_FLAG_TOKENS[lowered]] = True
            elif not token:
                raise DataError("empty pipeline step")
            else:
                raise DataError(f"unknown pipeline step {token!r}", token=token)
    return Pipeline(steps=tuple(steps), spec=PreprocessSpec(**flags))


def apply_row_steps(x: DenseMatrix | np.ndarray, pipeline: Pipeline) -> DenseMatrix:
    """Apply the pipeline's row-local steps in order (flags are fit-time)."""
    m = as_dense(x, "x")
    for step in pipeline.steps:
        if step == "snv":
            m = snv(m)
        elif step == "absorbance":
            m = to_pseudo_absorbance(m)
        else:
            m = savgol_apply(m, step)
    return m
