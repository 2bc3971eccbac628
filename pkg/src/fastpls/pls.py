"""Partial least squares solvers, prediction, and model serialization.

Three interchangeable solvers produce the same regression coefficients (to
numerical tolerance) for every centering/scaling combination, with or
without row weights:

* :func:`fit_nipals` — the classic iterative algorithm that deflates both
  data blocks each component. Slow but transparent; kept as the reference.
* :func:`fit_ikpls1` — improved kernel PLS variant #1: scores are computed
  from the (preprocessed) predictor block, and only the cross-product
  ``X'Y`` is deflated.
* :func:`fit_ikpls2` — improved kernel PLS variant #2: works entirely from
  the cross-product matrices ``X'X`` and ``X'Y``, never touching the rows.
  This is the variant driven by the cross-validation matrix engine.

Row weights ``w`` enter through weighted column statistics and weighted
cross products (``X' diag(w) X`` and ``X' diag(w) Y``); internally the
row-space solvers multiply rows by ``sqrt(w)``, which produces exactly those
products.

Every solver stores, for each component count ``a = 1..a_max``, the
coefficient matrix ``B_a`` mapping preprocessed predictors to preprocessed
responses; :func:`predict` applies the frozen training statistics on both
ends. If the response cross product vanishes before ``a_max`` components
(perfect deflation — e.g. an all-zero centered response), the model is
truncated: later coefficient slices repeat the last achieved one and a note
records the effective count. A component whose score energy vanishes without
perfect deflation raises :class:`~fastpls.errors.DegenerateComponentError`.

Models round-trip losslessly through a small versioned binary container
(magic ``FPLM``).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .core import Dataset, DenseMatrix, PreprocessSpec, as_dense, matrix_from_bytes, matrix_to_bytes
from .errors import DataError, DegenerateComponentError
from .preprocess import apply_center_scale, invert_center_scale
from .stats import ColumnStats, column_stats

_MODEL_MAGIC = b"FPLM"
_MODEL_VERSION = 1

#: Relative threshold under which a deflated ``X'Y`` counts as exhausted.
_EXHAUSTION_RTOL = 1e-12
#: Entries smaller than this are skipped when fixing a weight vector's sign.
_SIGN_EPS = 1e-12
#: Convergence threshold shared by the iterative solver and power iteration.
_ITER_TOL = 1e-12
_NIPALS_MAX_ITER = 1000
_POWER_MAX_ITER = 10000


@dataclass(frozen=True)
class PlsModel:
    """A fitted PLS model with per-component coefficient slices.

    Attributes
    ----------
    spec : PreprocessSpec
        Centering/scaling toggles the model was fitted under.
    a_max : int
        Requested component count; the coefficient stack always has this
        depth.
    n_effective : int
        Components actually extracted before the cross product was
        exhausted (equals ``a_max`` in the regular case).
    weights_x : (k, a_max) array
        Component weight vectors (unit norm, first significant entry
        positive).
    loadings_x : (k, a_max) array
    loadings_y : (m, a_max) array
    rotations : (k, a_max) array
        Vectors mapping preprocessed predictors directly to scores.
    coef_stack : (a_max, k, m) array
        ``coef_stack[a-1]`` maps preprocessed predictors to preprocessed
        responses using the first ``a`` components.
    stats_x, stats_y : ColumnStats
        Frozen training column statistics applied by :func:`predict`.
    notes : tuple of str
        Human-readable events recorded during fitting (truncation,
        iteration caps).
    """

    spec: PreprocessSpec
    a_max: int
    n_effective: int
    weights_x: np.ndarray
    loadings_x: np.ndarray
    loadings_y: np.ndarray
    rotations: np.ndarray
    coef_stack: np.ndarray
    stats_x: ColumnStats
    stats_y: ColumnStats
    notes: tuple[str, ...] = ()

    @property
    def n_predictors(self) -> int:
        return int(self.weights_x.shape[0])

    @property
    def n_responses(self) -> int:
        return int(self.loadings_y.shape[0])

    def coef(self, n_components: int | None = None) -> np.ndarray:
        """Coefficient matrix for the given component count (default all)."""
        a = self.a_max if n_components is None else int(n_components)
        if not 1 <= a <= self.a_max:
            raise DataError(
                f"component count must be in 1..{self.a_max}, got {a}",
                n_components=a,
                a_max=self.a_max,
            )
        return self.coef_stack[a - 1]


def _fix_sign(vec: np.ndarray) -> float:
    """Sign making the first entry with magnitude above the threshold positive."""
    for v in vec:
        if abs(v) > _SIGN_EPS:
            return -1.0 if v < 0.0 else 1.0
    return 1.0


def _dominant_eigenvector(gram: np.ndarray) -> np.ndarray | None:
    """Dominant eigenvector of a small symmetric PSD matrix by power iteration.

    Starts from the all-ones direction; returns ``None`` if the matrix maps
    it (or a subsequent iterate) to numerical zero.
    """
    m = gram.shape[0]
    scale = float(np.abs(gram).max())
    if scale == 0.0:
        return None
    v = np.full(m, 1.0 / np.sqrt(m))
    for _ in range(_POWER_MAX_ITER):
        u = gram @ v
        norm = float(np.linalg.norm(u))
        if norm <= 1e-300 or norm <= 1e-30 * scale:
            return None
        u /= norm
        if float(np.linalg.norm(u - v)) < _ITER_TOL:
            return u
        v = u
    return v


def _weight_vector(xty: np.ndarray) -> np.ndarray | None:
    """Component weight vector from the current cross product, or ``None``
    when the cross product is numerically zero (perfect deflation)."""
    if xty.shape[1] == 1:
        w = xty[:, 0].copy()
    else:
        q = _dominant_eigenvector(xty.T @ xty)
        if q is None:
            return None
        w = xty @ q
    norm = float(np.linalg.norm(w))
    if norm <= 1e-300:
        return None
    w /= norm
    return w * _fix_sign(w)


def _prepare_fit_arrays(
    data: Dataset, spec: PreprocessSpec, on_zero_std: str
) -> tuple[np.ndarray, np.ndarray, ColumnStats, ColumnStats]:
    """Weighted-statistics preprocessing plus ``sqrt(w)`` row scaling.

    Returns arrays whose plain cross products equal the weighted cross
    products of the preprocessed data.
    """
    w = data.effective_weights()
    stats_x = column_stats(data.x, w, two_pass=True)
    stats_y = column_stats(data.y, w, two_pass=True)
    xp = apply_center_scale(data.x, stats_x, spec.center_x, spec.scale_x, on_zero_std)
    yp = apply_center_scale(data.y, stats_y, spec.center_y, spec.scale_y, on_zero_std)
    if data.weights is not None:
        sw = np.sqrt(w)[:, None]
        xp = xp * sw
        yp = yp * sw
    return xp, yp, stats_x, stats_y


def _validate_component_count(n_components: int, n_rows: int, n_predictors: int) -> int:
    a = int(n_components)
    bound = min(n_rows - 1, n_predictors)
    if not 1 <= a <= bound:
        raise DataError(
            f"component count must be in 1..min(rows-1, predictors) = 1..{bound}, got {a}",
            n_components=a,
            bound=bound,
        )
    return a


class _ComponentCollector:
    """Accumulates per-component vectors and assembles the final model."""

    def __init__(self, k: int, m: int, a_max: int) -> None:
        self.a_max = a_max
        self.weights_x = np.zeros((k, a_max))
        self.loadings_x = np.zeros((k, a_max))
        self.loadings_y = np.zeros((m, a_max))
        self.rotations = np.zeros((k, a_max))
        self.coef_stack = np.zeros((a_max, k, m))
        self.notes: list[str] = []
        self.n_effective = 0

    def orthogonalize(self, w: np.ndarray) -> np.ndarray:
        """Project the loading directions of earlier components out of ``w``."""
        i = self.n_effective
        if i == 0:
            return w.copy()
        return w - self.rotations[:, :i] @ (self.loadings_x[:, :i].T @ w)

    def push(self, w, r, p, q) -> None:
        i = self.n_effective
        self.weights_x[:, i] = w
        self.rotations[:, i] = r
        self.loadings_x[:, i] = p
        self.loadings_y[:, i] = q
        prev = self.coef_stack[i - 1] if i else 0.0
        self.coef_stack[i] = prev + np.outer(r, q)
        self.n_effective = i + 1

    def truncate(self) -> None:
        i = self.n_effective
        self.notes.append(
            f"cross product exhausted after {i} of {self.a_max} components; "
            "later coefficient slices repeat the last one"
        )
        for j in range(i, self.a_max):
            if i:
                self.coef_stack[j] = self.coef_stack[i - 1]

    def build(self, spec, stats_x, stats_y) -> PlsModel:
        for arr in (self.weights_x, self.loadings_x, self.loadings_y, self.rotations, self.coef_stack):
            arr.flags.writeable = False
        return PlsModel(
            spec=spec,
            a_max=self.a_max,
            n_effective=self.n_effective,
            weights_x=self.weights_x,
            loadings_x=self.loadings_x,
            loadings_y=self.loadings_y,
            rotations=self.rotations,
            coef_stack=self.coef_stack,
            stats_x=stats_x,
            stats_y=stats_y,
            notes=tuple(self.notes),
        )


def fit_ikpls1(
    data: Dataset,
    spec: PreprocessSpec = PreprocessSpec(),
    n_components: int = 1,
    on_zero_std: str = "error",
) -> PlsModel:
    """Improved kernel PLS, variant #1 (scores from the predictor rows).

    Keeps the preprocessed predictor block in memory to form scores, but
    deflates only the ``X'Y`` cross product.
    """
    a_max = _validate_component_count(n_components, data.n_rows, data.n_predictors)
    xp, yp, stats_x, stats_y = _prepare_fit_arrays(data, spec, on_zero_std)
    xty = xp.T @ yp
    exhaust_tol = _EXHAUSTION_RTOL * float(np.linalg.norm(xty))
    col = _ComponentCollector(xp.shape[1], yp.shape[1], a_max)
    for _ in range(a_max):
        if float(np.linalg.norm(xty)) <= exhaust_tol:
            col.truncate()
            break
        w = _weight_vector(xty)
        if w is None:
            col.truncate()
            break
        r = col.orthogonalize(w)
        t = xp @ r
        tt = float(t @ t)
        if not np.isfinite(tt) or tt <= 1e-300:
            raise DegenerateComponentError(
                f"component {col.n_effective + 1} has vanishing score energy",
                component=col.n_effective + 1,
            )
        p = xp.T @ t / tt
        q = xty.T @ r / tt
        xty = xty - np.outer(p, q) * tt
        col.push(w, r, p, q)
    return col.build(spec, stats_x, stats_y)


def fit_ikpls2(
    xtx: DenseMatrix | np.ndarray,
    xty: DenseMatrix | np.ndarray,
    stats_x: ColumnStats,
    stats_y: ColumnStats,
    spec: PreprocessSpec = PreprocessSpec(),
    n_components: int = 1,
    notes: tuple[str, ...] = (),
) -> PlsModel:
    """Improved kernel PLS, variant #2 (cross products only).

    ``xtx`` and ``xty`` must be the (weighted) cross products of the
    *already preprocessed* data; ``stats_x``/``stats_y`` are the raw
    training statistics frozen onto the model so that prediction can apply
    the same preprocessing. ``xtx`` must be symmetric; it is never deflated.
    """
    xtx = as_dense(xtx, "xtx").data
    xty_m = as_dense(xty, "xty").data.copy()
    k = xtx.shape[0]
    if xtx.shape[1] != k:
        raise DataError(f"xtx must be square, got {xtx.shape[0]}x{xtx.shape[1]}")
    if xty_m.shape[0] != k:
        raise DataError(
            f"xty has {xty_m.shape[0]} rows but xtx is {k}x{k}",
            xty_rows=xty_m.shape[0],
            k=k,
        )
    sym_err = float(np.abs(xtx - xtx.T).max())
    if sym_err > 1e-10 * max(1.0, float(np.abs(xtx).max())):
        raise DataError(f"xtx is not symmetric (max asymmetry {sym_err:.3e})")
    a_max = _validate_component_count(
        n_components, stats_x.nonzero_weight_count, k
    )
    exhaust_tol = _EXHAUSTION_RTOL * float(np.linalg.norm(xty_m))
    col = _ComponentCollector(k, xty_m.shape[1], a_max)
    for _ in range(a_max):
        if float(np.linalg.norm(xty_m)) <= exhaust_tol:
            col.truncate()
            break
        w = _weight_vector(xty_m)
        if w is None:
            col.truncate()
            break
        r = col.orthogonalize(w)
        xtx_r = xtx @ r
        tt = float(r @ xtx_r)
        if not np.isfinite(tt) or tt <= 1e-300:
            raise DegenerateComponentError(
                f"component {col.n_effective + 1} has vanishing score energy",
                component=col.n_effective + 1,
            )
        p = xtx_r / tt
        q = xty_m.T @ r / tt
        xty_m = xty_m - np.outer(p, q) * tt
        col.push(w, r, p, q)
    model = col.build(spec, stats_x, stats_y)
    if notes:
        model = replace(model, notes=tuple(notes) + model.notes)
    return model


def fit_ikpls2_data(
    data: Dataset,
    spec: PreprocessSpec = PreprocessSpec(),
    n_components: int = 1,
    on_zero_std: str = "error",
) -> PlsModel:
    """Convenience wrapper: build weighted cross products from rows, then
    run :func:`fit_ikpls2`."""
    _validate_component_count(n_components, data.n_rows, data.n_predictors)
    xp, yp, stats_x, stats_y = _prepare_fit_arrays(data, spec, on_zero_std)
    return fit_ikpls2(
        xp.T @ xp, xp.T @ yp, stats_x, stats_y, spec=spec, n_components=n_components
    )


def fit_nipals(
    data: Dataset,
    spec: PreprocessSpec = PreprocessSpec(),
    n_components: int = 1,
    on_zero_std: str = "error",
) -> PlsModel:
    """Iterative reference PLS (both blocks deflated every component).

    The inner loop alternates weight/score estimates until the weight
    vector moves less than ``1e-12`` between iterations (or 1000
    iterations, which is recorded as a note).
    """
    a_max = _validate_component_count(n_components, data.n_rows, data.n_predictors)
    xp, yp, stats_x, stats_y = _prepare_fit_arrays(data, spec, on_zero_std)
    x_res = xp.copy()
    y_res = yp.copy()
    exhaust_tol = _EXHAUSTION_RTOL * float(np.linalg.norm(xp.T @ yp))
    col = _ComponentCollector(xp.shape[1], yp.shape[1], a_max)
    for _ in range(a_max):
        if float(np.linalg.norm(x_res.T @ y_res)) <= exhaust_tol:
            col.truncate()
            break
        col_energy = (y_res * y_res).sum(axis=0)
        u = y_res[:, int(np.argmax(col_energy))].copy()
        w = None
        for iteration in range(_NIPALS_MAX_ITER):
            w_new = x_res.T @ u
            norm = float(np.linalg.norm(w_new))
            if norm <= 1e-300:
                break
            w_new /= norm
            w_new *= _fix_sign(w_new)
            t = x_res @ w_new
            tt = float(t @ t)
            if tt <= 1e-300:
                break
            q_dir = y_res.T @ t
            q_norm = float(np.linalg.norm(q_dir))
            if q_norm <= 1e-300:
                w = w_new
                break
            u = y_res @ (q_dir / q_norm)
            if w is not None and float(np.linalg.norm(w_new - w)) < _ITER_TOL:
                w = w_new
                break
            w = w_new
        else:
            col.notes.append(
                f"component {col.n_effective + 1}: inner iteration stopped at "
                f"{_NIPALS_MAX_ITER} iterations"
            )
        if w is None:
            col.truncate()
            break
        r = col.orthogonalize(w)
        t = x_res @ w
        tt = float(t @ t)
        if not np.isfinite(tt) or tt <= 1e-300:
            raise DegenerateComponentError(
                f"component {col.n_effective + 1} has vanishing score energy",
                component=col.n_effective + 1,
            )
        p = x_res.T @ t / tt
        q = y_res.T @ t / tt
        x_res = x_res - np.outer(t, p)
        y_res = y_res - np.outer(t, q)
        col.push(w, r, p, q)
    return col.build(spec, stats_x, stats_y)


_SOLVERS: dict[str, Callable] = {
    "nipals": fit_nipals,
    "ikpls1": fit_ikpls1,
    "ikpls2": fit_ikpls2_data,
}


def fit(
    data: Dataset,
    spec: PreprocessSpec = PreprocessSpec(),
    n_components: int = 1,
    algorithm: str = "ikpls1",
    on_zero_std: str = "error",
) -> PlsModel:
    """Fit with a named solver: ``nipals``, ``ikpls1``, or ``ikpls2``."""
    try:
        solver = _SOLVERS[algorithm]
    except KeyError:
        raise DataError(
            f"unknown algorithm {algorithm!r}; expected one of {sorted(_SOLVERS)}",
            algorithm=algorithm,
        ) from None
    return solver(data, spec, n_components, on_zero_std)


def predict(
    model: PlsModel, x: DenseMatrix | np.ndarray, n_components: int | None = None
) -> DenseMatrix:
    """Predict responses for new rows using frozen training statistics."""
    m = as_dense(x, "x")
    if m.cols != model.n_predictors:
        raise DataError(
            f"model expects {model.n_predictors} predictors, got {m.cols}",
            expected=model.n_predictors,
            cols=m.cols,
        )
    coef = model.coef(n_components)
    xp = apply_center_scale(m, model.stats_x, model.spec.center_x, model.spec.scale_x)
    yp = xp @ coef
    return DenseMatrix(
        invert_center_scale(yp, model.stats_y, model.spec.center_y, model.spec.scale_y)
    )


def predict_all(model: PlsModel, x: DenseMatrix | np.ndarray) -> np.ndarray:
    """Predictions for every component count at once.

    Returns an array of shape ``(a_max, rows, responses)`` whose slice
    ``a-1`` is bit-identical to ``predict(model, x, a)``: the input rows are
    preprocessed once and contracted with each coefficient slice by the same
    kernel ``predict`` uses.
    """
    m = as_dense(x, "x")
    if m.cols != model.n_predictors:
        raise DataError(
            f"model expects {model.n_predictors} predictors, got {m.cols}",
            expected=model.n_predictors,
            cols=m.cols,
        )
    xp = apply_center_scale(m, model.stats_x, model.spec.center_x, model.spec.scale_x)
    out = np.empty((model.a_max, m.rows, model.n_responses))
    for a in range(model.a_max):
        out[a] = invert_center_scale(
            xp @ model.coef_stack[a],
            model.stats_y,
            model.spec.center_y,
            model.spec.scale_y,
        )
    return out


def predict_class(
    model: PlsModel,
    x: DenseMatrix | np.ndarray,
    n_components: int | None = None,
    classes: tuple | None = None,
) -> np.ndarray:
    """Class predictions from a model fitted on coded responses.

    With multiple response columns (one indicator column per class) the
    predicted class is the column with the largest predicted value, ties
    resolved toward the lowest class index; ``classes`` defaults to
    ``(1, .., m)``. With a single response column the response is assumed
    two-level numeric coding, ``classes`` defaults to ``(-1, 1)``, and the
    threshold is the midpoint of the two codes (ties toward the first).
    """
    preds = predict(model, x, n_components).data
    m = preds.shape[1]
    if m >= 2:
        labels = tuple(range(1, m + 1)) if classes is None else tuple(classes)
        if len(labels) != m:
            raise DataError(
                f"{len(labels)} class labels for {m} response columns",
                labels=len(labels),
                cols=m,
            )
        idx = preds.argmax(axis=1)
        return np.array([labels[i] for i in idx])
    labels = (-1.0, 1.0) if classes is None else tuple(classes)
    if len(labels) != 2:
        raise DataError(
            f"single-column classification needs exactly 2 class labels, got {len(labels)}",
            labels=len(labels),
        )
    lo, hi = float(labels[0]), float(labels[1])
    midpoint = 0.5 * (lo + hi)
    return np.array([labels[1] if v > midpoint else labels[0] for v in preds[:, 0]])


def _pack_stats(stats: ColumnStats) -> bytes:
    parts = [
        matrix_to_bytes(DenseMatrix(stats.mean.reshape(1, -1))),
        matrix_to_bytes(DenseMatrix(stats.std.reshape(1, -1))),
        matrix_to_bytes(DenseMatrix(stats.col_sum.reshape(1, -1))),
        matrix_to_bytes(DenseMatrix(stats.col_sum_sq.reshape(1, -1))),
        struct.pack("<dQB", stats.weight_total, stats.nonzero_weight_count, int(stats.std_defined)),
    ]
    return b"".join(parts)


def _unpack_stats(blob: bytes, offset: int, path: str) -> tuple[ColumnStats, int]:
    vectors = []
    for _ in range(4):
        mat, offset = matrix_from_bytes(blob, offset, path)
        vec = mat.data.reshape(-1).copy()
        vec.flags.writeable = False
        vectors.append(vec)
    if len(blob) - offset < 17:
        raise DataError(f"{path}: truncated statistics block", path=path)
    weight_total, nonzero, defined = struct.unpack_from("<dQB", blob, offset)
    stats = ColumnStats(
        mean=vectors[0],
        std=vectors[1],
        col_sum=vectors[2],
        col_sum_sq=vectors[3],
        weight_total=float(weight_total),
        nonzero_weight_count=int(nonzero),
        std_defined=bool(defined),
    )
    return stats, offset + 17


def model_to_bytes(model: PlsModel) -> bytes:
    """Serialize a model to the versioned ``FPLM`` container."""
    parts = [
        _MODEL_MAGIC,
        struct.pack(
            "<BBII", _MODEL_VERSION, model.spec.bits, model.a_max, model.n_effective
        ),
        matrix_to_bytes(DenseMatrix(model.weights_x)),
        matrix_to_bytes(DenseMatrix(model.loadings_x)),
        matrix_to_bytes(DenseMatrix(model.loadings_y)),
        matrix_to_bytes(DenseMatrix(model.rotations)),
    ]
    for a in range(model.a_max):
        parts.append(matrix_to_bytes(DenseMatrix(model.coef_stack[a])))
    parts.append(_pack_stats(model.stats_x))
    parts.append(_pack_stats(model.stats_y))
    notes_blob = b"".join(
        struct.pack("<I", len(enc)) + enc
        for enc in (note.encode("utf-8") for note in model.notes)
    )
    parts.append(struct.pack("<I", len(model.notes)) + notes_blob)
    return b"".join(parts)


def model_from_bytes(blob: bytes, path: str = "<bytes>") -> PlsModel:
    """Deserialize a model written by :func:`model_to_bytes`."""
    if len(blob) < 14 or blob[:4] != _MODEL_MAGIC:
        raise DataError(f"{path}: not a model file (bad magic)", path=path)
    version, spec_bits, a_max, n_effective = struct.unpack_from("<BBII", blob, 4)
    if version != _MODEL_VERSION:
        raise DataError(
            f"{path}: unsupported model format version {version}", path=path, version=version
        )
    if a_max < 1 or n_effective > a_max:
        raise DataError(
            f"{path}: inconsistent component counts (a_max={a_max}, effective={n_effective})",
            path=path,
        )
    spec = PreprocessSpec.from_bits(spec_bits)
    offset = 14
    weights_x, offset = matrix_from_bytes(blob, offset, path)
    if weights_x.cols != a_max:
        raise DataError(
            f"{path}: weight block has {weights_x.cols} columns for a_max={a_max}", path=path
        )
    loadings_x, offset = matrix_from_bytes(blob, offset, path)
    loadings_y, offset = matrix_from_bytes(blob, offset, path)
    rotations, offset = matrix_from_bytes(blob, offset, path)
    k = weights_x.rows
    m = loadings_y.rows
    slices = []
    for _ in range(a_max):
        mat, offset = matrix_from_bytes(blob, offset, path)
        if (mat.rows, mat.cols) != (k, m):
            raise DataError(f"{path}: coefficient slice has wrong shape", path=path)
        slices.append(mat.data)
    coef_stack = np.stack(slices) if slices else np.zeros((0, k, m))
    stats_x, offset = _unpack_stats(blob, offset, path)
    stats_y, offset = _unpack_stats(blob, offset, path)
    if len(blob) - offset < 4:
        raise DataError(f"{path}: truncated notes block", path=path)
    (n_notes,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    notes = []
    for _ in range(n_notes):
        if len(blob) - offset < 4:
            raise DataError(f"{path}: truncated notes block", path=path)
        (length,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if len(blob) - offset < length:
            raise DataError(f"{path}: truncated notes block", path=path)
        notes.append(blob[offset : offset + length].decode("utf-8"))
        offset += length
    if offset != len(blob):
        raise DataError(f"{path}: trailing bytes after model payload", path=path)
    coef_stack.flags.writeable = False
    return PlsModel(
        spec=spec,
        a_max=int(a_max),
        n_effective=int(n_effective),
        weights_x=weights_x.data,
        loadings_x=loadings_x.data,
        loadings_y=loadings_y.data,
        rotations=rotations.data,
        coef_stack=coef_stack,
        stats_x=stats_x,
        stats_y=stats_y,
        notes=tuple(notes),
    )


def save_model(model: PlsModel, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path: str) -> PlsModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read(), path=path)
