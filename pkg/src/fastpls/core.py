"""Core data model: dense matrices, datasets, fold layouts, and disk formats.

Everything downstream (statistics, preprocessing, solvers, cross-validation)
consumes the small set of carriers defined here:

* :class:`DenseMatrix` — an immutable, row-major, 64-bit float matrix with
  validated dimensions and finite entries.
* :class:`Dataset` — a predictor/response pair with optional per-row weights.
* :class:`FoldSpec` — a validated assignment of rows to cross-validation
  folds ``0..P-1``.
* :class:`PreprocessSpec` — the four centering/scaling toggles that index
  every supported preprocessing combination.

Two disk formats are provided: a strict CSV reader/writer (comma separator,
``.`` decimal point, optional single header line) and a binary container
(magic ``FPLS``, version byte, little-endian ``u64`` dimensions, row-major
``f64`` payload) whose round trips are bit-exact.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError

_BINARY_MAGIC = b"FPLS"
_BINARY_VERSION = 1


@dataclass(frozen=True)
class DenseMatrix:
    """Immutable row-major matrix of 64-bit floats.

    Parameters
    ----------
    data : array-like of shape (rows, cols)
        Matrix content. Copied into a C-contiguous float64 buffer and
        frozen; both dimensions must be at least 1 and every entry finite.
    column_names : tuple of str, optional
        Names carried through from a CSV header, if any.
    """

    data: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise DataError(
                f"matrix must be 2-dimensional, got {arr.ndim} dimension(s)",
                ndim=arr.ndim,
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(
                f"matrix dimensions must be at least 1x1, got {arr.shape[0]}x{arr.shape[1]}",
                rows=arr.shape[0],
                cols=arr.shape[1],
            )
        bad = ~np.isfinite(arr)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise DataError(
                f"matrix entry at row {r + 1}, column {c + 1} is not finite",
                row=int(r) + 1,
                col=int(c) + 1,
            )
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        if self.column_names is not None:
            names = tuple(str(n) for n in self.column_names)
            if len(names) != arr.shape[1]:
                raise DataError(
                    f"{len(names)} column names for {arr.shape[1]} columns",
                    names=len(names),
                    cols=arr.shape[1],
                )
            object.__setattr__(self, "column_names", names)

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def cols(self) -> int:
        return int(self.data.shape[1])

    @property
    def values(self) -> np.ndarray:
        """Flat row-major view of the entries (read-only)."""
        return self.data.reshape(-1)


def as_dense(x: DenseMatrix | np.ndarray | Sequence, name: str = "matrix") -> DenseMatrix:
    """Coerce array-like input to a validated :class:`DenseMatrix`."""
    if isinstance(x, DenseMatrix):
        return x
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    try:
        return DenseMatrix(arr)
    except DataError as exc:
        raise DataError(f"{name}: {exc.message}", **exc.details) from None


@dataclass(frozen=True)
class Dataset:
    """A predictor block, a response block, and optional row weights.

    Parameters
    ----------
    x : DenseMatrix or array-like of shape (n, k)
        Predictors, one row per sample.
    y : DenseMatrix or array-like of shape (n, m)
        Responses, one row per sample; must have the same row count as ``x``.
    weights : array-like of shape (n,), optional
        Non-negative finite per-row weights; at least one must be positive.
        ``None`` means every row has unit weight.
    """

    x: DenseMatrix
    y: DenseMatrix
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", as_dense(self.x, "x"))
        object.__setattr__(self, "y", as_dense(self.y, "y"))
        if self.x.rows != self.y.rows:
            raise DataError(
                f"x has {self.x.rows} rows but y has {self.y.rows}",
                x_rows=self.x.rows,
                y_rows=self.y.rows,
            )
        if self.weights is not None:
            w = np.array(self.weights, dtype=np.float64).reshape(-1)
            if w.shape[0] != self.x.rows:
                raise DataError(
                    f"weights has length {w.shape[0]} but data has {self.x.rows} rows",
                    weights=w.shape[0],
                    rows=self.x.rows,
                )
            if not np.isfinite(w).all():
                i = int(np.argwhere(~np.isfinite(w))[0][0])
                raise DataError(f"weight at row {i + 1} is not finite", row=i + 1)
            if (w < 0).any():
                i = int(np.argwhere(w < 0)[0][0])
                raise DataError(
                    f"weight at row {i + 1} is negative", row=i + 1, value=float(w[i])
                )
            if not (w > 0).any():
                raise DataError("all row weights are zero")
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)

    @property
    def n_rows(self) -> int:
        return self.x.rows

    @property
    def n_predictors(self) -> int:
        return self.x.cols

    @property
    def n_responses(self) -> int:
        return self.y.cols

    def effective_weights(self) -> np.ndarray:
        """Row weights as an array, substituting ones when absent."""
        if self.weights is None:
            return np.ones(self.n_rows, dtype=np.float64)
        return self.weights


@dataclass(frozen=True)
class FoldSpec:
    """Validated assignment of rows to cross-validation folds.

    Parameters
    ----------
    assignment : array-like of shape (n,)
        Integer fold id per row, each in ``0..n_folds-1``.
    n_folds : int
        Number of folds ``P``; at least 2, and every fold id must occur at
        least once (so each fold's training partition is non-empty).
    """

    assignment: np.ndarray
    n_folds: int

    def __post_init__(self) -> None:
        arr = np.array(self.assignment, dtype=np.int64).reshape(-1)
        p = int(self.n_folds)
        if p < 2:
            raise DataError(f"n_folds must be at least 2, got {p}", n_folds=p)
        if arr.shape[0] < p:
            raise DataError(
                f"{arr.shape[0]} rows cannot populate {p} folds",
                rows=arr.shape[0],
                n_folds=p,
            )
        if (arr < 0).any() or (arr >= p).any():
            i = int(np.argwhere((arr < 0) | (arr >= p))[0][0])
            raise DataError(
                f"fold id {arr[i]} at row {i + 1} outside 0..{p - 1}",
                row=i + 1,
                fold=int(arr[i]),
            )
        present = np.bincount(arr, minlength=p)
        if (present == 0).any():
            missing = int(np.argwhere(present == 0)[0][0])
            raise DataError(f"fold {missing} has no rows", fold=missing)
        arr.flags.writeable = False
        object.__setattr__(self, "assignment", arr)
        object.__setattr__(self, "n_folds", p)

    @property
    def n_rows(self) -> int:
        return int(self.assignment.shape[0])

    def val_indices(self, fold: int) -> np.ndarray:
        """Ascending row indices validated by ``fold``."""
        self._check_fold(fold)
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        """Ascending row indices trained on when ``fold`` is held out."""
        self._check_fold(fold)
        return np.flatnonzero(self.assignment != fold)

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_folds)

    def _check_fold(self, fold: int) -> None:
        if not 0 <= fold < self.n_folds:
            raise DataError(
                f"fold {fold} outside 0..{self.n_folds - 1}", fold=fold
            )


def make_folds(
    n_rows: int,
    n_folds: int,
    seed: int,
    labels: Sequence | np.ndarray | None = None,
) -> FoldSpec:
    """Deterministically assign ``n_rows`` rows to ``n_folds`` folds.

    Rows are shuffled with a seeded generator and dealt round-robin, so fold
    sizes differ by at most one. When ``labels`` is given the deal is
    stratified: each class's rows (taken in ascending row order, then
    shuffled with the same generator) are dealt consecutively while the fold
    cursor carries over between classes, so per-class counts also differ by
    at most one across folds and overall balance is preserved. Classes with
    fewer members than folds are still distributed; some folds simply
    receive none of that class.

    The result is a pure function of ``(n_rows, n_folds, seed, labels)``.
    """
    if not 2 <= n_folds <= n_rows:
        raise DataError(
            f"n_folds must satisfy 2 <= n_folds <= n_rows, got n_folds={n_folds} for {n_rows} rows",
            n_folds=n_folds,
            rows=n_rows,
        )
    rng = np.random.default_rng(seed)
    assignment = np.empty(n_rows, dtype=np.int64)
    cursor = 0
    if labels is None:
        order = rng.permutation(n_rows)
        for i, row in enumerate(order):
            assignment[row] = i % n_folds
    else:
        labels_arr = np.asarray(labels)
        if labels_arr.shape[0] != n_rows:
            raise DataError(
                f"labels has length {labels_arr.shape[0]} but data has {n_rows} rows",
                labels=labels_arr.shape[0],
                rows=n_rows,
            )
        for cls in np.unique(labels_arr):
            cls_rows = np.flatnonzero(labels_arr == cls)
            cls_rows = cls_rows[rng.permutation(cls_rows.shape[0])]
            for row in cls_rows:
                assignment[row] = cursor % n_folds
                cursor += 1
    return FoldSpec(assignment=assignment, n_folds=n_folds)


@dataclass(frozen=True)
class PreprocessSpec:
    """The four centering/scaling toggles applied before fitting.

    ``center_x``/``center_y`` subtract the (weighted) training column mean;
    ``scale_x``/``scale_y`` divide by the (weighted) training column standard
    deviation. All 16 on/off combinations are supported everywhere.
    """

    center_x: bool = False
    center_y: bool = False
    scale_x: bool = False
    scale_y: bool = False

    _FLAG_ORDER = ("cx", "cy", "sx", "sy")

    @classmethod
    def from_flags(cls, flags: str) -> "PreprocessSpec":
        """Parse a comma set over ``{cx, cy, sx, sy}``.

        The empty string and ``"none"`` mean all toggles off. Unknown or
        duplicate tokens are rejected.
        """
        text = flags.strip().lower()
        if text in ("", "none"):
            return cls()
        tokens = [t.strip() for t in text.split(",")]
        seen: set[str] = set()
        for tok in tokens:
            if tok not in cls._FLAG_ORDER:
                raise DataError(
                    f"unknown preprocessing flag {tok!r}; expected a comma set over cx,cy,sx,sy",
                    flag=tok,
                )
            if tok in seen:
                raise DataError(f"duplicate preprocessing flag {tok!r}", flag=tok)
            seen.add(tok)
        return cls(
            center_x="cx" in seen,
            center_y="cy" in seen,
            scale_x="sx" in seen,
            scale_y="sy" in seen,
        )

    def to_flags(self) -> str:
        """Inverse of :meth:`from_flags`; ``"none"`` when all toggles are off."""
        parts = [
            tok
            for tok, on in zip(
                self._FLAG_ORDER,
                (self.center_x, self.center_y, self.scale_x, self.scale_y),
            )
            if on
        ]
        return ",".join(parts) if parts else "none"

    @property
    def bits(self) -> int:
        """Bitfield encoding (cx=1, cy=2, sx=4, sy=8) used by model files."""
        return (
            int(self.center_x)
            | int(self.center_y) << 1
            | int(self.scale_x) << 2
            | int(self.scale_y) << 3
        )

    @classmethod
    def from_bits(cls, bits: int) -> "PreprocessSpec":
        if not 0 <= bits < 16:
            raise DataError(f"preprocessing bitfield {bits} outside 0..15", bits=bits)
        return cls(
            center_x=bool(bits & 1),
            center_y=bool(bits & 2),
            scale_x=bool(bits & 4),
            scale_y=bool(bits & 8),
        )

    @classmethod
    def all_combinations(cls) -> Iterator["PreprocessSpec"]:
        """All 16 toggle combinations, in bitfield order."""
        for bits in range(16):
            yield cls.from_bits(bits)


def load_csv(path: str, has_header: bool = False) -> DenseMatrix:
    """Read a numeric CSV file into a :class:`DenseMatrix`.

    Expects comma separators, ``.`` decimal points, UTF-8 text, and a
    rectangular layout; ``has_header`` consumes one leading name line.
    Ragged rows, unparsable cells, and non-finite values are rejected with
    1-based line/column locations.
    """
    rows: list[list[float]] = []
    names: tuple[str, ...] | None = None
    width: int | None = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, record in enumerate(reader, start=1):
            if not record:
                continue
            if has_header and names is None and not rows:
                names = tuple(cell.strip() for cell in record)
                width = len(names)
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise DataError(
                    f"line {line_no} has {len(record)} fields, expected {width}",
                    line=line_no,
                    fields=len(record),
                    expected=width,
                )
            parsed = []
            for col_no, cell in enumerate(record, start=1):
                text = cell.strip()
                try:
                    value = float(text)
                except ValueError:
                    raise DataError(
                        f"cannot parse {text!r} at line {line_no}, column {col_no}",
                        line=line_no,
                        col=col_no,
                    ) from None
                if not math.isfinite(value):
                    raise DataError(
                        f"non-finite value {text!r} at line {line_no}, column {col_no}",
                        line=line_no,
                        col=col_no,
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows", path=path)
    return DenseMatrix(np.array(rows, dtype=np.float64), column_names=names)


def save_csv(matrix: DenseMatrix | np.ndarray, path: str, header: bool = True) -> None:
    """Write a matrix as CSV; emits the header line only if names exist."""
    m = as_dense(matrix)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if header and m.column_names is not None:
            writer.writerow(m.column_names)
        for row in m.data:
            writer.writerow([repr(float(v)) for v in row])


def save_binary(matrix: DenseMatrix | np.ndarray, path: str) -> None:
    """Write the binary matrix container (bit-exact round trip)."""
    m = as_dense(matrix)
    with open(path, "wb") as fh:
        fh.write(matrix_to_bytes(m))


def load_binary(path: str) -> DenseMatrix:
    """Read a matrix written by :func:`save_binary`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    matrix, consumed = matrix_from_bytes(blob, path=path)
    if consumed != len(blob):
        raise DataError(
            f"{path}: {len(blob) - consumed} trailing bytes after matrix payload",
            path=path,
            trailing=len(blob) - consumed,
        )
    return matrix


def matrix_to_bytes(matrix: DenseMatrix) -> bytes:
    """Serialize one matrix block: magic, version, u64 dims, f64 payload."""
    header = _BINARY_MAGIC + struct.pack(
        "<BQQ", _BINARY_VERSION, matrix.rows, matrix.cols
    )
    return header + matrix.data.astype("<f8", copy=False).tobytes(order="C")


def matrix_from_bytes(blob: bytes, offset: int = 0, path: str = "<bytes>") -> tuple[DenseMatrix, int]:
    """Deserialize one matrix block starting at ``offset``.

    Returns the matrix and the offset one past its payload.
    """
    head_len = len(_BINARY_MAGIC) + 1 + 8 + 8
    if len(blob) - offset < head_len:
        raise DataError(f"{path}: truncated matrix header", path=path)
    magic = blob[offset : offset + 4]
    if magic != _BINARY_MAGIC:
        raise DataError(
            f"{path}: bad magic {magic!r}, expected {_BINARY_MAGIC!r}", path=path
        )
    version, rows, cols = struct.unpack_from("<BQQ", blob, offset + 4)
    if version != _BINARY_VERSION:
        raise DataError(
            f"{path}: unsupported matrix format version {version}",
            path=path,
            version=version,
        )
    if rows < 1 or cols < 1:
        raise DataError(
            f"{path}: invalid dimensions {rows}x{cols}", path=path, rows=rows, cols=cols
        )
    payload = rows * cols * 8
    start = offset + head_len
    if len(blob) - start < payload:
        raise DataError(
            f"{path}: payload truncated ({len(blob) - start} of {payload} bytes)",
            path=path,
        )
    data = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=start)
    matrix = DenseMatrix(data.reshape(rows, cols))
    return matrix, start + payload
