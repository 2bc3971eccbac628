"""Command line front end.

Every subcommand emits a JSON report whose ``config`` block echoes the full
resolved run configuration plus the library and artifact-format versions, so
a run can be reproduced from its own output. Wall-clock measurements are
confined to a single ``runtime`` field (omit it entirely with
``--no-runtime``); everything else in a report is a deterministic function
of the inputs, the flags, and the seed.

Errors from the library are printed to stderr as one JSON object
(``{"error": {"type", "message", "details"}}``) and mapped to stable exit
codes: 0 success, 2 usage, 3 data errors, 4 numeric errors.

Matrix inputs may be CSV files or the binary matrix container; the format
is sniffed from the leading magic bytes.
"""

from __future__ import annotations

import functools
import hashlib
import json
import os
import sys
import time
import tracemalloc
from pathlib import Path

import click
import numpy as np

from . import __version__
from .core import (
    Dataset,
    DenseMatrix,
    FoldSpec,
    PreprocessSpec,
    load_binary,
    load_csv,
    make_folds,
    save_binary,
    save_csv,
)
from .crossval import METRIC_NAMES, cross_validate
from .cvmatrix import (
    naive_training_products,
    precompute,
    stream_training_products,
    training_products,
)
from .errors import DataError, FastplsError, NumericError
from .pls import fit, load_model, predict, save_model
from .preprocess import Pipeline, apply_row_steps, parse_pipeline
from .stats import class_weights, column_stats

MATRIX_FORMAT_VERSION = 1
MODEL_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1

_EXIT_DATA = 3
_EXIT_NUMERIC = 4


def structured_errors(fn):
    """Map library errors to error JSON on stderr plus a stable exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NumericError as exc:
            click.echo(json.dumps({"error": exc.to_dict()}, sort_keys=True), err=True)
            sys.exit(_EXIT_NUMERIC)
        except DataError as exc:
            click.echo(json.dumps({"error": exc.to_dict()}, sort_keys=True), err=True)
            sys.exit(_EXIT_DATA)
        except FastplsError as exc:  # pragma: no cover - safety net
            click.echo(json.dumps({"error": exc.to_dict()}, sort_keys=True), err=True)
            sys.exit(_EXIT_DATA)

    return wrapper


def _load_matrix(path: str, has_header: bool) -> DenseMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"FPLS":
        return load_binary(path)
    return load_csv(path, has_header=has_header)


def _resolve_spec(pipeline: Pipeline, flags: str) -> PreprocessSpec:
    """Merge the pipeline's flag tokens with ``--flags``.

    Exactly one of the two may carry centering/scaling toggles; stating them
    in both places is ambiguous and refused as a usage error.
    """
    from_option = PreprocessSpec.from_flags(flags)
    pipeline_has = pipeline.spec.bits != 0
    option_has = from_option.bits != 0
    if pipeline_has and option_has:
        raise click.UsageError(
            "centering/scaling was given both in --pipeline and in --flags; "
            "state it in one place only"
        )
    return pipeline.spec if pipeline_has else from_option


def _labels_from_y(y: DenseMatrix) -> np.ndarray:
    """Class labels implied by the response coding (two-level column or
    per-class indicator columns)."""
    data = y.data
    if data.shape[1] == 1:
        return data[:, 0]
    return 1 + data.argmax(axis=1)


def _resolve_weights(source: str, y: DenseMatrix, has_header: bool):
    """Weight vector and a manifest description for a ``--weights`` value."""
    if source == "none":
        return None, "none"
    if source == "balanced-classes":
        labels = _labels_from_y(y)
        return class_weights(labels).per_row(labels), "balanced-classes"
    if source.startswith("column:"):
        path = source[len("column:") :]
        matrix = _load_matrix(path, has_header)
        if matrix.cols != 1:
            raise DataError(
                "a weight file must contain exactly one column",
                path=path,
                cols=matrix.cols,
            )
        return matrix.data[:, 0].copy(), source
    raise click.UsageError(
        f"--weights must be 'none', 'balanced-classes', or 'column:<path>'; got {source!r}"
    )


def _resolve_threads(option: int | None) -> int:
    if option is not None:
        value = option
    else:
        env = os.environ.get("FASTPLS_THREADS", "").strip()
        if env:
            try:
                value = int(env)
            except ValueError:
                raise click.UsageError(
                    f"FASTPLS_THREADS must be an integer, got {env!r}"
                ) from None
        else:
            value = os.cpu_count() or 1
    if value < 1:
        raise click.UsageError("thread count must be at least 1")
    return value


def _resolve_folds(
    n_rows: int,
    n_folds: int | None,
    seed: int,
    labels,
    fold_file: str | None,
    has_header: bool,
    stratified: bool = False,
) -> FoldSpec:
    """Fold assignment from either ``--folds``/``--seed`` or ``--fold-file``.

    A fold file is a one-column matrix (CSV or binary) of integer fold ids,
    one per data row, numbered ``0..P-1``. Explicit assignments make the
    shuffle seed irrelevant and cannot be combined with ``--folds`` or
    ``--stratified``.
    """
    if fold_file is None:
        if n_folds is None:
            raise click.UsageError("one of --folds or --fold-file is required")
        return make_folds(n_rows, n_folds, seed=seed, labels=labels)
    if n_folds is not None:
        raise click.UsageError("give either --folds or --fold-file, not both")
    if stratified:
        raise click.UsageError("--stratified cannot be combined with --fold-file")
    matrix = _load_matrix(fold_file, has_header)
    if matrix.cols != 1:
        raise DataError(
            "a fold file must contain exactly one column",
            path=fold_file,
            cols=matrix.cols,
        )
    column = matrix.data[:, 0]
    ids = np.rint(column).astype(np.int64)
    if not np.array_equal(ids.astype(np.float64), column):
        raise DataError("fold ids must be integers", path=fold_file)
    if ids.shape[0] != n_rows:
        raise DataError(
            f"fold file has {ids.shape[0]} rows but the data has {n_rows}",
            path=fold_file,
            rows=ids.shape[0],
            expected=n_rows,
        )
    if ids.min() < 0:
        raise DataError("fold ids must be non-negative", path=fold_file)
    return FoldSpec(assignment=ids, n_folds=int(ids.max()) + 1)


def _manifest(command: str, **params) -> dict:
    manifest = {
        "command": command,
        "version": __version__,
        "matrix_format_version": MATRIX_FORMAT_VERSION,
        "model_format_version": MODEL_FORMAT_VERSION,
        "report_format_version": REPORT_FORMAT_VERSION,
    }
    manifest.update(params)
    return manifest


def _write_json(payload: dict, destination: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if destination == "-":
        click.echo(text, nl=False)
    else:
        Path(destination).write_text(text)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_xy(x_path, y_path, pipeline_text, flags, weights_source, has_header):
    """Shared input assembly: load, row-preprocess X, resolve spec/weights."""
    x = _load_matrix(x_path, has_header)
    y = _load_matrix(y_path, has_header)
    pipeline = parse_pipeline(pipeline_text)
    spec = _resolve_spec(pipeline, flags)
    x = apply_row_steps(x, pipeline)
    weights, weight_desc = _resolve_weights(weights_source, y, has_header)
    data = Dataset(x=x, y=y, weights=weights)
    return data, spec, weight_desc


@click.group()
def main() -> None:
    """Fast partial least squares: fitting, prediction, cross-validation."""


@main.command("version")
def version_cmd() -> None:
    """Print the library and artifact-format versions as JSON."""
    _write_json(
        {
            "name": "fastpls",
            "version": __version__,
            "matrix_format_version": MATRIX_FORMAT_VERSION,
            "model_format_version": MODEL_FORMAT_VERSION,
            "report_format_version": REPORT_FORMAT_VERSION,
        },
        "-",
    )


_shared_input_options = [
    click.option("--x", "x_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Predictor matrix (CSV or binary)."),
    click.option("--y", "y_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Response matrix (CSV or binary)."),
    click.option("--weights", "weights_source", default="none", show_default=True, help="'none', 'balanced-classes', or 'column:<path>'."),
    click.option("--flags", default="none", show_default=True, help="Comma set over {cx,cy,sx,sy}: centering/scaling toggles."),
    click.option("--pipeline", "pipeline_text", default="", help="Row preprocessing pipeline, e.g. 'snv|savgol:w=7,p=2,d=2'."),
    click.option("--csv-header/--no-csv-header", "has_header", default=False, show_default=True, help="Whether CSV inputs carry a header row."),
    click.option("--on-zero-std", type=click.Choice(["error", "unit"]), default="error", show_default=True, help="Zero-variance column handling under scaling."),
]


def _with_options(options):
    def decorate(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return decorate


@main.command("fit")
@_with_options(_shared_input_options)
@click.option("--amax", required=True, type=int, help="Number of components.")
@click.option("--algorithm", type=click.Choice(["nipals", "ikpls1", "ikpls2"]), default="ikpls1", show_default=True)
@click.option("--model-out", default="model.fplm", show_default=True, type=click.Path(dir_okay=False))
@click.option("--report-out", default="-", show_default=True, help="Report path or '-' for stdout.")
@click.option("--runtime/--no-runtime", "include_runtime", default=True, show_default=True, help="Include wall-clock timings in the report.")
@structured_errors
def fit_cmd(x_path, y_path, weights_source, flags, pipeline_text, has_header, on_zero_std, amax, algorithm, model_out, report_out, include_runtime) -> None:
    """Fit a model and write it to a binary model file plus a JSON report."""
    t0 = time.perf_counter()
    data, spec, weight_desc = _load_xy(
        x_path, y_path, pipeline_text, flags, weights_source, has_header
    )
    model = fit(data, spec, amax, algorithm=algorithm, on_zero_std=on_zero_std)
    if pipeline_text.strip():
        import dataclasses

        model = dataclasses.replace(
            model, notes=model.notes + (f"pipeline:{pipeline_text.strip()}",)
        )
    save_model(model, model_out)
    report = {
        "config": _manifest(
            "fit",
            x=x_path,
            y=y_path,
            weights=weight_desc,
            flags=spec.to_flags(),
            pipeline=pipeline_text,
            amax=amax,
            algorithm=algorithm,
            on_zero_std=on_zero_std,
            model_out=model_out,
        ),
        "rows": data.n_rows,
        "predictors": data.n_predictors,
        "responses": data.n_responses,
        "a_max": model.a_max,
        "n_effective": model.n_effective,
        "notes": list(model.notes),
        "model_sha256": _sha256(Path(model_out)),
    }
    if include_runtime:
        report["runtime"] = {"total_s": time.perf_counter() - t0}
    _write_json(report, report_out)


@main.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--x", "x_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--components", type=int, default=None, help="Component count (default: the model's maximum).")
@click.option("--pipeline", "pipeline_text", default=None, help="Row preprocessing override; defaults to the pipeline recorded at fit time.")
@click.option("--csv-header/--no-csv-header", "has_header", default=False, show_default=True)
@click.option("--out", "out_path", default="predictions.csv", show_default=True, type=click.Path(dir_okay=False))
@click.option("--report-out", default=None, help="Optional JSON report path or '-'.")
@click.option("--runtime/--no-runtime", "include_runtime", default=True, show_default=True)
@structured_errors
def predict_cmd(model_path, x_path, components, pipeline_text, has_header, out_path, report_out, include_runtime) -> None:
    """Predict responses for new rows with a saved model."""
    t0 = time.perf_counter()
    model = load_model(model_path)
    x = _load_matrix(x_path, has_header)
    if pipeline_text is None:
        recorded = [n for n in model.notes if n.startswith("pipeline:")]
        pipeline_text = recorded[0][len("pipeline:") :] if recorded else ""
    pipeline = parse_pipeline(pipeline_text)
    x = apply_row_steps(x, pipeline)
    preds = predict(model, x, components)
    save_csv(preds, out_path, header=False)
    if report_out is not None:
        report = {
            "config": _manifest(
                "predict",
                model=model_path,
                x=x_path,
                components=components,
                pipeline=pipeline_text,
                out=out_path,
            ),
            "rows": preds.rows,
            "responses": preds.cols,
            "components_used": components if components is not None else model.a_max,
            "predictions_sha256": _sha256(Path(out_path)),
        }
        if include_runtime:
            report["runtime"] = {"total_s": time.perf_counter() - t0}
        _write_json(report, report_out)


@main.command("cv")
@_with_options(_shared_input_options)
@click.option("--folds", "n_folds", default=None, type=int, help="Number of folds P (alternative: --fold-file).")
@click.option("--fold-file", default=None, type=click.Path(exists=True, dir_okay=False), help="One-column matrix of explicit fold ids 0..P-1, one per row.")
@click.option("--amax", required=True, type=int)
@click.option("--metric", type=click.Choice(list(METRIC_NAMES)), default="rmse", show_default=True)
@click.option("--stratified/--no-stratified", default=False, show_default=True, help="Stratify folds by the response-coded class.")
@click.option("--seed", type=int, default=0, show_default=True, help="Fold-shuffle seed.")
@click.option("--threads", type=int, default=None, help="Worker threads (default: FASTPLS_THREADS or machine parallelism).")
@click.option("--report-out", default="-", show_default=True)
@click.option("--model-out", default=None, type=click.Path(dir_okay=False), help="Optional path for the refitted final model.")
@click.option("--runtime/--no-runtime", "include_runtime", default=True, show_default=True)
@structured_errors
def cv_cmd(x_path, y_path, weights_source, flags, pipeline_text, has_header, on_zero_std, n_folds, fold_file, amax, metric, stratified, seed, threads, report_out, model_out, include_runtime) -> None:
    """Cross-validate, select the component count, and refit on all rows."""
    data, spec, weight_desc = _load_xy(
        x_path, y_path, pipeline_text, flags, weights_source, has_header
    )
    n_threads = _resolve_threads(threads)
    labels = _labels_from_y(data.y) if stratified else None
    folds = _resolve_folds(
        data.n_rows, n_folds, seed, labels, fold_file, has_header, stratified
    )
    report = cross_validate(
        data,
        folds,
        spec,
        a_max=amax,
        metric=metric,
        on_zero_std=on_zero_std,
        n_threads=n_threads,
    )
    payload = {
        "config": _manifest(
            "cv",
            x=x_path,
            y=y_path,
            weights=weight_desc,
            flags=spec.to_flags(),
            pipeline=pipeline_text,
            folds=folds.n_folds,
            fold_file=fold_file,
            amax=amax,
            metric=metric,
            stratified=stratified,
            seed=seed,
            on_zero_std=on_zero_std,
        ),
        **report.to_dict(include_runtime=include_runtime),
    }
    if model_out is not None:
        if pipeline_text.strip():
            import dataclasses

            final = dataclasses.replace(
                report.final_model,
                notes=report.final_model.notes + (f"pipeline:{pipeline_text.strip()}",),
            )
        else:
            final = report.final_model
        save_model(final, model_out)
        payload["model_sha256"] = _sha256(Path(model_out))
    _write_json(payload, report_out)


@main.command("cvmatrix")
@_with_options(_shared_input_options)
@click.option("--folds", "n_folds", default=None, type=int, help="Number of folds P (alternative: --fold-file).")
@click.option("--fold-file", default=None, type=click.Path(exists=True, dir_okay=False), help="One-column matrix of explicit fold ids 0..P-1, one per row.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--streaming/--retained", default=False, show_default=True, help="Streaming consumes fold contributions one at a time in O(K(K+M)) extra space.")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@structured_errors
def cvmatrix_cmd(x_path, y_path, weights_source, flags, pipeline_text, has_header, on_zero_std, n_folds, fold_file, seed, streaming, out_dir) -> None:
    """Export every training fold's cross-product matrices to binary files."""
    data, spec, weight_desc = _load_xy(
        x_path, y_path, pipeline_text, flags, weights_source, has_header
    )
    folds = _resolve_folds(data.n_rows, n_folds, seed, None, fold_file, has_header)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if streaming:
        produced = stream_training_products(data, folds, spec, on_zero_std=on_zero_std)
    else:
        products = precompute(data, folds)
        produced = (
            training_products(products, fold, spec, on_zero_std=on_zero_std)
            for fold in range(folds.n_folds)
        )

    fold_entries = []
    for tp in produced:
        entry = {"fold": tp.fold, "n_train_rows": tp.n_train_rows, "matrices": {}}
        for name, matrix in (("xtx", tp.xtx), ("xty", tp.xty)):
            path = out / f"fold_{tp.fold:03d}_{name}.fpls"
            save_binary(matrix, str(path))
            entry["matrices"][name] = {
                "path": path.name,
                "rows": matrix.shape[0],
                "cols": matrix.shape[1],
                "sha256": _sha256(path),
            }
        entry["stats_x"] = {
            "mean": [float(v) for v in tp.stats_x.mean],
            "std": [float(v) for v in tp.stats_x.std],
        }
        entry["stats_y"] = {
            "mean": [float(v) for v in tp.stats_y.mean],
            "std": [float(v) for v in tp.stats_y.std],
        }
        fold_entries.append(entry)

    manifest = {
        "config": _manifest(
            "cvmatrix",
            x=x_path,
            y=y_path,
            weights=weight_desc,
            flags=spec.to_flags(),
            pipeline=pipeline_text,
            folds=folds.n_folds,
            fold_file=fold_file,
            seed=seed,
            mode="streaming" if streaming else "retained",
            on_zero_std=on_zero_std,
        ),
        "folds": fold_entries,
    }
    _write_json(manifest, str(out / "manifest.json"))
    click.echo(str(out / "manifest.json"))


@main.command("bench")
@click.option("--n", type=int, default=5000, show_default=True)
@click.option("--k", type=int, default=100, show_default=True)
@click.option("--m", type=int, default=1, show_default=True)
@click.option("--p", "p_list", default="2,10,100", show_default=True, help="Comma-separated fold counts.")
@click.option("--flags", default="cx,cy", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(["time", "space"]), default="time", show_default=True)
@click.option("--skip-naive", is_flag=True, default=False, help="Measure the fast path only.")
@click.option("--report-out", default="-", show_default=True)
@structured_errors
def bench_cmd(n, k, m, p_list, flags, seed, mode, skip_naive, report_out) -> None:
    """Benchmark the fold-products engine on synthetic data.

    Synthetic data: seeded standard-normal X and a linear response plus 10%
    noise, so benchmarks need no external files.
    """
    try:
        p_values = [int(tok) for tok in p_list.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"--p must be a comma list of integers, got {p_list!r}")
    if not p_values or any(p < 2 or p > n for p in p_values):
        raise click.UsageError("fold counts must lie in [2, n]")
    spec = PreprocessSpec.from_flags(flags)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, k))
    y = x @ rng.standard_normal((k, m)) + 0.1 * rng.standard_normal((n, m))
    data = Dataset(x=x, y=y)

    results = []
    for p in p_values:
        folds = make_folds(n, p, seed=seed)
        entry: dict = {"p": p}
        if mode == "time":
            t0 = time.perf_counter()
            products = precompute(data, folds)
            for fold in range(p):
                training_products(products, fold, spec)
            entry["fast_s"] = time.perf_counter() - t0
            if not skip_naive:
                t0 = time.perf_counter()
                for fold in range(p):
                    naive_training_products(data, folds, fold, spec)
                entry["naive_s"] = time.perf_counter() - t0
        else:
            tracemalloc.start()
            baseline = tracemalloc.get_traced_memory()[0]
            for tp in stream_training_products(data, folds, spec):
                pass
            peak = tracemalloc.get_traced_memory()[1]
            tracemalloc.stop()
            entry["peak_extra_bytes"] = int(peak - baseline)
        results.append(entry)

    _write_json(
        {
            "config": _manifest(
                "bench",
                n=n,
                k=k,
                m=m,
                p=p_values,
                flags=spec.to_flags(),
                seed=seed,
                mode=mode,
            ),
            "results": results,
        },
        report_out,
    )


@main.command("stats")
@click.option("--x", "x_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--weights", "weights_source", default="none", show_default=True, help="'none' or 'column:<path>'.")
@click.option("--csv-header/--no-csv-header", "has_header", default=False, show_default=True)
@click.option("--out", "out_path", default="-", show_default=True)
@structured_errors
def stats_cmd(x_path, weights_source, has_header, out_path) -> None:
    """Column statistics of a matrix as JSON."""
    x = _load_matrix(x_path, has_header)
    weights = None
    if weights_source != "none":
        if not weights_source.startswith("column:"):
            raise click.UsageError(
                "stats accepts --weights 'none' or 'column:<path>' "
                "(balanced-classes needs a response matrix)"
            )
        path = weights_source[len("column:") :]
        wm = _load_matrix(path, has_header)
        if wm.cols != 1:
            raise DataError(
                "a weight file must contain exactly one column", path=path, cols=wm.cols
            )
        weights = wm.data[:, 0].copy()
    stats = column_stats(x, weights=weights)
    _write_json(
        {
            "config": _manifest("stats", x=x_path, weights=weights_source),
            "columns": x.cols,
            "rows": x.rows,
            "mean": [float(v) for v in stats.mean],
            "std": [float(v) for v in stats.std],
            "weight_total": float(stats.weight_total),
            "nonzero_weight_count": int(stats.nonzero_weight_count),
            "std_defined": bool(stats.std_defined),
        },
        out_path,
    )


if __name__ == "__main__":
    main()
