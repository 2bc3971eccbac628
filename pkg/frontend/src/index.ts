/**
 * High-level operations: fit, predict, cross-validate, and training-fold
 * product export, all delegated to the command line tool.
 *
 * Inputs are normalized to row-major 64-bit floats, written to a private
 * temporary directory as binary matrix files (bit-exact, no text round
 * trip), and handed to one subcommand per call. Results come back through
 * the tool's own artifacts: model containers, prediction CSV (written in
 * shortest round-trip decimal, so parsing recovers identical doubles),
 * JSON reports, and checksummed binary matrices. No numeric computation
 * happens on this side of the process boundary.
 */

import { createHash } from "node:crypto";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { CliError, DataError } from "./errors.js";
import {
  decodeCsv,
  decodeMatrixFile,
  encodeMatrix,
  toMatrix,
  type Matrix,
  type MatrixInput,
} from "./matrix.js";
import { BoundModel, flagsToString, type Flags } from "./model.js";
import { runCli } from "./runner.js";

export * from "./errors.js";
export * from "./matrix.js";
export * from "./model.js";
export * from "./runner.js";

/** Preprocessing toggles as a {@link Flags} object or a flag string like `"cx,cy"`. */
export type FlagsInput = Flags | string;

/** Per-row weights: an explicit vector, or automatic inverse-frequency class weights. */
export type WeightsInput = readonly number[] | Float64Array | "balanced-classes";

export interface FitOptions {
  /** Number of components to fit (required). */
  aMax: number;
  flags?: FlagsInput;
  /** Row preprocessing pipeline, e.g. `"snv|savgol:w=7,p=2,d=2"`. */
  pipeline?: string;
  weights?: WeightsInput;
  algorithm?: "nipals" | "ikpls1" | "ikpls2";
  onZeroStd?: "error" | "unit";
}

export interface PredictOptions {
  /** Component count to predict with (default: the model's maximum). */
  components?: number;
  /** Row preprocessing override; default replays the pipeline recorded at fit time. */
  pipeline?: string;
}

/** Explicit per-row fold ids `0..P-1`, or a seeded assignment request. */
export type FoldsInput =
  | readonly number[]
  | { nFolds: number; seed?: number; stratified?: boolean };

export interface CrossValidateOptions {
  aMax: number;
  metric?: "rmse" | "accuracy" | "balanced_accuracy" | "weighted_accuracy";
  flags?: FlagsInput;
  pipeline?: string;
  weights?: WeightsInput;
  onZeroStd?: "error" | "unit";
  threads?: number;
  /** Also parse the refitted final model into `finalModel` on the report. */
  withModel?: boolean;
}

/** The cross-validation report as emitted by the tool (snake_case preserved). */
export interface CvReport {
  config: Record<string, unknown>;
  version: string;
  metric: string;
  flags: string;
  a_max: number;
  n_folds: number;
  /** `per_fold[p][a-1]` is fold `p`'s validation metric at `a` components. */
  per_fold: number[][];
  best_a_per_fold: number[];
  selected_a: number;
  final_n_effective: number;
  final_notes: string[];
  model_sha256?: string;
  /** Present when requested via `withModel`. */
  finalModel?: BoundModel;
}

export interface TrainingProductsOptions {
  flags?: FlagsInput;
  pipeline?: string;
  weights?: WeightsInput;
  onZeroStd?: "error" | "unit";
  /** Use the constant-space streaming accumulator instead of the retained one. */
  streaming?: boolean;
}

/** One training partition's preprocessed cross products and column statistics. */
export interface FoldProducts {
  fold: number;
  nTrainRows: number;
  /** Predictors × predictors Gram matrix of the training rows. */
  xtx: Matrix;
  /** Predictors × responses cross-product matrix of the training rows. */
  xty: Matrix;
  statsX: { mean: number[]; std: number[] };
  statsY: { mean: number[]; std: number[] };
}

function flagString(flags: FlagsInput | undefined): string {
  if (flags === undefined) return "none";
  return typeof flags === "string" ? flags : flagsToString(flags);
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "fastpls-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function writeMatrixFile(dir: string, name: string, matrix: Matrix): string {
  const path = join(dir, name);
  writeFileSync(path, encodeMatrix(matrix));
  return path;
}

function columnMatrix(values: readonly number[] | Float64Array, what: string): Matrix {
  return toMatrix({ data: Array.from(values), rows: values.length, cols: 1 }, what);
}

/** Translate a weights option into `--weights <source>` plus any file it needs. */
function weightArgs(dir: string, weights: WeightsInput | undefined): string[] {
  if (weights === undefined) return [];
  if (weights === "balanced-classes") return ["--weights", "balanced-classes"];
  const path = writeMatrixFile(dir, "weights.fpls", columnMatrix(weights, "weights"));
  return ["--weights", `column:${path}`];
}

function foldArgs(dir: string, folds: FoldsInput): string[] {
  if (Array.isArray(folds)) {
    for (let i = 0; i < folds.length; i += 1) {
      const id = folds[i] as number;
      if (!Number.isInteger(id) || id < 0) {
        throw new DataError(
          `fold ids must be non-negative integers; got ${id} at row ${i + 1}`,
          "DataError",
          { row: i + 1, value: id },
        );
      }
    }
    const path = writeMatrixFile(
      dir,
      "folds.fpls",
      columnMatrix(folds as readonly number[], "fold assignment"),
    );
    return ["--fold-file", path];
  }
  const spec = folds as { nFolds: number; seed?: number; stratified?: boolean };
  const args = ["--folds", String(spec.nFolds), "--seed", String(spec.seed ?? 0)];
  if (spec.stratified) args.push("--stratified");
  return args;
}

function readReport(path: string): Record<string, unknown> {
  return JSON.parse(readFileSync(path, "utf-8")) as Record<string, unknown>;
}

function sha256(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

/**
 * Fit a model on `x` and `y` and return the parsed model container.
 * Row counts are checked here; everything else is validated by the tool.
 */
export function boundFit(x: MatrixInput, y: MatrixInput, options: FitOptions): BoundModel {
  const xm = toMatrix(x, "x");
  const ym = toMatrix(y, "y");
  if (ym.rows !== xm.rows) {
    throw new DataError(
      `y has ${ym.rows} rows but x has ${xm.rows}; expected a ${xm.rows}x${ym.cols} response matrix`,
      "DataError",
      { rows: ym.rows, expected: xm.rows },
    );
  }
  return withTempDir((dir) => {
    const modelPath = join(dir, "model.fplm");
    const args = [
      "fit",
      "--x", writeMatrixFile(dir, "x.fpls", xm),
      "--y", writeMatrixFile(dir, "y.fpls", ym),
      "--amax", String(options.aMax),
      "--flags", flagString(options.flags),
      "--model-out", modelPath,
      "--report-out", join(dir, "report.json"),
      "--no-runtime",
    ];
    if (options.pipeline) args.push("--pipeline", options.pipeline);
    args.push(...weightArgs(dir, options.weights));
    if (options.algorithm) args.push("--algorithm", options.algorithm);
    if (options.onZeroStd) args.push("--on-zero-std", options.onZeroStd);
    runCli(args);
    return BoundModel.load(modelPath);
  });
}

/**
 * Predict responses for `xNew` with a fitted model. The model is written
 * back to disk byte-exactly, so the tool sees precisely what was fitted;
 * predictions come back through shortest round-trip CSV.
 */
export function boundPredict(
  model: BoundModel,
  xNew: MatrixInput,
  options: PredictOptions = {},
): Matrix {
  const xm = toMatrix(xNew, "x");
  return withTempDir((dir) => {
    const modelPath = join(dir, "model.fplm");
    model.save(modelPath);
    const outPath = join(dir, "predictions.csv");
    const args = [
      "predict",
      "--model", modelPath,
      "--x", writeMatrixFile(dir, "x.fpls", xm),
      "--out", outPath,
    ];
    if (options.components !== undefined) {
      args.push("--components", String(options.components));
    }
    if (options.pipeline !== undefined) {
      args.push("--pipeline", options.pipeline);
    }
    runCli(args);
    return decodeCsv(readFileSync(outPath, "utf-8"), "predictions");
  });
}

/**
 * Cross-validate over a fold assignment, returning the tool's report
 * (per-fold metric table, per-fold best component counts, the selected
 * count, and notes from the final refit).
 */
export function boundCrossValidate(
  x: MatrixInput,
  y: MatrixInput,
  folds: FoldsInput,
  options: CrossValidateOptions,
): CvReport {
  const xm = toMatrix(x, "x");
  const ym = toMatrix(y, "y");
  if (ym.rows !== xm.rows) {
    throw new DataError(
      `y has ${ym.rows} rows but x has ${xm.rows}; expected a ${xm.rows}x${ym.cols} response matrix`,
      "DataError",
      { rows: ym.rows, expected: xm.rows },
    );
  }
  return withTempDir((dir) => {
    const reportPath = join(dir, "report.json");
    const modelPath = join(dir, "final.fplm");
    const args = [
      "cv",
      "--x", writeMatrixFile(dir, "x.fpls", xm),
      "--y", writeMatrixFile(dir, "y.fpls", ym),
      ...foldArgs(dir, folds),
      "--amax", String(options.aMax),
      "--metric", options.metric ?? "rmse",
      "--flags", flagString(options.flags),
      "--report-out", reportPath,
      "--no-runtime",
    ];
    if (options.pipeline) args.push("--pipeline", options.pipeline);
    args.push(...weightArgs(dir, options.weights));
    if (options.onZeroStd) args.push("--on-zero-std", options.onZeroStd);
    if (options.threads !== undefined) args.push("--threads", String(options.threads));
    if (options.withModel) args.push("--model-out", modelPath);
    runCli(args);
    const report = readReport(reportPath) as unknown as CvReport;
    if (options.withModel) {
      report.finalModel = BoundModel.load(modelPath);
    }
    return report;
  });
}

/**
 * Export every training partition's preprocessed cross products. Each
 * binary matrix is verified against the manifest's SHA-256 checksum
 * before it is parsed.
 */
export function trainingProducts(
  x: MatrixInput,
  y: MatrixInput,
  folds: FoldsInput,
  options: TrainingProductsOptions = {},
): FoldProducts[] {
  const xm = toMatrix(x, "x");
  const ym = toMatrix(y, "y");
  return withTempDir((dir) => {
    const outDir = join(dir, "products");
    const args = [
      "cvmatrix",
      "--x", writeMatrixFile(dir, "x.fpls", xm),
      "--y", writeMatrixFile(dir, "y.fpls", ym),
      ...foldArgs(dir, folds),
      "--flags", flagString(options.flags),
      "--out-dir", outDir,
      options.streaming ? "--streaming" : "--retained",
    ];
    if (options.pipeline) args.push("--pipeline", options.pipeline);
    args.push(...weightArgs(dir, options.weights));
    if (options.onZeroStd) args.push("--on-zero-std", options.onZeroStd);
    runCli(args);
    const manifest = readReport(join(outDir, "manifest.json")) as {
      folds: Array<{
        fold: number;
        n_train_rows: number;
        matrices: Record<string, { path: string; rows: number; cols: number; sha256: string }>;
        stats_x: { mean: number[]; std: number[] };
        stats_y: { mean: number[]; std: number[] };
      }>;
    };
    const result: FoldProducts[] = [];
    for (const entry of manifest.folds) {
      const matrices: Record<string, Matrix> = {};
      for (const name of ["xtx", "xty"] as const) {
        const meta = entry.matrices[name];
        if (!meta) {
          throw new CliError(`manifest is missing the ${name} block for fold ${entry.fold}`, "", {
            fold: entry.fold,
          });
        }
        const path = join(outDir, meta.path);
        const digest = sha256(path);
        if (digest !== meta.sha256) {
          throw new CliError(
            `checksum mismatch for ${meta.path}: manifest ${meta.sha256}, file ${digest}`,
            "",
            { path: meta.path },
          );
        }
        const matrix = decodeMatrixFile(readFileSync(path), meta.path);
        if (matrix.rows !== meta.rows || matrix.cols !== meta.cols) {
          throw new CliError(
            `${meta.path} is ${matrix.rows}x${matrix.cols} but the manifest says ${meta.rows}x${meta.cols}`,
            "",
            { path: meta.path },
          );
        }
        matrices[name] = matrix;
      }
      result.push({
        fold: entry.fold,
        nTrainRows: entry.n_train_rows,
        xtx: matrices["xtx"] as Matrix,
        xty: matrices["xty"] as Matrix,
        statsX: entry.stats_x,
        statsY: entry.stats_y,
      });
    }
    result.sort((a, b) => a.fold - b.fold);
    return result;
  });
}
