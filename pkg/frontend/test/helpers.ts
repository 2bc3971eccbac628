/**
 * Shared test plumbing: a deterministic corpus generator and a direct
 * tool runner that bypasses the bindings entirely.
 *
 * Parity tests feed the same numbers through two independent routes — the
 * bindings (binary matrix inputs) and a plain subprocess call with CSV
 * inputs written here — and require bit-identical artifacts. The corpus
 * generator is a tiny seeded PRNG so both routes share exact doubles
 * without any file exchange between them.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { encodeCsv, toMatrix, type Matrix } from "../src/matrix.js";

/** Deterministic 32-bit PRNG (mulberry32), uniform on [0, 1). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface Corpus {
  x: number[][];
  y: number[][];
  weights: number[];
}

/** Well-scaled regression data: `y = x·b + small noise`, plus positive weights. */
export function makeCorpus(seed: number, n: number, k: number, m: number): Corpus {
  const rand = mulberry32(seed);
  const x: number[][] = [];
  for (let i = 0; i < n; i += 1) {
    x.push(Array.from({ length: k }, () => rand() * 3 - 1));
  }
  const b: number[][] = [];
  for (let j = 0; j < k; j += 1) {
    b.push(Array.from({ length: m }, () => rand() * 2 - 1));
  }
  const y: number[][] = [];
  for (let i = 0; i < n; i += 1) {
    const row: number[] = [];
    for (let c = 0; c < m; c += 1) {
      let acc = 0;
      for (let j = 0; j < k; j += 1) {
        acc += (x[i] as number[])[j]! * (b[j] as number[])[c]!;
      }
      row.push(acc + 0.05 * (rand() - 0.5));
    }
    y.push(row);
  }
  const weights = Array.from({ length: n }, () => 0.2 + 2.8 * rand());
  return { x, y, weights };
}

/** Two separated clusters with a two-level response column (labels 1 and 2). */
export function makeClassCorpus(seed: number, nPerClass: number, k: number): Corpus {
  const rand = mulberry32(seed);
  const x: number[][] = [];
  const y: number[][] = [];
  for (let cls = 0; cls < 2; cls += 1) {
    const center = cls === 0 ? -1 : 1;
    for (let i = 0; i < nPerClass; i += 1) {
      x.push(Array.from({ length: k }, () => center + 0.6 * (rand() - 0.5)));
      y.push([cls + 1]);
    }
  }
  const weights = Array.from({ length: 2 * nPerClass }, () => 0.2 + 2.8 * rand());
  return { x, y, weights };
}

export interface ToolRun {
  status: number;
  stdout: string;
  stderr: string;
}

/** Run the tool directly (no bindings involved), capturing output. */
export function runTool(args: string[], env?: Record<string, string>): ToolRun {
  const python = process.env["FASTPLS_PYTHON"]?.trim() || "python3";
  const result = spawnSync(python, ["-m", "fastpls.cli", ...args], {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
    env: env ? { ...process.env, ...env } : process.env,
  });
  if (result.error) throw result.error;
  return {
    status: result.status ?? -1,
    stdout: result.stdout ?? "",
    stderr: result.stderr ?? "",
  };
}

/** Run the tool directly and fail loudly on a nonzero exit. */
export function runToolOk(args: string[], env?: Record<string, string>): ToolRun {
  const run = runTool(args, env);
  if (run.status !== 0) {
    throw new Error(
      `direct tool run failed (${run.status}): ${args.join(" ")}\n${run.stderr}`,
    );
  }
  return run;
}

/** Write rows to `dir/name` as shortest round-trip CSV and return the path. */
export function writeCsv(dir: string, name: string, rows: number[][]): string {
  const path = join(dir, name);
  writeFileSync(path, encodeCsv(toMatrix(rows, name)));
  return path;
}

/** Create a scratch directory, run `fn`, and always clean up. */
export function withScratch<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "fastpls-test-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/** The raw bytes behind a matrix payload, for bitwise comparisons. */
export function matrixBytes(matrix: Matrix): Buffer {
  return Buffer.from(matrix.data.buffer, matrix.data.byteOffset, matrix.data.byteLength);
}
