/**
 * The binary model container and its parsed in-memory form.
 *
 * A model file starts with the magic `FPLM`, one `u8` format version, one
 * `u8` bitfield of centering/scaling toggles (cx=1, cy=2, sx=4, sy=8), and
 * two `u32` little-endian counts: the number of fitted components `a_max`
 * and the effective rank `n_effective`. Four matrix blocks follow — X
 * weights, X loadings, Y loadings, rotations — then `a_max` coefficient
 * slices (each predictors × responses), two column-statistics blocks (one
 * for X, one for Y: four row vectors — mean, std, weighted sum, weighted
 * sum of squares — plus an `f64` total weight, a `u64` nonzero-weight row
 * count, and a `u8` flag for whether the std is defined), and finally a
 * length-prefixed list of UTF-8 note strings. Every matrix block uses the
 * binary matrix container, so the whole file round-trips bit-exactly.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { DataError, FormatError } from "./errors.js";
import { decodeMatrix, encodeMatrix, matrixRows, type Matrix } from "./matrix.js";

const MAGIC = Buffer.from("FPLM", "ascii");
const FORMAT_VERSION = 1;

/** The four centering/scaling toggles applied before fitting. */
export interface Flags {
  readonly centerX: boolean;
  readonly centerY: boolean;
  readonly scaleX: boolean;
  readonly scaleY: boolean;
}

const FLAG_TOKENS: ReadonlyArray<[keyof Flags, string, number]> = [
  ["centerX", "cx", 1],
  ["centerY", "cy", 2],
  ["scaleX", "sx", 4],
  ["scaleY", "sy", 8],
];

/** Parse a comma set over `{cx, cy, sx, sy}`; empty or "none" is all off. */
export function flagsFromString(text: string): Flags {
  const flags = { centerX: false, centerY: false, scaleX: false, scaleY: false };
  const trimmed = text.trim().toLowerCase();
  if (trimmed === "" || trimmed === "none") return flags;
  const seen = new Set<string>();
  for (const raw of trimmed.split(",")) {
    const token = raw.trim();
    const entry = FLAG_TOKENS.find(([, tok]) => tok === token);
    if (!entry) {
      throw new DataError(
        `unknown preprocessing flag ${JSON.stringify(token)}; expected a comma set over cx,cy,sx,sy`,
        "DataError",
        { flag: token },
      );
    }
    if (seen.has(token)) {
      throw new DataError(`duplicate preprocessing flag ${JSON.stringify(token)}`, "DataError", {
        flag: token,
      });
    }
    seen.add(token);
    (flags as Record<string, boolean>)[entry[0]] = true;
  }
  return flags;
}

/** Inverse of {@link flagsFromString}; `"none"` when all toggles are off. */
export function flagsToString(flags: Flags): string {
  const parts = FLAG_TOKENS.filter(([key]) => flags[key]).map(([, tok]) => tok);
  return parts.length > 0 ? parts.join(",") : "none";
}

export function flagsFromBits(bits: number): Flags {
  if (!Number.isInteger(bits) || bits < 0 || bits > 15) {
    throw new FormatError(`preprocessing bitfield ${bits} outside 0..15`, "DataError", { bits });
  }
  return {
    centerX: (bits & 1) !== 0,
    centerY: (bits & 2) !== 0,
    scaleX: (bits & 4) !== 0,
    scaleY: (bits & 8) !== 0,
  };
}

export function flagsToBits(flags: Flags): number {
  return FLAG_TOKENS.reduce((bits, [key, , bit]) => bits | (flags[key] ? bit : 0), 0);
}

/** Per-column weighted statistics stored alongside a model. */
export interface ColumnStats {
  readonly mean: Float64Array;
  readonly std: Float64Array;
  readonly colSum: Float64Array;
  readonly colSumSq: Float64Array;
  readonly weightTotal: number;
  readonly nonzeroWeightCount: number;
  readonly stdDefined: boolean;
}

function decodeStats(blob: Buffer, offset: number, what: string): { stats: ColumnStats; next: number } {
  const vectors: Float64Array[] = [];
  let cursor = offset;
  for (let i = 0; i < 4; i += 1) {
    const { matrix, next } = decodeMatrix(blob, cursor, what);
    vectors.push(matrix.data);
    cursor = next;
  }
  if (blob.length - cursor < 17) {
    throw new FormatError(`${what}: truncated statistics block`, "DataError", {});
  }
  const weightTotal = blob.readDoubleLE(cursor);
  const nonzeroBig = blob.readBigUInt64LE(cursor + 8);
  const stdDefined = blob.readUInt8(cursor + 16) !== 0;
  return {
    stats: {
      mean: vectors[0] as Float64Array,
      std: vectors[1] as Float64Array,
      colSum: vectors[2] as Float64Array,
      colSumSq: vectors[3] as Float64Array,
      weightTotal,
      nonzeroWeightCount: Number(nonzeroBig),
      stdDefined,
    },
    next: cursor + 17,
  };
}

function encodeStats(stats: ColumnStats): Buffer {
  const vector = (v: Float64Array): Buffer =>
    encodeMatrix({ rows: 1, cols: v.length, data: v });
  const tail = Buffer.allocUnsafe(17);
  tail.writeDoubleLE(stats.weightTotal, 0);
  tail.writeBigUInt64LE(BigInt(stats.nonzeroWeightCount), 8);
  tail.writeUInt8(stats.stdDefined ? 1 : 0, 16);
  return Buffer.concat([
    vector(stats.mean),
    vector(stats.std),
    vector(stats.colSum),
    vector(stats.colSumSq),
    tail,
  ]);
}

/**
 * A fitted model, parsed from (and serializable back to) the model
 * container. The parse is strict: every block is validated and trailing
 * bytes are refused, and `toBytes` reproduces the original file exactly.
 */
export class BoundModel {
  readonly flags: Flags;
  readonly aMax: number;
  readonly nEffective: number;
  readonly weightsX: Matrix;
  readonly loadingsX: Matrix;
  readonly loadingsY: Matrix;
  readonly rotations: Matrix;
  /** Coefficient slices for component counts `1..aMax`, each predictors × responses. */
  readonly coefStack: ReadonlyArray<Matrix>;
  readonly statsX: ColumnStats;
  readonly statsY: ColumnStats;
  readonly notes: ReadonlyArray<string>;

  private constructor(fields: {
    flags: Flags;
    aMax: number;
    nEffective: number;
    weightsX: Matrix;
    loadingsX: Matrix;
    loadingsY: Matrix;
    rotations: Matrix;
    coefStack: Matrix[];
    statsX: ColumnStats;
    statsY: ColumnStats;
    notes: string[];
  }) {
    this.flags = fields.flags;
    this.aMax = fields.aMax;
    this.nEffective = fields.nEffective;
    this.weightsX = fields.weightsX;
    this.loadingsX = fields.loadingsX;
    this.loadingsY = fields.loadingsY;
    this.rotations = fields.rotations;
    this.coefStack = fields.coefStack;
    this.statsX = fields.statsX;
    this.statsY = fields.statsY;
    this.notes = fields.notes;
  }

  /** Number of predictor columns the model expects. */
  get predictors(): number {
    return this.weightsX.rows;
  }

  /** Number of response columns the model produces. */
  get responses(): number {
    return this.loadingsY.rows;
  }

  /** The preprocessing toggles as a flag string, e.g. `"cx,cy"`. */
  get flagString(): string {
    return flagsToString(this.flags);
  }

  /** Coefficient slice for a component count `a` in `1..aMax`. */
  coefficients(a: number): Matrix {
    if (!Number.isInteger(a) || a < 1 || a > this.aMax) {
      throw new DataError(
        `component count ${a} outside 1..${this.aMax}`,
        "DataError",
        { a, aMax: this.aMax },
      );
    }
    return this.coefStack[a - 1] as Matrix;
  }

  /** The full coefficient stack as nested arrays `[aMax][predictors][responses]`. */
  coefficientStack(): number[][][] {
    return this.coefStack.map((slice) => matrixRows(slice));
  }

  static fromBytes(blob: Buffer, what = "model"): BoundModel {
    if (blob.length < 14 || !blob.subarray(0, 4).equals(MAGIC)) {
      throw new FormatError(`${what}: not a model file (bad magic)`, "DataError", {});
    }
    const version = blob.readUInt8(4);
    if (version !== FORMAT_VERSION) {
      throw new FormatError(
        `${what}: unsupported model format version ${version}`,
        "DataError",
        { version },
      );
    }
    const flags = flagsFromBits(blob.readUInt8(5));
    const aMax = blob.readUInt32LE(6);
    const nEffective = blob.readUInt32LE(10);
    if (aMax < 1 || nEffective > aMax) {
      throw new FormatError(
        `${what}: inconsistent component counts (a_max=${aMax}, effective=${nEffective})`,
        "DataError",
        { aMax, nEffective },
      );
    }
    let cursor = 14;
    const block = (): Matrix => {
      const { matrix, next } = decodeMatrix(blob, cursor, what);
      cursor = next;
      return matrix;
    };
    const weightsX = block();
    if (weightsX.cols !== aMax) {
      throw new FormatError(
        `${what}: weight block has ${weightsX.cols} columns for a_max=${aMax}`,
        "DataError",
        { cols: weightsX.cols, aMax },
      );
    }
    const loadingsX = block();
    const loadingsY = block();
    const rotations = block();
    const predictors = weightsX.rows;
    const responses = loadingsY.rows;
    const coefStack: Matrix[] = [];
    for (let a = 0; a < aMax; a += 1) {
      const slice = block();
      if (slice.rows !== predictors || slice.cols !== responses) {
        throw new FormatError(`${what}: coefficient slice has wrong shape`, "DataError", {
          rows: slice.rows,
          cols: slice.cols,
        });
      }
      coefStack.push(slice);
    }
    const statsXRes = decodeStats(blob, cursor, what);
    cursor = statsXRes.next;
    const statsYRes = decodeStats(blob, cursor, what);
    cursor = statsYRes.next;
    if (blob.length - cursor < 4) {
      throw new FormatError(`${what}: truncated notes block`, "DataError", {});
    }
    const noteCount = blob.readUInt32LE(cursor);
    cursor += 4;
    const notes: string[] = [];
    for (let i = 0; i < noteCount; i += 1) {
      if (blob.length - cursor < 4) {
        throw new FormatError(`${what}: truncated notes block`, "DataError", {});
      }
      const length = blob.readUInt32LE(cursor);
      cursor += 4;
      if (blob.length - cursor < length) {
        throw new FormatError(`${what}: truncated notes block`, "DataError", {});
      }
      notes.push(blob.subarray(cursor, cursor + length).toString("utf-8"));
      cursor += length;
    }
    if (cursor !== blob.length) {
      throw new FormatError(`${what}: trailing bytes after model payload`, "DataError", {
        trailing: blob.length - cursor,
      });
    }
    return new BoundModel({
      flags,
      aMax,
      nEffective,
      weightsX,
      loadingsX,
      loadingsY,
      rotations,
      coefStack,
      statsX: statsXRes.stats,
      statsY: statsYRes.stats,
      notes,
    });
  }

  /** Serialize back to the container format (bit-exact inverse of `fromBytes`). */
  toBytes(): Buffer {
    const header = Buffer.allocUnsafe(14);
    MAGIC.copy(header, 0);
    header.writeUInt8(FORMAT_VERSION, 4);
    header.writeUInt8(flagsToBits(this.flags), 5);
    header.writeUInt32LE(this.aMax, 6);
    header.writeUInt32LE(this.nEffective, 10);
    const parts: Buffer[] = [
      header,
      encodeMatrix(this.weightsX),
      encodeMatrix(this.loadingsX),
      encodeMatrix(this.loadingsY),
      encodeMatrix(this.rotations),
    ];
    for (const slice of this.coefStack) {
      parts.push(encodeMatrix(slice));
    }
    parts.push(encodeStats(this.statsX), encodeStats(this.statsY));
    const noteBuffers: Buffer[] = [];
    for (const note of this.notes) {
      const encoded = Buffer.from(note, "utf-8");
      const prefix = Buffer.allocUnsafe(4);
      prefix.writeUInt32LE(encoded.length, 0);
      noteBuffers.push(prefix, encoded);
    }
    const count = Buffer.allocUnsafe(4);
    count.writeUInt32LE(this.notes.length, 0);
    parts.push(count, ...noteBuffers);
    return Buffer.concat(parts);
  }

  static load(path: string): BoundModel {
    return BoundModel.fromBytes(readFileSync(path), path);
  }

  save(path: string): void {
    writeFileSync(path, this.toBytes());
  }
}
