/**
 * Dense 64-bit float matrices and their on-disk forms.
 *
 * Everything that crosses the process boundary is normalized here to one
 * in-memory shape: row-major `Float64Array` plus explicit dimensions. Two
 * disk codecs are provided, matching the tool's external formats exactly:
 *
 * - the binary container: magic `FPLS`, a `u8` format version, `u64`
 *   little-endian row and column counts, then the row-major `f64`
 *   little-endian payload (bit-exact round trips);
 * - strict numeric CSV: comma separator, `.` decimal point, one row per
 *   line. Values are written in shortest round-trip decimal form, so the
 *   reader on either side recovers the identical double.
 */

import { DataError, FormatError } from "./errors.js";

/** An immutable row-major matrix of 64-bit floats. */
export interface Matrix {
  readonly rows: number;
  readonly cols: number;
  /** Row-major payload of length `rows * cols`. */
  readonly data: Float64Array;
}

/** Flexible input: nested rows, or a flat buffer with explicit dimensions. */
export type MatrixInput =
  | number[][]
  | {
      data: Float64Array | readonly number[];
      rows: number;
      cols: number;
      /** Memory order of `data`; column-major input is transposed on entry. */
      order?: "row" | "col";
    };

const MAGIC = Buffer.from("FPLS", "ascii");
const FORMAT_VERSION = 1;
const HEADER_BYTES = 4 + 1 + 8 + 8;

function checkFinite(value: number, row: number, col: number, what: string): void {
  if (!Number.isFinite(value)) {
    throw new DataError(
      `${what} has a non-finite value at row ${row + 1}, column ${col + 1}`,
      "DataError",
      { row: row + 1, col: col + 1 },
    );
  }
}

/** Normalize any accepted input into a validated row-major {@link Matrix}. */
export function toMatrix(input: MatrixInput, what = "matrix"): Matrix {
  if (Array.isArray(input)) {
    const rows = input.length;
    if (rows === 0) {
      throw new DataError(`${what} has no rows`, "DataError", {});
    }
    const first = input[0];
    if (!Array.isArray(first) || first.length === 0) {
      throw new DataError(`${what} rows must be non-empty arrays`, "DataError", {});
    }
    const cols = first.length;
    const data = new Float64Array(rows * cols);
    for (let i = 0; i < rows; i += 1) {
      const row = input[i];
      if (!Array.isArray(row) || row.length !== cols) {
        throw new DataError(
          `${what} is ragged: row ${i + 1} has ${row?.length ?? 0} values, expected ${cols}`,
          "DataError",
          { row: i + 1, cols: row?.length ?? 0, expected: cols },
        );
      }
      for (let j = 0; j < cols; j += 1) {
        const v = Number(row[j]);
        checkFinite(v, i, j, what);
        data[i * cols + j] = v;
      }
    }
    return { rows, cols, data };
  }

  const { rows, cols, order = "row" } = input;
  if (!Number.isInteger(rows) || !Number.isInteger(cols) || rows < 1 || cols < 1) {
    throw new DataError(
      `${what} has invalid dimensions ${rows}x${cols}`,
      "DataError",
      { rows, cols },
    );
  }
  const flat = input.data;
  if (flat.length !== rows * cols) {
    throw new DataError(
      `${what} has ${flat.length} values for dimensions ${rows}x${cols}`,
      "DataError",
      { length: flat.length, rows, cols },
    );
  }
  const data = new Float64Array(rows * cols);
  for (let i = 0; i < rows; i += 1) {
    for (let j = 0; j < cols; j += 1) {
      const v = Number(order === "row" ? flat[i * cols + j] : flat[j * rows + i]);
      checkFinite(v, i, j, what);
      data[i * cols + j] = v;
    }
  }
  return { rows, cols, data };
}

/** The matrix as nested row arrays (a convenient but copying view). */
export function matrixRows(matrix: Matrix): number[][] {
  const out: number[][] = [];
  for (let i = 0; i < matrix.rows; i += 1) {
    out.push(Array.from(matrix.data.subarray(i * matrix.cols, (i + 1) * matrix.cols)));
  }
  return out;
}

/** One entry, by zero-based row and column. */
export function matrixAt(matrix: Matrix, row: number, col: number): number {
  if (row < 0 || row >= matrix.rows || col < 0 || col >= matrix.cols) {
    throw new DataError(
      `index (${row}, ${col}) outside a ${matrix.rows}x${matrix.cols} matrix`,
      "DataError",
      { row, col, rows: matrix.rows, cols: matrix.cols },
    );
  }
  return matrix.data[row * matrix.cols + col] as number;
}

/** Serialize one matrix block in the binary container format. */
export function encodeMatrix(matrix: Matrix): Buffer {
  const out = Buffer.allocUnsafe(HEADER_BYTES + matrix.rows * matrix.cols * 8);
  MAGIC.copy(out, 0);
  out.writeUInt8(FORMAT_VERSION, 4);
  out.writeBigUInt64LE(BigInt(matrix.rows), 5);
  out.writeBigUInt64LE(BigInt(matrix.cols), 13);
  const view = new DataView(out.buffer, out.byteOffset + HEADER_BYTES);
  for (let i = 0; i < matrix.data.length; i += 1) {
    view.setFloat64(i * 8, matrix.data[i] as number, true);
  }
  return out;
}

/**
 * Deserialize one matrix block starting at `offset`.
 * Returns the matrix and the offset one past its payload.
 */
export function decodeMatrix(blob: Buffer, offset = 0, what = "matrix"): { matrix: Matrix; next: number } {
  if (blob.length - offset < HEADER_BYTES) {
    throw new FormatError(`${what}: truncated matrix header`, "DataError", { offset });
  }
  if (!blob.subarray(offset, offset + 4).equals(MAGIC)) {
    throw new FormatError(`${what}: bad magic, expected FPLS`, "DataError", { offset });
  }
  const version = blob.readUInt8(offset + 4);
  if (version !== FORMAT_VERSION) {
    throw new FormatError(
      `${what}: unsupported matrix format version ${version}`,
      "DataError",
      { version },
    );
  }
  const rowsBig = blob.readBigUInt64LE(offset + 5);
  const colsBig = blob.readBigUInt64LE(offset + 13);
  if (rowsBig < 1n || colsBig < 1n || rowsBig > 0xffffffffn || colsBig > 0xffffffffn) {
    throw new FormatError(
      `${what}: invalid dimensions ${rowsBig}x${colsBig}`,
      "DataError",
      { rows: String(rowsBig), cols: String(colsBig) },
    );
  }
  const rows = Number(rowsBig);
  const cols = Number(colsBig);
  const start = offset + HEADER_BYTES;
  const payload = rows * cols * 8;
  if (blob.length - start < payload) {
    throw new FormatError(
      `${what}: payload needs ${payload} bytes, found ${blob.length - start}`,
      "DataError",
      { needed: payload, found: blob.length - start },
    );
  }
  const data = new Float64Array(rows * cols);
  const view = new DataView(blob.buffer, blob.byteOffset + start, payload);
  for (let i = 0; i < data.length; i += 1) {
    data[i] = view.getFloat64(i * 8, true);
  }
  return { matrix: { rows, cols, data }, next: start + payload };
}

/** Deserialize a whole binary matrix file (exactly one block, no trailing bytes). */
export function decodeMatrixFile(blob: Buffer, what = "matrix file"): Matrix {
  const { matrix, next } = decodeMatrix(blob, 0, what);
  if (next !== blob.length) {
    throw new FormatError(
      `${what}: ${blob.length - next} trailing bytes after matrix payload`,
      "DataError",
      { trailing: blob.length - next },
    );
  }
  return matrix;
}

/**
 * Shortest decimal form that parses back to the identical double.
 * JavaScript number-to-string already guarantees the round trip; negative
 * zero is the one case it prints without the sign.
 */
export function formatValue(value: number): string {
  if (!Number.isFinite(value)) {
    throw new DataError(`cannot serialize non-finite value ${value}`, "DataError", {});
  }
  if (Object.is(value, -0)) return "-0.0";
  return String(value);
}

/** Render a matrix as strict numeric CSV text. */
export function encodeCsv(matrix: Matrix): string {
  const lines: string[] = [];
  for (let i = 0; i < matrix.rows; i += 1) {
    const cells: string[] = [];
    for (let j = 0; j < matrix.cols; j += 1) {
      cells.push(formatValue(matrix.data[i * matrix.cols + j] as number));
    }
    lines.push(cells.join(","));
  }
  return lines.join("\n") + "\n";
}

/** Parse strict numeric CSV text into a matrix. */
export function decodeCsv(text: string, what = "csv"): Matrix {
  const rows: number[][] = [];
  let width: number | null = null;
  const lines = text.split(/\r?\n/);
  for (let lineNo = 0; lineNo < lines.length; lineNo += 1) {
    const line = lines[lineNo] as string;
    if (line.trim() === "") continue;
    const cells = line.split(",");
    if (width === null) {
      width = cells.length;
    } else if (cells.length !== width) {
      throw new DataError(
        `${what}: line ${lineNo + 1} has ${cells.length} values, expected ${width}`,
        "DataError",
        { line: lineNo + 1, cols: cells.length, expected: width },
      );
    }
    const parsed: number[] = [];
    for (let col = 0; col < cells.length; col += 1) {
      const text = (cells[col] as string).trim();
      const value = Number(text);
      if (text === "" || Number.isNaN(value)) {
        throw new DataError(
          `${what}: cannot parse ${JSON.stringify(text)} at line ${lineNo + 1}, column ${col + 1}`,
          "DataError",
          { line: lineNo + 1, col: col + 1 },
        );
      }
      if (!Number.isFinite(value)) {
        throw new DataError(
          `${what}: non-finite value at line ${lineNo + 1}, column ${col + 1}`,
          "DataError",
          { line: lineNo + 1, col: col + 1 },
        );
      }
      parsed.push(value);
    }
    rows.push(parsed);
  }
  if (rows.length === 0) {
    throw new DataError(`${what}: no data rows`, "DataError", {});
  }
  return toMatrix(rows, what);
}
