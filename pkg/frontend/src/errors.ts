/**
 * Error types thrown by the bindings.
 *
 * The command line tool reports failures as one JSON object on stderr,
 * `{"error": {"type": ..., "message": ..., ...details}}`, together with a
 * stable exit code: 2 for usage errors, 3 for data errors, 4 for numeric
 * errors. The bindings re-raise those as native exceptions that keep the
 * original type name and detail fields, so callers can branch on them
 * without string matching.
 */

/** Base class for every error raised by this package. */
export class FastplsError extends Error {
  /** The error type name reported by the tool (e.g. `ZeroVarianceError`). */
  readonly remoteType: string;
  /** Structured detail fields from the error JSON (column indices, shapes, paths...). */
  readonly details: Record<string, unknown>;

  constructor(message: string, remoteType = "", details: Record<string, unknown> = {}) {
    super(message);
    this.name = new.target.name;
    this.remoteType = remoteType;
    this.details = details;
  }
}

/** Invalid inputs: shapes, file contents, unknown labels (exit code 3). */
export class DataError extends FastplsError {}

/** Numerically undefined requests: zero variance under scaling, rank collapse (exit code 4). */
export class NumericError extends FastplsError {}

/** Command line misuse: contradictory or missing options (exit code 2). */
export class UsageError extends FastplsError {}

/** The tool's reported version or artifact-format versions are unsupported. */
export class VersionError extends FastplsError {}

/** The subprocess could not be run or produced undecodable output. */
export class CliError extends FastplsError {}

/** A binary matrix or model payload failed to parse. */
export class FormatError extends DataError {}

/** Rebuild the matching exception from a CLI error JSON object and exit code. */
export function errorFromReport(
  exitCode: number,
  report: { type?: string; message?: string; details?: Record<string, unknown> },
): FastplsError {
  const message = report.message ?? "command failed";
  const remoteType = report.type ?? "";
  const details = report.details ?? {};
  if (exitCode === 4) return new NumericError(message, remoteType, details);
  if (exitCode === 3) return new DataError(message, remoteType, details);
  if (exitCode === 2) return new UsageError(message, remoteType, details);
  return new CliError(message, remoteType, details);
}
