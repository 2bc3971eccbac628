/**
 * Subprocess plumbing: locating the tool, the version handshake, and the
 * translation of failures into typed exceptions.
 *
 * The bindings never compute anything numeric themselves — every operation
 * shells out to the command line tool and exchanges data through its
 * documented artifacts (CSV and binary matrices, model files, JSON
 * reports). The tool is found via the `FASTPLS_CLI` environment variable
 * (a command line, split on whitespace) or defaults to
 * `python3 -m fastpls.cli` (the interpreter can be overridden with
 * `FASTPLS_PYTHON`).
 *
 * Before the first real invocation, `fastpls version` is run once per
 * resolved command and its reported library and artifact-format versions
 * are checked against what these bindings understand; a mismatch raises
 * `VersionError` rather than risking misread bytes later.
 */

import { spawnSync } from "node:child_process";

import { CliError, UsageError, VersionError, errorFromReport } from "./errors.js";

/** Library version line these bindings were written against (major.minor). */
export const SUPPORTED_TOOL_VERSION = "0.1";
export const SUPPORTED_MATRIX_FORMAT = 1;
export const SUPPORTED_MODEL_FORMAT = 1;
export const SUPPORTED_REPORT_FORMAT = 1;

const MAX_OUTPUT_BYTES = 1 << 29;

/** The resolved command vector for one tool invocation. */
export function resolveCommand(env: NodeJS.ProcessEnv = process.env): string[] {
  const override = env["FASTPLS_CLI"]?.trim();
  if (override) {
    return override.split(/\s+/);
  }
  const python = env["FASTPLS_PYTHON"]?.trim() || "python3";
  return [python, "-m", "fastpls.cli"];
}

export interface RunResult {
  stdout: string;
  stderr: string;
}

function runRaw(command: string[], args: string[], extraEnv?: Record<string, string>): RunResult {
  const [head, ...rest] = command;
  if (!head) {
    throw new CliError("empty tool command", "", {});
  }
  const result = spawnSync(head, [...rest, ...args], {
    encoding: "utf-8",
    maxBuffer: MAX_OUTPUT_BYTES,
    env: extraEnv ? { ...process.env, ...extraEnv } : process.env,
  });
  if (result.error) {
    throw new CliError(
      `could not run ${command.join(" ")}: ${result.error.message}`,
      "",
      { command: command.join(" ") },
    );
  }
  const status = result.status ?? -1;
  if (status !== 0) {
    const stderr = (result.stderr ?? "").trim();
    if (stderr.startsWith("{")) {
      try {
        const payload = JSON.parse(stderr) as { error?: Record<string, unknown> };
        if (payload.error && typeof payload.error === "object") {
          const err = payload.error as {
            type?: string;
            message?: string;
            details?: Record<string, unknown>;
          };
          throw errorFromReport(status, err);
        }
      } catch (exc) {
        if (exc instanceof Error && exc.name !== "SyntaxError") throw exc;
      }
    }
    if (status === 2) {
      throw new UsageError(stderr || "command line usage error", "", { command: args[0] ?? "" });
    }
    throw new CliError(
      `${command.join(" ")} ${args.join(" ")} exited with code ${status}: ${stderr}`,
      "",
      { exitCode: status },
    );
  }
  return { stdout: result.stdout ?? "", stderr: result.stderr ?? "" };
}

/** What `fastpls version` reports. */
export interface ToolVersion {
  name: string;
  version: string;
  matrixFormatVersion: number;
  modelFormatVersion: number;
  reportFormatVersion: number;
}

const handshakeCache = new Map<string, ToolVersion>();

function majorMinor(version: string): string {
  const parts = version.split(".");
  return parts.slice(0, 2).join(".");
}

/**
 * Run the version handshake for `command`, raising `VersionError` unless
 * the tool's library version line and every artifact-format version match
 * what these bindings support. The result is cached per command.
 */
export function handshake(command: string[] = resolveCommand()): ToolVersion {
  const key = JSON.stringify(command);
  const cached = handshakeCache.get(key);
  if (cached) return cached;
  const { stdout } = runRaw(command, ["version"]);
  let payload: Record<string, unknown>;
  try {
    payload = JSON.parse(stdout) as Record<string, unknown>;
  } catch {
    throw new VersionError(
      `version handshake failed: ${command.join(" ")} did not print version JSON`,
      "",
      { stdout: stdout.slice(0, 200) },
    );
  }
  const name = payload["name"];
  const version = payload["version"];
  const matrix = payload["matrix_format_version"];
  const model = payload["model_format_version"];
  const report = payload["report_format_version"];
  if (name !== "fastpls" || typeof version !== "string") {
    throw new VersionError(
      `version handshake failed: unexpected tool identity ${JSON.stringify(name)}`,
      "",
      { name, version },
    );
  }
  if (majorMinor(version) !== SUPPORTED_TOOL_VERSION) {
    throw new VersionError(
      `unsupported tool version ${version}; these bindings support ${SUPPORTED_TOOL_VERSION}.x`,
      "",
      { version, supported: SUPPORTED_TOOL_VERSION },
    );
  }
  if (
    matrix !== SUPPORTED_MATRIX_FORMAT ||
    model !== SUPPORTED_MODEL_FORMAT ||
    report !== SUPPORTED_REPORT_FORMAT
  ) {
    throw new VersionError(
      `unsupported artifact formats (matrix=${matrix}, model=${model}, report=${report}); ` +
        `these bindings support matrix=${SUPPORTED_MATRIX_FORMAT}, ` +
        `model=${SUPPORTED_MODEL_FORMAT}, report=${SUPPORTED_REPORT_FORMAT}`,
      "",
      { matrix, model, report },
    );
  }
  const tool: ToolVersion = {
    name,
    version,
    matrixFormatVersion: matrix,
    modelFormatVersion: model,
    reportFormatVersion: report,
  };
  handshakeCache.set(key, tool);
  return tool;
}

/** Drop cached handshakes (used when tests swap the tool out from under us). */
export function resetHandshake(): void {
  handshakeCache.clear();
}

/**
 * Run one subcommand after the handshake, returning captured stdout.
 * `extraEnv` entries are overlaid on the inherited environment (for
 * example `FASTPLS_THREADS`).
 */
export function runCli(args: string[], extraEnv?: Record<string, string>): RunResult {
  const command = resolveCommand();
  handshake(command);
  return runRaw(command, args, extraEnv);
}
