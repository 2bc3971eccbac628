/**
 * Acceptance gate for the bindings, one test per contract line:
 *
 * 1. Coefficient-stack parity: the bindings and direct tool invocations
 *    produce bitwise-equal coefficient stacks over the full acceptance
 *    corpus — every size in {50,200}×{10,50}×{1,3}, all 16 preprocessing
 *    combinations, weighted and unweighted.
 * 2. Cross-validation report parity: byte-identical report payloads
 *    (modulo input paths) across the same size grid.
 * 3. The version handshake gates every operation before any work is done.
 *
 * Each test prints exactly one pass/fail line in the runner output.
 */

import { chmodSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, test } from "vitest";

import {
  BoundModel,
  VersionError,
  boundCrossValidate,
  boundFit,
  boundPredict,
  flagsFromBits,
  flagsToString,
  resetHandshake,
  trainingProducts,
  type CvReport,
} from "../src/index.js";
import {
  makeCorpus,
  matrixBytes,
  runToolOk,
  withScratch,
  writeCsv,
  type Corpus,
} from "./helpers.js";

const SIZES: Array<[number, number, number]> = [
  [50, 10, 1],
  [50, 10, 3],
  [50, 50, 1],
  [50, 50, 3],
  [200, 10, 1],
  [200, 10, 3],
  [200, 50, 1],
  [200, 50, 3],
];

const ALL_FLAG_STRINGS = Array.from({ length: 16 }, (_, bits) =>
  flagsToString(flagsFromBits(bits)),
);

function directFit(
  corpus: Corpus,
  flags: string,
  aMax: number,
  weighted: boolean,
): BoundModel {
  return withScratch((dir) => {
    const modelPath = join(dir, "model.fplm");
    const args = [
      "fit",
      "--x", writeCsv(dir, "x.csv", corpus.x),
      "--y", writeCsv(dir, "y.csv", corpus.y),
      "--amax", String(aMax),
      "--flags", flags,
      "--model-out", modelPath,
      "--report-out", join(dir, "report.json"),
      "--no-runtime",
    ];
    if (weighted) {
      args.push(
        "--weights",
        `column:${writeCsv(dir, "w.csv", corpus.weights.map((v) => [v]))}`,
      );
    }
    runToolOk(args);
    return BoundModel.fromBytes(readFileSync(modelPath));
  });
}

describe("bindings acceptance", () => {
  test(
    "coefficient stacks are bitwise-equal to direct tool runs over the full corpus",
    { timeout: 900_000 },
    () => {
      const aMax = 8;
      let casesChecked = 0;
      for (let s = 0; s < SIZES.length; s += 1) {
        const [n, k, m] = SIZES[s] as [number, number, number];
        const corpus = makeCorpus(1000 + n + k + m, n, k, m);
        for (const flags of ALL_FLAG_STRINGS) {
          for (const weighted of [false, true]) {
            const viaBindings = boundFit(corpus.x, corpus.y, {
              aMax,
              flags,
              weights: weighted ? corpus.weights : undefined,
            });
            const direct = directFit(corpus, flags, aMax, weighted);
            expect(viaBindings.aMax).toBe(direct.aMax);
            for (let a = 0; a < aMax; a += 1) {
              const ours = matrixBytes(viaBindings.coefStack[a]!);
              const theirs = matrixBytes(direct.coefStack[a]!);
              if (!ours.equals(theirs)) {
                throw new Error(
                  `coefficient stack mismatch at n=${n} k=${k} m=${m} ` +
                    `flags=${flags} weighted=${weighted} slice=${a + 1}`,
                );
              }
            }
            casesChecked += 1;
          }
        }
      }
      expect(casesChecked).toBe(SIZES.length * 16 * 2);
    },
  );

  test(
    "cross-validation reports are identical to direct tool runs over the size grid",
    { timeout: 300_000 },
    () => {
      // Rotate two preprocessing combinations per size so all 16 appear.
      for (let s = 0; s < SIZES.length; s += 1) {
        const [n, k, m] = SIZES[s] as [number, number, number];
        const corpus = makeCorpus(2000 + n + k + m, n, k, m);
        const assignment = corpus.x.map((_, i) => i % 4);
        for (const offset of [0, 8]) {
          const flags = ALL_FLAG_STRINGS[(s + offset) % 16] as string;
          const weighted = (s + offset) % 2 === 1;
          const viaBindings = boundCrossValidate(corpus.x, corpus.y, assignment, {
            aMax: 5,
            flags,
            metric: "rmse",
            weights: weighted ? corpus.weights : undefined,
          });
          const direct = withScratch((dir) => {
            const reportPath = join(dir, "report.json");
            const args = [
              "cv",
              "--x", writeCsv(dir, "x.csv", corpus.x),
              "--y", writeCsv(dir, "y.csv", corpus.y),
              "--fold-file", writeCsv(dir, "folds.csv", assignment.map((v) => [v])),
              "--amax", "5",
              "--flags", flags,
              "--metric", "rmse",
              "--report-out", reportPath,
              "--no-runtime",
            ];
            if (weighted) {
              args.push(
                "--weights",
                `column:${writeCsv(dir, "w.csv", corpus.weights.map((v) => [v]))}`,
              );
            }
            runToolOk(args);
            return JSON.parse(readFileSync(reportPath, "utf-8")) as CvReport;
          });
          const strip = (report: CvReport): Record<string, unknown> => {
            const config = { ...report.config };
            delete config["x"];
            delete config["y"];
            delete config["fold_file"];
            delete config["weights"];
            return { ...report, config };
          };
          expect(strip(viaBindings)).toEqual(strip(direct));
        }
      }
    },
  );

  test("the version handshake gates every operation", () => {
    const corpus = makeCorpus(42, 12, 3, 1);
    // A model fitted against the real tool, for the predict path.
    const model = boundFit(corpus.x, corpus.y, { aMax: 2, flags: "cx" });

    withScratch((dir) => {
      const script = join(dir, "stale-tool.sh");
      writeFileSync(script, [
        "#!/bin/sh",
        'if [ "$1" = "version" ]; then',
        `  printf '%s\\n' '{"matrix_format_version": 1, "model_format_version": 1, "name": "fastpls", "report_format_version": 1, "version": "3.0.0"}'`,
        "  exit 0",
        "fi",
        "exit 1",
        "",
      ].join("\n"));
      chmodSync(script, 0o755);

      const saved = process.env["FASTPLS_CLI"];
      process.env["FASTPLS_CLI"] = script;
      resetHandshake();
      try {
        expect(() => boundFit(corpus.x, corpus.y, { aMax: 2 })).toThrow(VersionError);
        expect(() => boundPredict(model, corpus.x)).toThrow(VersionError);
        expect(() =>
          boundCrossValidate(corpus.x, corpus.y, { nFolds: 3 }, { aMax: 2 }),
        ).toThrow(VersionError);
        expect(() =>
          trainingProducts(corpus.x, corpus.y, corpus.x.map((_, i) => i % 2)),
        ).toThrow(VersionError);
      } finally {
        if (saved === undefined) delete process.env["FASTPLS_CLI"];
        else process.env["FASTPLS_CLI"] = saved;
        resetHandshake();
      }
    });

    // Back on the real tool, the gate opens again.
    expect(boundPredict(model, corpus.x).rows).toBe(12);
  });
});
