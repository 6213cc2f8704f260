#!/usr/bin/env node
/**
 * Command-line front end.
 *
 *   extract --method <tag> --manifest <path> --out <dir> [--weights <dir>]
 *   corr    --manifest <path> --pairs all --out <dir>
 *   models
 *
 * `extract` writes per-subset descriptor files for one scene, `corr`
 * writes per-pair correspondence files, and `models` lists the catalog.
 * Exit codes: 0 on success, 2 for usage or configuration problems,
 * 1 for runtime failures.
 */
import { parseArgs } from "node:util";

import { extractCorrespondences, extractDescriptors } from "./extract.js";
import { formatModelTable, UnknownMethodError } from "./registry.js";
import { WeightsMissingError } from "./model.js";

class UsageError extends Error {}

function required(values: Record<string, unknown>, name: string): string {
  const v = values[name];
  if (typeof v !== "string" || v.length === 0) {
    throw new UsageError(`--${name} is required`);
  }
  return v;
}

async function runExtract(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      method: { type: "string" },
      manifest: { type: "string" },
      out: { type: "string" },
      weights: { type: "string", default: "weights" },
    },
  });
  const summary = await extractDescriptors(
    required(values, "method"),
    required(values, "manifest"),
    required(values, "out"),
    values.weights as string,
  );
  for (const subset of ["A", "B"]) {
    console.log(`wrote ${summary.descriptorFiles[subset]}`);
  }
  if (summary.skipped.length > 0) {
    console.log(`skipped ${summary.skipped.length} unreadable image(s)`);
  }
}

function runCorr(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      manifest: { type: "string" },
      pairs: { type: "string" },
      out: { type: "string" },
    },
  });
  const pairs = required(values, "pairs");
  if (pairs !== "all") {
    throw new UsageError(`--pairs supports only 'all', got '${pairs}'`);
  }
  const summary = extractCorrespondences(
    required(values, "manifest"),
    required(values, "out"),
  );
  console.log(
    `scene ${summary.sceneId}: wrote ${summary.pairsWritten} pair file(s)` +
      (summary.pairsSkipped ? `, skipped ${summary.pairsSkipped}` : ""),
  );
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === "models") {
      console.log(formatModelTable());
      return 0;
    }
    if (command === "extract") {
      await runExtract(rest);
      return 0;
    }
    if (command === "corr") {
      runCorr(rest);
      return 0;
    }
    throw new UsageError(
      `unknown command '${command ?? ""}'; expected extract, corr, or models`,
    );
  } catch (err) {
    if (
      err instanceof UsageError ||
      err instanceof UnknownMethodError ||
      (err as { code?: string }).code === "ERR_PARSE_ARGS_UNKNOWN_OPTION"
    ) {
      process.stderr.write(`error: ${(err as Error).message}\n`);
      return 2;
    }
    if (err instanceof WeightsMissingError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

// Run only when invoked as a script (node dist/cli.js ...), not when the
// module is imported by tests.
const entryBase = process.argv[1]?.split("/").pop();
if (entryBase !== undefined && import.meta.url.endsWith(`/${entryBase}`)) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
