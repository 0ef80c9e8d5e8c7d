#!/usr/bin/env node
/**
 * Batch figure renderer for solver traces.
 *
 *   render --study <name> --index <path> --out <path.svg> [--linear-y]
 *
 * <name> is one of scaling_factor, quantization_interval,
 * communication_cost, transmitted_bits, constraint_violation, single_run.
 * For single_run, --index points at a trace CSV instead of an index JSON.
 */

import { render, FigureJob, StudyKind, STUDIES } from "./figure";

function parseArgs(argv: string[]): FigureJob {
  if (argv[0] !== "render") {
    throw new Error(`unknown command '${argv[0] ?? ""}'; expected 'render'`);
  }
  let study: string | undefined;
  let index: string | undefined;
  let out: string | undefined;
  let logY: boolean | undefined;
  for (let i = 1; i < argv.length; i++) {
    switch (argv[i]) {
      case "--study":
        study = argv[++i];
        break;
      case "--index":
        index = argv[++i];
        break;
      case "--out":
        out = argv[++i];
        break;
      case "--linear-y":
        logY = false;
        break;
      case "--log-y":
        logY = true;
        break;
      default:
        throw new Error(`unknown argument '${argv[i]}'`);
    }
  }
  if (!study || !index || !out) {
    throw new Error("usage: render --study <name> --index <path> --out <path.svg>");
  }
  if (!STUDIES.includes(study as StudyKind)) {
    throw new Error(`unknown study '${study}'; expected one of ${STUDIES.join(", ")}`);
  }
  const job: FigureJob = { study: study as StudyKind, indexPath: index, outPath: out };
  if (logY !== undefined) job.logY = logY;
  return job;
}

function main(): number {
  try {
    const job = parseArgs(process.argv.slice(2));
    const fig = render(job);
    const what = fig.bars.length > 0
      ? `${fig.bars.length} bars`
      : `${fig.curves.length} curves`;
    console.log(`wrote ${job.outPath} (${what}, ${fig.logY ? "log" : "linear"} y)`);
    return 0;
  } catch (err) {
    console.error(`render: ${(err as Error).message}`);
    return 1;
  }
}

process.exit(main());
