#!/usr/bin/env node
/**
 * icb-plot --kind <ushape|comparison|diagnostics> --in <csv> --out <file>
 *
 * Optional: --x-scale/--y-scale (linear|log). Exit codes: 0 ok, 1 schema or
 * render failure, 2 usage error.
 */

import { readFileSync, writeFileSync } from "fs";
import { pathToFileURL } from "url";

import { FigureKind, FigureSpec, render } from "./figures.js";
import { SchemaMismatchError } from "./schema.js";
import { Scale } from "./svg.js";

const KINDS: FigureKind[] = ["ushape", "comparison", "diagnostics"];
const SCALES: Scale[] = ["linear", "log"];

function usage(): never {
  process.stderr.write(
    "usage: icb-plot --kind <ushape|comparison|diagnostics> --in <csv> --out <file> " +
      "[--x-scale linear|log] [--y-scale linear|log] [--title t] [--x-label xl] [--y-label yl]\n",
  );
  process.exit(2);
}

export function parseArgs(argv: string[]): FigureSpec & { inPath: string; outPath: string } {
  const opts = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) usage();
    opts.set(flag.slice(2), value);
  }
  const kind = opts.get("kind") as FigureKind | undefined;
  const inPath = opts.get("in");
  const outPath = opts.get("out");
  if (!kind || !KINDS.includes(kind) || !inPath || !outPath) usage();
  const xScale = opts.get("x-scale") as Scale | undefined;
  const yScale = opts.get("y-scale") as Scale | undefined;
  if ((xScale && !SCALES.includes(xScale)) || (yScale && !SCALES.includes(yScale))) usage();
  return {
    kind, input: "", inPath, outPath, xScale, yScale,
    title: opts.get("title"),
    xLabel: opts.get("x-label"),
    yLabel: opts.get("y-label"),
  };
}

export function main(argv: string[]): number {
  const spec = parseArgs(argv);
  let input: string;
  try {
    input = readFileSync(spec.inPath, "utf8");
  } catch (err) {
    process.stderr.write(`icb-plot: cannot read ${spec.inPath}: ${(err as Error).message}\n`);
    return 1;
  }
  try {
    const svg = render({ ...spec, input });
    writeFileSync(spec.outPath, svg, "utf8");
    process.stdout.write(`wrote ${spec.outPath}\n`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaMismatchError) {
      process.stderr.write(`icb-plot: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
