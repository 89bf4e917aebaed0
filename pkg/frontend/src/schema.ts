/**
 * Parsing and validation of the harness's CSV outputs.
 *
 * The column layouts are a fixed contract; any header deviation is refused
 * with the offending column named rather than guessed around.
 */

export const RESULT_COLUMNS = [
  "experiment", "seed", "algorithm", "d", "K", "N", "alpha", "T", "L",
  "pred_regret", "dir_error", "clean_risk", "learner_regret", "wall_ms",
] as const;

export const DIAGNOSTIC_COLUMNS = [
  "experiment", "seed", "algorithm", "series", "position", "value",
] as const;

export interface ResultRow {
  experiment: string;
  seed: number;
  algorithm: string;
  d: number;
  K: number;
  N: number;
  alpha: number;
  T: number;
  L: number;
  pred_regret: number;
  dir_error: number;
  clean_risk: number;
  learner_regret: number;
  wall_ms: number;
}

export interface DiagnosticRow {
  experiment: string;
  seed: number;
  algorithm: string;
  series: string;
  position: number;
  value: number;
}

export class SchemaMismatchError extends Error {
  readonly column: string;

  constructor(column: string, detail: string) {
    super(`results schema mismatch at column "${column}": ${detail}`);
    this.name = "SchemaMismatchError";
    this.column = column;
  }
}

function splitLines(text: string): string[] {
  return text.split(/\r?\n/).filter((line) => line.length > 0);
}

function checkHeader(header: string[], expected: readonly string[]): void {
  const width = Math.max(header.length, expected.length);
  for (let i = 0; i < width; i++) {
    if (i >= expected.length) {
      throw new SchemaMismatchError(header[i], "unexpected extra column");
    }
    if (i >= header.length) {
      throw new SchemaMismatchError(expected[i], "column missing from header");
    }
    if (header[i] !== expected[i]) {
      throw new SchemaMismatchError(expected[i], `found "${header[i]}" in its place`);
    }
  }
}

function numeric(raw: string, column: string, line: number): number {
  const value = Number(raw);
  if (raw === "" || Number.isNaN(value)) {
    throw new SchemaMismatchError(column, `non-numeric value "${raw}" on line ${line}`);
  }
  return value;
}

/** Parse results.csv text; empty data (header only) yields an empty list. */
export function parseResultsCsv(text: string): ResultRow[] {
  const lines = splitLines(text);
  if (lines.length === 0) {
    throw new SchemaMismatchError(RESULT_COLUMNS[0], "input is empty, no header");
  }
  checkHeader(lines[0].split(","), RESULT_COLUMNS);
  return lines.slice(1).map((line, i) => {
    const parts = line.split(",");
    if (parts.length !== RESULT_COLUMNS.length) {
      throw new SchemaMismatchError(
        RESULT_COLUMNS[Math.min(parts.length, RESULT_COLUMNS.length) - 1],
        `row ${i + 2} has ${parts.length} fields`,
      );
    }
    const n = (j: number) => numeric(parts[j], RESULT_COLUMNS[j], i + 2);
    return {
      experiment: parts[0],
      seed: n(1),
      algorithm: parts[2],
      d: n(3),
      K: n(4),
      N: n(5),
      alpha: n(6),
      T: n(7),
      L: n(8),
      pred_regret: n(9),
      dir_error: n(10),
      clean_risk: n(11),
      learner_regret: n(12),
      wall_ms: n(13),
    };
  });
}

/** Parse diagnostics.csv text (the diagnostics experiment's long format). */
export function parseDiagnosticsCsv(text: string): DiagnosticRow[] {
  const lines = splitLines(text);
  if (lines.length === 0) {
    throw new SchemaMismatchError(DIAGNOSTIC_COLUMNS[0], "input is empty, no header");
  }
  checkHeader(lines[0].split(","), DIAGNOSTIC_COLUMNS);
  return lines.slice(1).map((line, i) => {
    const parts = line.split(",");
    if (parts.length !== DIAGNOSTIC_COLUMNS.length) {
      throw new SchemaMismatchError(
        DIAGNOSTIC_COLUMNS[Math.min(parts.length, DIAGNOSTIC_COLUMNS.length) - 1],
        `row ${i + 2} has ${parts.length} fields`,
      );
    }
    return {
      experiment: parts[0],
      seed: numeric(parts[1], "seed", i + 2),
      algorithm: parts[2],
      series: parts[3],
      position: numeric(parts[4], "position", i + 2),
      value: numeric(parts[5], "value", i + 2),
    };
  });
}

export interface MeanCI {
  mean: number;
  ci: number; // 95% half-width over seeds
  n: number;
}

/** Seed mean and 1.96 * sd / sqrt(n) half-width, matching summary.csv. */
export function meanCI(values: number[]): MeanCI {
  const n = values.length;
  const mean = values.reduce((a, b) => a + b, 0) / n;
  if (n < 2) return { mean, ci: 0, n };
  const variance = values.reduce((a, b) => a + (b - mean) ** 2, 0) / (n - 1);
  return { mean, ci: (1.96 * Math.sqrt(variance)) / Math.sqrt(n), n };
}

/** Group rows by a key and reduce one numeric field to mean/CI. */
export function aggregate<T>(
  rows: T[],
  key: (row: T) => string,
  value: (row: T) => number,
): Map<string, MeanCI> {
  const buckets = new Map<string, number[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = buckets.get(k);
    if (bucket) bucket.push(value(row));
    else buckets.set(k, [value(row)]);
  }
  const out = new Map<string, MeanCI>();
  for (const [k, vals] of buckets) out.set(k, meanCI(vals));
  return out;
}
