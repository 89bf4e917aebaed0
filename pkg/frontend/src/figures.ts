/**
 * The three figure kinds rendered from the harness CSVs.
 *
 * Statistics never go beyond the seed mean / 95% CI aggregation that
 * summary.csv already defines; everything else is drawing.
 */

import {
  DiagnosticRow,
  ResultRow,
  aggregate,
  parseDiagnosticsCsv,
  parseResultsCsv,
} from "./schema.js";
import { Mapper, Panel, Scale, SeriesPoint, SvgBuilder, color, domainOf } from "./svg.js";

export type FigureKind = "ushape" | "comparison" | "diagnostics";

export interface FigureSpec {
  kind: FigureKind;
  input: string; // CSV text
  xScale?: Scale;
  yScale?: Scale;
  title?: string; // overrides the kind's default panel title
  xLabel?: string;
  yLabel?: string;
}

export interface LabelOverrides {
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

const WIDTH = 860;
const HEIGHT = 420;

function panelPair(): [Panel, Panel] {
  return [
    { x: 70, y: 40, width: 330, height: 310 },
    { x: 490, y: 40, width: 330, height: 310 },
  ];
}

function emptyFigure(note: string): string {
  const svg = new SvgBuilder(WIDTH, HEIGHT);
  const [left, right] = panelPair();
  for (const panel of [left, right]) {
    const m = new Mapper(panel, [0, 1], [0, 1]);
    svg.axes(panel, m, "", "", "");
  }
  svg.warning(note);
  return svg.render();
}

function seriesFrom(
  entries: Map<string, { mean: number; ci: number }>,
  positions: number[],
  keyOf: (pos: number) => string,
): SeriesPoint[] {
  return positions
    .filter((pos) => entries.has(keyOf(pos)))
    .map((pos) => {
      const { mean, ci } = entries.get(keyOf(pos))!;
      return { x: pos, y: mean, lo: mean - ci, hi: mean + ci };
    });
}

/** Burn-in U-curves: predictive regret and direction error vs exponent. */
export function renderUShape(
  rows: ResultRow[],
  xScale: Scale = "linear",
  yScale: Scale = "linear",
  labels: LabelOverrides = {},
): string {
  if (rows.length === 0) return emptyFigure("no data rows: empty U-shape input");
  const alphas = [...new Set(rows.map((r) => r.alpha))].sort((a, b) => a - b);
  const svg = new SvgBuilder(WIDTH, HEIGHT);
  const [left, right] = panelPair();
  const metrics: ["pred_regret" | "dir_error", string, Panel][] = [
    ["pred_regret", "predictive regret", left],
    ["dir_error", "direction error", right],
  ];
  for (const [metric, label, panel] of metrics) {
    const agg = aggregate(rows, (r) => String(r.alpha), (r) => r[metric]);
    const points = seriesFrom(agg, alphas, String);
    const ys = points.flatMap((p) => [p.lo as number, p.hi as number, p.y]);
    const m = new Mapper(panel, domainOf(alphas, xScale), domainOf(ys, yScale), xScale, yScale);
    svg.axes(
      panel,
      m,
      labels.xLabel ?? "burn-in exponent",
      labels.yLabel ?? label,
      labels.title ?? `${label} vs burn-in`,
    );
    const stroke = color(metric === "pred_regret" ? 0 : 1);
    svg.band(m, points, stroke, metric);
    svg.line(m, points, stroke, metric);
  }
  return svg.render();
}

/** Strategy comparison vs horizon: one curve per algorithm label. */
export function renderComparison(
  rows: ResultRow[],
  xScale: Scale = "log",
  yScale: Scale = "log",
  labels: LabelOverrides = {},
): string {
  if (rows.length === 0) return emptyFigure("no data rows: empty comparison input");
  const ns = [...new Set(rows.map((r) => r.N))].sort((a, b) => a - b);
  const algorithms = [...new Set(rows.map((r) => r.algorithm))].sort();
  const svg = new SvgBuilder(WIDTH, HEIGHT);
  const panel: Panel = { x: 80, y: 40, width: 600, height: 320 };

  const allSeries: [string, SeriesPoint[]][] = algorithms.map((algo) => {
    const mine = rows.filter((r) => r.algorithm === algo);
    const agg = aggregate(mine, (r) => String(r.N), (r) => r.dir_error);
    return [algo, seriesFrom(agg, ns, String)];
  });
  const ys = allSeries.flatMap(([, pts]) => pts.flatMap((p) => [p.lo as number, p.hi as number, p.y]));
  const m = new Mapper(panel, domainOf(ns, xScale), domainOf(ys, yScale), xScale, yScale);
  svg.axes(
    panel,
    m,
    labels.xLabel ?? "horizon N",
    labels.yLabel ?? "direction error",
    labels.title ?? "strategies vs horizon",
  );
  allSeries.forEach(([algo, pts], i) => {
    svg.band(m, pts, color(i), algo);
    svg.line(m, pts, color(i), algo);
  });
  svg.legend(
    panel.x + panel.width + 20,
    panel.y + 10,
    allSeries.map(([algo], i) => [algo, color(i)]),
  );
  return svg.render();
}

/** Trajectory diagnostics: per-bin accuracy bars and the agreement curve. */
export function renderDiagnostics(rows: DiagnosticRow[], labels: LabelOverrides = {}): string {
  if (rows.length === 0) return emptyFigure("no data rows: empty diagnostics input");
  const svg = new SvgBuilder(WIDTH, HEIGHT);
  const [left, right] = panelPair();

  const bins = rows.filter((r) => r.series === "bin_accuracy");
  const binPositions = [...new Set(bins.map((r) => r.position))].sort((a, b) => a - b);
  const binAgg = aggregate(bins, (r) => String(r.position), (r) => r.value);
  const binPoints = seriesFrom(binAgg, binPositions, String);
  const mLeft = new Mapper(left, domainOf([0, ...binPositions.map((p) => p + 1)], "linear", 0.02), [0, 1.05]);
  svg.axes(
    left,
    mLeft,
    labels.xLabel ?? "time bin",
    labels.yLabel ?? "imitation accuracy",
    labels.title ?? "within-bin predictability",
  );
  if (binPoints.length > 0) {
    const barWidth = Math.max(6, (left.width / Math.max(binPositions.length, 1)) * 0.6);
    svg.bars(mLeft, binPoints, color(2), "bin_accuracy", barWidth);
  }

  const agreement = rows.filter((r) => r.series === "agreement");
  const windowStarts = [...new Set(agreement.map((r) => r.position))].sort((a, b) => a - b);
  const agreeAgg = aggregate(agreement, (r) => String(r.position), (r) => r.value);
  const agreePoints = seriesFrom(agreeAgg, windowStarts, String);
  const mRight = new Mapper(right, domainOf(windowStarts, "linear", 0.02), [0, 1.05]);
  svg.axes(right, mRight, "window start round", "action agreement", "late-policy agreement");
  if (agreePoints.length > 0) {
    svg.band(mRight, agreePoints, color(3), "agreement");
    svg.line(mRight, agreePoints, color(3), "agreement");
  }
  if (binPoints.length === 0 && agreePoints.length === 0) {
    svg.warning("no bin_accuracy or agreement series in input");
  }
  return svg.render();
}

/** Dispatch on figure kind; the input is the raw CSV text. */
export function render(spec: FigureSpec): string {
  const labels = { title: spec.title, xLabel: spec.xLabel, yLabel: spec.yLabel };
  if (spec.kind === "ushape") {
    return renderUShape(parseResultsCsv(spec.input), spec.xScale ?? "linear", spec.yScale ?? "linear", labels);
  }
  if (spec.kind === "comparison") {
    return renderComparison(parseResultsCsv(spec.input), spec.xScale ?? "log", spec.yScale ?? "log", labels);
  }
  return renderDiagnostics(parseDiagnosticsCsv(spec.input), labels);
}
