/**
 * Minimal deterministic SVG emission: scales, axes, series lines with
 * confidence bands, bars with error whiskers. No DOM, no dependencies, no
 * timestamps; identical input data produces an identical byte payload.
 */

export type Scale = "linear" | "log";

export interface Panel {
  x: number; // panel origin in figure coordinates
  y: number;
  width: number;
  height: number;
}

export interface SeriesPoint {
  x: number;
  y: number;
  lo?: number;
  hi?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export function color(index: number): string {
  return PALETTE[index % PALETTE.length];
}

function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  return Number(v.toPrecision(6)).toString();
}

/** Tick label: compact fixed-precision, stable across runs. */
export function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 10000 || a < 0.001) return v.toExponential(1).replace("e+", "e");
  return Number(v.toPrecision(4)).toString();
}

export class Mapper {
  constructor(
    readonly panel: Panel,
    readonly xDomain: [number, number],
    readonly yDomain: [number, number],
    readonly xScale: Scale = "linear",
    readonly yScale: Scale = "linear",
  ) {}

  private unit(v: number, domain: [number, number], scale: Scale): number {
    let [lo, hi] = domain;
    if (scale === "log") {
      v = Math.log10(Math.max(v, 1e-300));
      lo = Math.log10(Math.max(lo, 1e-300));
      hi = Math.log10(Math.max(hi, 1e-300));
    }
    if (hi === lo) return 0.5;
    return (v - lo) / (hi - lo);
  }

  px(v: number): number {
    return this.panel.x + this.unit(v, this.xDomain, this.xScale) * this.panel.width;
  }

  py(v: number): number {
    return this.panel.y + (1 - this.unit(v, this.yDomain, this.yScale)) * this.panel.height;
  }
}

export function domainOf(values: number[], scale: Scale, padFrac = 0.05): [number, number] {
  const finite = values.filter((v) => Number.isFinite(v) && (scale !== "log" || v > 0));
  if (finite.length === 0) return scale === "log" ? [0.1, 1] : [0, 1];
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (scale === "log") {
    const pad = (Math.log10(hi) - Math.log10(lo) || 1) * padFrac;
    return [10 ** (Math.log10(lo) - pad), 10 ** (Math.log10(hi) + pad)];
  }
  const pad = (hi - lo || Math.abs(hi) || 1) * padFrac;
  return [lo - pad, hi + pad];
}

export function ticks(domain: [number, number], scale: Scale, count = 5): number[] {
  const [lo, hi] = domain;
  if (scale === "log") {
    const out: number[] = [];
    const start = Math.ceil(Math.log10(Math.max(lo, 1e-300)));
    const end = Math.floor(Math.log10(Math.max(hi, 1e-300)));
    for (let e = start; e <= end; e++) out.push(10 ** e);
    if (out.length >= 2) return out;
    return [lo, Math.sqrt(lo * hi), hi];
  }
  const span = hi - lo;
  if (span <= 0) return [lo];
  const rawStep = span / count;
  const mag = 10 ** Math.floor(Math.log10(rawStep));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? rawStep;
  const first = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = first; v <= hi + step * 1e-9; v += step) out.push(Number(v.toPrecision(12)));
  return out;
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
        `font-family="Helvetica, Arial, sans-serif" font-size="11">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    );
  }

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  text(x: number, y: number, content: string, attrs = ""): void {
    this.parts.push(`<text x="${fmt(x)}" y="${fmt(y)}" ${attrs}>${content}</text>`);
  }

  warning(message: string): void {
    this.text(this.width / 2, this.height / 2, message, 'class="warning" text-anchor="middle" fill="#999"');
  }

  axes(panel: Panel, m: Mapper, xLabel: string, yLabel: string, title: string): void {
    const { x, y, width, height } = panel;
    this.parts.push(
      `<g class="axes" stroke="#333" stroke-width="1">` +
        `<line x1="${fmt(x)}" y1="${fmt(y + height)}" x2="${fmt(x + width)}" y2="${fmt(y + height)}"/>` +
        `<line x1="${fmt(x)}" y1="${fmt(y)}" x2="${fmt(x)}" y2="${fmt(y + height)}"/>` +
        `</g>`,
    );
    for (const t of ticks(m.xDomain, m.xScale)) {
      const px = m.px(t);
      this.parts.push(
        `<line x1="${fmt(px)}" y1="${fmt(y + height)}" x2="${fmt(px)}" y2="${fmt(y + height + 4)}" stroke="#333"/>`,
      );
      this.text(px, y + height + 16, tickLabel(t), 'text-anchor="middle" fill="#333"');
    }
    for (const t of ticks(m.yDomain, m.yScale)) {
      const py = m.py(t);
      this.parts.push(`<line x1="${fmt(x - 4)}" y1="${fmt(py)}" x2="${fmt(x)}" y2="${fmt(py)}" stroke="#333"/>`);
      this.text(x - 7, py + 3, tickLabel(t), 'text-anchor="end" fill="#333"');
    }
    this.text(x + width / 2, y + height + 32, xLabel, 'text-anchor="middle" fill="#333"');
    this.parts.push(
      `<text x="${fmt(x - 42)}" y="${fmt(y + height / 2)}" text-anchor="middle" fill="#333" ` +
        `transform="rotate(-90 ${fmt(x - 42)} ${fmt(y + height / 2)})">${yLabel}</text>`,
    );
    this.text(x + width / 2, y - 8, title, 'text-anchor="middle" font-weight="bold" fill="#111"');
  }

  band(m: Mapper, points: SeriesPoint[], fill: string, series: string): void {
    const usable = points.filter((p) => p.lo !== undefined && p.hi !== undefined);
    if (usable.length < 2) return;
    const upper = usable.map((p) => `${fmt(m.px(p.x))},${fmt(m.py(p.hi as number))}`);
    const lower = [...usable].reverse().map((p) => `${fmt(m.px(p.x))},${fmt(m.py(p.lo as number))}`);
    this.parts.push(
      `<polygon class="ci-band" data-series="${series}" fill="${fill}" fill-opacity="0.18" ` +
        `stroke="none" points="${upper.join(" ")} ${lower.join(" ")}"/>`,
    );
  }

  line(m: Mapper, points: SeriesPoint[], stroke: string, series: string): void {
    const coords = points.map((p) => `${fmt(m.px(p.x))},${fmt(m.py(p.y))}`);
    this.parts.push(
      `<polyline class="mean-line" data-series="${series}" data-points="${points.length}" ` +
        `fill="none" stroke="${stroke}" stroke-width="1.8" points="${coords.join(" ")}"/>`,
    );
    for (const p of points) {
      this.parts.push(
        `<circle class="mean-point" data-series="${series}" cx="${fmt(m.px(p.x))}" cy="${fmt(m.py(p.y))}" ` +
          `r="2.4" fill="${stroke}"/>`,
      );
    }
  }

  bars(m: Mapper, points: SeriesPoint[], fill: string, series: string, barWidth: number): void {
    const base = m.py(Math.max(m.yDomain[0], 0));
    for (const p of points) {
      const cx = m.px(p.x);
      const top = m.py(p.y);
      this.parts.push(
        `<rect class="bar" data-series="${series}" x="${fmt(cx - barWidth / 2)}" y="${fmt(top)}" ` +
          `width="${fmt(barWidth)}" height="${fmt(Math.max(base - top, 0))}" fill="${fill}" fill-opacity="0.75"/>`,
      );
      if (p.lo !== undefined && p.hi !== undefined) {
        this.parts.push(
          `<line class="error-bar" data-series="${series}" x1="${fmt(cx)}" y1="${fmt(m.py(p.lo))}" ` +
            `x2="${fmt(cx)}" y2="${fmt(m.py(p.hi))}" stroke="#222" stroke-width="1"/>`,
        );
      }
    }
  }

  legend(x: number, y: number, entries: [string, string][]): void {
    entries.forEach(([label, stroke], i) => {
      const ly = y + i * 16;
      this.parts.push(
        `<line class="legend-swatch" x1="${fmt(x)}" y1="${fmt(ly)}" x2="${fmt(x + 18)}" y2="${fmt(ly)}" ` +
          `stroke="${stroke}" stroke-width="2.5"/>`,
      );
      this.text(x + 24, ly + 4, label, 'class="legend-label" fill="#333"');
    });
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}
