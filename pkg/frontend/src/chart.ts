/** Trace chart: best and mean fitness per generation as an SVG string.
 * Rendering is a pure function of the trace, so replayed and live state
 * draw identical markup. */

import type { TracePoint } from "./store.js";

export interface ChartOptions {
  width: number;
  height: number;
  margin: number;
}

const DEFAULTS: ChartOptions = { width: 640, height: 240, margin: 32 };

function polyline(
  points: TracePoint[],
  pick: (p: TracePoint) => number,
  xOf: (g: number) => number,
  yOf: (v: number) => number,
  cls: string,
): string {
  const pts = points
    .map((p) => `${xOf(p.generation).toFixed(2)},${yOf(pick(p)).toFixed(2)}`)
    .join(" ");
  return `<polyline class="${cls}" fill="none" points="${pts}"/>`;
}

export function renderTraceChart(
  trace: TracePoint[],
  opts: Partial<ChartOptions> = {},
): string {
  const { width, height, margin } = { ...DEFAULTS, ...opts };
  if (trace.length === 0) {
    return `<svg class="trace" viewBox="0 0 ${width} ${height}"></svg>`;
  }
  const values = trace.flatMap((p) => [p.bestG, p.meanG]);
  const vMin = Math.min(...values);
  const vMax = Math.max(...values);
  const gMax = Math.max(...trace.map((p) => p.generation), 1);
  const span = vMax - vMin || 1;
  const xOf = (g: number) => margin + (g / gMax) * (width - 2 * margin);
  const yOf = (v: number) =>
    height - margin - ((v - vMin) / span) * (height - 2 * margin);
  const last = trace[trace.length - 1];
  return [
    `<svg class="trace" viewBox="0 0 ${width} ${height}">`,
    polyline(trace, (p) => p.bestG, xOf, yOf, "best"),
    polyline(trace, (p) => p.meanG, xOf, yOf, "mean"),
    // the displayed numbers are the service's own byte tokens
    `<text class="label best" x="${width - margin}" y="${margin}">best ${last.bestGRaw}</text>`,
    `<text class="label mean" x="${width - margin}" y="${margin + 16}">mean ${last.meanGRaw}</text>`,
    `</svg>`,
  ].join("");
}
