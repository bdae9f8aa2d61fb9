/**
 * Pure SVG line-chart geometry: scales, polyline paths, ticks, and
 * nearest-point hover lookup. Rendering to the DOM happens in main.ts; this
 * module only turns series data into coordinates so it can be unit-tested.
 */

import type { SeriesPayload } from "./types.js";

export interface ChartOptions {
  width: number;
  height: number;
  marginLeft: number;
  marginRight: number;
  marginTop: number;
  marginBottom: number;
}

export const DEFAULT_OPTIONS: ChartOptions = {
  width: 640,
  height: 360,
  marginLeft: 56,
  marginRight: 16,
  marginTop: 12,
  marginBottom: 40,
};

export const LINE_COLORS = ["#2c6fbb", "#c23b22", "#2e8540", "#8a4fbf", "#b8860b"];

export interface ChartPoint {
  x: number;
  y: number;
  px: number;
  py: number;
}

export interface ChartLine {
  label: string;
  color: string;
  path: string;
  points: ChartPoint[];
}

export interface Tick {
  value: number;
  pixel: number;
  text: string;
}

export interface ChartModel {
  lines: ChartLine[];
  xTicks: Tick[];
  yTicks: Tick[];
  xName: string;
  yName: string;
  options: ChartOptions;
  xDomain: [number, number];
  yDomain: [number, number];
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!isFinite(lo)) return [0, 1];
  if (lo === hi) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.1 : 1;
    return [lo - pad, hi + pad];
  }
  return [lo, hi];
}

/** Round tick positions covering [lo, hi] at a 1/2/5 step. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo;
  if (span <= 0) return [lo];
  const rawStep = span / Math.max(1, count);
  const magnitude = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = magnitude;
  for (const mult of [1, 2, 5, 10]) {
    if (magnitude * mult >= rawStep) {
      step = magnitude * mult;
      break;
    }
  }
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-9; v += step) {
    ticks.push(Number(v.toFixed(12)));
  }
  return ticks;
}

export function formatValue(value: number): string {
  if (Number.isInteger(value)) return String(value);
  const abs = Math.abs(value);
  if (abs !== 0 && (abs < 0.001 || abs >= 100000)) return value.toExponential(2);
  return String(Number(value.toPrecision(4)));
}

export function buildChart(
  series: SeriesPayload[],
  options: ChartOptions = DEFAULT_OPTIONS,
): ChartModel {
  const allX = series.flatMap((s) => s.points.map((p) => p[0]));
  const allY = series.flatMap((s) => s.points.map((p) => p[1]));
  const xDomain = extent(allX);
  const yDomain = extent(allY);
  const innerW = options.width - options.marginLeft - options.marginRight;
  const innerH = options.height - options.marginTop - options.marginBottom;
  const sx = (x: number) =>
    options.marginLeft + ((x - xDomain[0]) / (xDomain[1] - xDomain[0])) * innerW;
  const sy = (y: number) =>
    options.marginTop + innerH - ((y - yDomain[0]) / (yDomain[1] - yDomain[0])) * innerH;

  const lines: ChartLine[] = series.map((s, i) => {
    const points = s.points.map(([x, y]) => ({ x, y, px: sx(x), py: sy(y) }));
    const path = points
      .map((p, j) => `${j === 0 ? "M" : "L"}${p.px.toFixed(2)},${p.py.toFixed(2)}`)
      .join("");
    return { label: s.label, color: LINE_COLORS[i % LINE_COLORS.length], path, points };
  });
  return {
    lines,
    xTicks: niceTicks(xDomain[0], xDomain[1]).map((v) => ({
      value: v,
      pixel: sx(v),
      text: formatValue(v),
    })),
    yTicks: niceTicks(yDomain[0], yDomain[1]).map((v) => ({
      value: v,
      pixel: sy(v),
      text: formatValue(v),
    })),
    xName: series[0]?.x_name ?? "x",
    yName: series[0]?.y_name ?? "y",
    options,
    xDomain,
    yDomain,
  };
}

export interface HoverReadout {
  x: number;
  pixel: number;
  entries: { label: string; y: number; py: number; color: string }[];
}

/**
 * Values of every curve at the grid point nearest the pointer, for the
 * hover tooltip (precise x/y readout across all band curves).
 */
export function hoverReadout(model: ChartModel, pointerX: number): HoverReadout | null {
  if (!model.lines.length || !model.lines[0].points.length) return null;
  const reference = model.lines[0].points;
  let best = 0;
  let bestDist = Infinity;
  reference.forEach((p, i) => {
    const d = Math.abs(p.px - pointerX);
    if (d < bestDist) {
      bestDist = d;
      best = i;
    }
  });
  const x = reference[best].x;
  const entries = model.lines
    .map((line) => {
      const match = line.points.find((p) => p.x === x) ?? line.points[best];
      return match ? { label: line.label, y: match.y, py: match.py, color: line.color } : null;
    })
    .filter((e): e is NonNullable<typeof e> => e !== null);
  return { x, pixel: reference[best].px, entries };
}
