import {
  EmptyInput,
  MetricsRow,
  XColumn,
  YColumn,
  xValue,
  yValue,
} from "./schema.js";

export interface Point {
  x: number;
  y: number;
}

export interface MethodCurves {
  method: string;
  repeats: number;
  /** Shared x grid (sorted union of every repeat's x values). */
  grid: number[];
  median: number[];
  low: number[];
  high: number[];
}

/** Median with the even-count convention of averaging the middle pair. */
export function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  const mid = sorted.length >> 1;
  return sorted.length % 2 === 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}

/** Piecewise-linear interpolation, clamped to the series endpoints. */
export function interpolate(series: Point[], x: number): number {
  if (x <= series[0].x) return series[0].y;
  const last = series[series.length - 1];
  if (x >= last.x) return last.y;
  let lo = 0;
  let hi = series.length - 1;
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1;
    if (series[mid].x <= x) lo = mid;
    else hi = mid;
  }
  const a = series[lo];
  const b = series[hi];
  if (b.x === a.x) return a.y;
  const t = (x - a.x) / (b.x - a.x);
  return a.y + t * (b.y - a.y);
}

function repeatSeries(
  rows: MetricsRow[],
  x: XColumn,
  y: YColumn,
): Map<number, Point[]> {
  const byRepeat = new Map<number, Point[]>();
  for (const row of rows) {
    const pts = byRepeat.get(row.repeat) ?? [];
    pts.push({ x: xValue(row, x), y: yValue(row, y) });
    byRepeat.set(row.repeat, pts);
  }
  for (const pts of byRepeat.values()) {
    pts.sort((a, b) => a.x - b.x);
  }
  return byRepeat;
}

/**
 * Collapse one method's runs into a median curve and a min-max envelope on
 * the union x grid; repeats with unaligned x values are linearly
 * interpolated (clamped at their endpoints).
 */
export function aggregateMethod(
  method: string,
  rows: MetricsRow[],
  x: XColumn,
  y: YColumn,
): MethodCurves {
  const byRepeat = repeatSeries(rows, x, y);
  if (byRepeat.size === 0) {
    throw new EmptyInput(`method ${method} has no rows`);
  }
  const grid = [...new Set(rows.map((r) => xValue(r, x)))].sort((a, b) => a - b);
  const series = [...byRepeat.values()];
  const med: number[] = [];
  const low: number[] = [];
  const high: number[] = [];
  for (const gx of grid) {
    const ys = series.map((s) => interpolate(s, gx));
    med.push(median(ys));
    low.push(Math.min(...ys));
    high.push(Math.max(...ys));
  }
  return { method, repeats: byRepeat.size, grid, median: med, low, high };
}

/** One MethodCurves per method, ordered by first appearance in the input. */
export function aggregateAll(
  rows: MetricsRow[],
  x: XColumn,
  y: YColumn,
): MethodCurves[] {
  if (rows.length === 0) {
    throw new EmptyInput("no data rows in any input file");
  }
  const byMethod = new Map<string, MetricsRow[]>();
  for (const row of rows) {
    const group = byMethod.get(row.method) ?? [];
    group.push(row);
    byMethod.set(row.method, group);
  }
  return [...byMethod.entries()].map(([m, group]) => aggregateMethod(m, group, x, y));
}
