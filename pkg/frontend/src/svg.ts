import { MethodCurves } from "./aggregate.js";
import { EmptyInput, XColumn, YColumn } from "./schema.js";

export interface RenderOptions {
  x: XColumn;
  y: YColumn;
  logY: boolean;
  width?: number;
  height?: number;
}

const MARGIN = { top: 20, right: 20, bottom: 45, left: 70 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

interface Scale {
  (v: number): number;
  ticks: number[];
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1;
  const f = ((v: number) => outLo + ((v - lo) / span) * (outHi - outLo)) as Scale;
  const step = span / 5;
  f.ticks = Array.from({ length: 6 }, (_, i) => lo + i * step);
  return f;
}

function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = lhi - llo || 1;
  const f = ((v: number) => outLo + ((Math.log10(v) - llo) / span) * (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let e = Math.ceil(llo); e <= Math.floor(lhi); e += 1) {
    ticks.push(10 ** e);
  }
  f.ticks = ticks.length >= 2 ? ticks : [lo, hi];
  return f;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(4)));
}

function pathData(xs: number[], ys: number[], sx: Scale, sy: Scale): string {
  return xs
    .map((x, i) => `${i === 0 ? "M" : "L"}${sx(x).toFixed(2)},${sy(ys[i]).toFixed(2)}`)
    .join("");
}

/**
 * Deterministic SVG figure: per method a median polyline plus, when there is
 * more than one repeat, a min-max envelope polygon. The plotted data limits
 * are recorded as data-* attributes on the root element so they can be read
 * back programmatically.
 */
export function renderSvg(curves: MethodCurves[], options: RenderOptions): string {
  const width = options.width ?? 640;
  const height = options.height ?? 480;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  // on a log axis only positive values are representable
  const usable = curves.map((c) => {
    if (!options.logY) return c;
    const keep = c.grid.map((_, i) => c.median[i] > 0 && c.low[i] > 0 && c.high[i] > 0);
    const pick = (arr: number[]) => arr.filter((_, i) => keep[i]);
    return { ...c, grid: pick(c.grid), median: pick(c.median), low: pick(c.low), high: pick(c.high) };
  });
  const xs = usable.flatMap((c) => c.grid);
  const ys = usable.flatMap((c) => [...c.low, ...c.high]);
  if (xs.length === 0) {
    throw new EmptyInput("no plottable points (log axis removed every value?)");
  }
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = linearScale(xMin, xMax, MARGIN.left, MARGIN.left + plotW);
  const sy = options.logY
    ? logScale(yMin, yMax, MARGIN.top + plotH, MARGIN.top)
    : linearScale(yMin, yMax, MARGIN.top + plotH, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12" ` +
      `data-x-column="${options.x}" data-y-column="${options.y}" ` +
      `data-y-scale="${options.logY ? "log" : "linear"}" ` +
      `data-x-min="${xMin}" data-x-max="${xMax}" data-y-min="${yMin}" data-y-max="${yMax}">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  const axisY = MARGIN.top + plotH;
  parts.push(
    `<g class="axes" stroke="black">` +
      `<line x1="${MARGIN.left}" y1="${axisY}" x2="${MARGIN.left + plotW}" y2="${axisY}"/>` +
      `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${axisY}"/>` +
      `</g>`,
  );
  for (const t of sx.ticks) {
    const px = sx(t).toFixed(2);
    parts.push(
      `<line x1="${px}" y1="${axisY}" x2="${px}" y2="${axisY + 5}" stroke="black"/>` +
        `<text class="x-tick" x="${px}" y="${axisY + 18}" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of sy.ticks) {
    const py = sy(t).toFixed(2);
    parts.push(
      `<line x1="${MARGIN.left - 5}" y1="${py}" x2="${MARGIN.left}" y2="${py}" stroke="black"/>` +
        `<text class="y-tick" x="${MARGIN.left - 8}" y="${py}" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 8}" text-anchor="middle">${options.x}</text>`,
  );
  parts.push(
    `<text x="14" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 14 ${MARGIN.top + plotH / 2})">${options.y}</text>`,
  );

  usable.forEach((c, i) => {
    const color = PALETTE[i % PALETTE.length];
    parts.push(`<g class="series" data-method="${c.method}" data-repeats="${c.repeats}">`);
    if (c.repeats > 1 && c.grid.length > 0) {
      const upper = c.grid.map((x, j) => `${sx(x).toFixed(2)},${sy(c.high[j]).toFixed(2)}`);
      const lower = [...c.grid.keys()]
        .reverse()
        .map((j) => `${sx(c.grid[j]).toFixed(2)},${sy(c.low[j]).toFixed(2)}`);
      parts.push(
        `<polygon class="envelope" points="${[...upper, ...lower].join(" ")}" ` +
          `fill="${color}" fill-opacity="0.2" stroke="none"/>`,
      );
    }
    parts.push(
      `<path class="median" d="${pathData(c.grid, c.median, sx, sy)}" ` +
        `fill="none" stroke="${color}" stroke-width="1.5"/>`,
    );
    parts.push(`</g>`);
  });

  usable.forEach((c, i) => {
    const color = PALETTE[i % PALETTE.length];
    const ly = MARGIN.top + 16 * (i + 1);
    parts.push(
      `<g class="legend-entry"><line x1="${MARGIN.left + plotW - 90}" y1="${ly}" ` +
        `x2="${MARGIN.left + plotW - 70}" y2="${ly}" stroke="${color}" stroke-width="1.5"/>` +
        `<text x="${MARGIN.left + plotW - 64}" y="${ly + 4}">${c.method}</text></g>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}
