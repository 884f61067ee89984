import * as fs from "node:fs";
import * as path from "node:path";

import { aggregateAll } from "./aggregate.js";
import {
  EmptyInput,
  MetricsRow,
  X_COLUMNS,
  XColumn,
  Y_COLUMNS,
  YColumn,
  parseMetricsCsv,
} from "./schema.js";
import { renderSvg } from "./svg.js";

export interface PlotSpec {
  inputs: string[]; // file paths or globs (single * in the basename)
  x: XColumn;
  y: YColumn;
  /** Default: log scale iff y is grad_norm. */
  logY?: boolean;
  out: string;
  width?: number;
  height?: number;
}

/** Expand a path whose basename may contain `*`; plain paths pass through. */
export function expandGlob(pattern: string): string[] {
  if (!pattern.includes("*")) return [pattern];
  const dir = path.dirname(pattern);
  const base = path.basename(pattern);
  const re = new RegExp(
    "^" + base.split("*").map((s) => s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&")).join(".*") + "$",
  );
  if (!fs.existsSync(dir)) return [];
  return fs
    .readdirSync(dir)
    .filter((f) => re.test(f))
    .sort()
    .map((f) => path.join(dir, f));
}

export function loadRows(inputs: string[]): MetricsRow[] {
  const files = inputs.flatMap(expandGlob);
  if (files.length === 0) {
    throw new EmptyInput(`no files match ${inputs.join(", ")}`);
  }
  return files.flatMap((f) => parseMetricsCsv(f, fs.readFileSync(f, "utf-8")));
}

export function validateSpec(spec: PlotSpec): void {
  if (spec.inputs.length === 0) {
    throw new EmptyInput("at least one input file is required");
  }
  if (!X_COLUMNS.includes(spec.x)) {
    throw new Error(`invalid x axis ${JSON.stringify(spec.x)}; valid: ${X_COLUMNS.join(", ")}`);
  }
  if (!Y_COLUMNS.includes(spec.y)) {
    throw new Error(`invalid y axis ${JSON.stringify(spec.y)}; valid: ${Y_COLUMNS.join(", ")}`);
  }
}

/** Build the figure for a spec and return the SVG text. */
export function renderConvergence(spec: PlotSpec): string {
  validateSpec(spec);
  const rows = loadRows(spec.inputs);
  const curves = aggregateAll(rows, spec.x, spec.y);
  const logY = spec.logY ?? spec.y === "grad_norm";
  return renderSvg(curves, {
    x: spec.x,
    y: spec.y,
    logY,
    width: spec.width,
    height: spec.height,
  });
}

/** Render and write the output file (vector SVG). */
export function renderToFile(spec: PlotSpec): string {
  const ext = path.extname(spec.out).toLowerCase();
  if (ext !== ".svg") {
    throw new Error(`unsupported output format ${ext || "(none)"}; use a .svg path`);
  }
  const svg = renderConvergence(spec);
  fs.writeFileSync(spec.out, svg + "\n", "utf-8");
  return spec.out;
}
