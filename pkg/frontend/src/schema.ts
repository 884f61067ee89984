import Papa from "papaparse";

export const X_COLUMNS = ["wallclock_s", "iteration", "passes"] as const;
export const Y_COLUMNS = ["grad_norm", "objective"] as const;

export type XColumn = (typeof X_COLUMNS)[number];
export type YColumn = (typeof Y_COLUMNS)[number];

const REQUIRED_COLUMNS = [
  "run_id",
  "method",
  "repeat",
  "iteration",
  "passes",
  "wallclock_s",
  "grad_norm",
  "objective",
  "seed",
] as const;

export interface MetricsRow {
  runId: string;
  method: string;
  repeat: number;
  iteration: number;
  passes: number;
  wallclockS: number;
  gradNorm: number;
  objective: number;
  seed: number;
}

export class SchemaMismatch extends Error {
  constructor(file: string, reason: string) {
    super(`${file}: ${reason}`);
    this.name = "SchemaMismatch";
  }
}

export class EmptyInput extends Error {
  constructor(message: string) {
    super(message);
    this.name = "EmptyInput";
  }
}

function toNumber(file: string, field: string, raw: string, line: number): number {
  const v = Number(raw);
  if (!Number.isFinite(v)) {
    throw new SchemaMismatch(file, `non-numeric ${field} ${JSON.stringify(raw)} on data row ${line}`);
  }
  return v;
}

/** Parse one metrics CSV, validating the header and every field. */
export function parseMetricsCsv(file: string, text: string): MetricsRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaMismatch(file, `${e.message} (row ${e.row})`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const col of REQUIRED_COLUMNS) {
    if (!fields.includes(col)) {
      throw new SchemaMismatch(file, `missing column ${JSON.stringify(col)}`);
    }
  }
  return parsed.data.map((row, i) => {
    const r: MetricsRow = {
      runId: row.run_id,
      method: row.method,
      repeat: toNumber(file, "repeat", row.repeat, i + 1),
      iteration: toNumber(file, "iteration", row.iteration, i + 1),
      passes: toNumber(file, "passes", row.passes, i + 1),
      wallclockS: toNumber(file, "wallclock_s", row.wallclock_s, i + 1),
      gradNorm: toNumber(file, "grad_norm", row.grad_norm, i + 1),
      objective: toNumber(file, "objective", row.objective, i + 1),
      seed: toNumber(file, "seed", row.seed, i + 1),
    };
    if (r.gradNorm < 0) {
      throw new SchemaMismatch(file, `negative grad_norm on data row ${i + 1}`);
    }
    return r;
  });
}

export function xValue(row: MetricsRow, column: XColumn): number {
  switch (column) {
    case "wallclock_s":
      return row.wallclockS;
    case "iteration":
      return row.iteration;
    case "passes":
      return row.passes;
  }
}

export function yValue(row: MetricsRow, column: YColumn): number {
  return column === "grad_norm" ? row.gradNorm : row.objective;
}
