#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { renderToFile } from "./render.js";
import { X_COLUMNS, XColumn, Y_COLUMNS, YColumn } from "./schema.js";

const argv = yargs(hideBin(process.argv))
  .usage("render --in 'runs/*.csv' --x wallclock_s --y grad_norm --out fig.svg")
  .option("in", {
    type: "string",
    array: true,
    demandOption: true,
    describe: "Metrics CSV paths or globs",
  })
  .option("x", {
    type: "string",
    choices: X_COLUMNS,
    default: "wallclock_s" as XColumn,
  })
  .option("y", {
    type: "string",
    choices: Y_COLUMNS,
    default: "grad_norm" as YColumn,
  })
  .option("out", { type: "string", demandOption: true, describe: "Output SVG path" })
  .option("linear-y", {
    type: "boolean",
    default: false,
    describe: "Force a linear y axis (grad_norm defaults to log)",
  })
  .option("width", { type: "number", default: 640 })
  .option("height", { type: "number", default: 480 })
  .strict()
  .parseSync();

try {
  const out = renderToFile({
    inputs: argv.in,
    x: argv.x,
    y: argv.y,
    logY: argv["linear-y"] ? false : undefined,
    out: argv.out,
    width: argv.width,
    height: argv.height,
  });
  console.log(`wrote ${out}`);
} catch (err) {
  console.error(err instanceof Error ? `${err.name}: ${err.message}` : String(err));
  process.exit(1);
}
