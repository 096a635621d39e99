#!/usr/bin/env node
import { realpathSync } from "node:fs";
import { fileURLToPath } from "node:url";

import yargs from "yargs";

import { COLORMAP_NAMES, type ColormapName } from "./colormap.js";
import { ParseError } from "./csv.js";
import { FIGURE_KINDS, type FigureKind } from "./figures.js";
import { writeFigure } from "./render.js";
import type { Domain } from "./svg.js";

class UsageError extends Error {}

function parseRange(raw: string | undefined, flag: string): Domain | undefined {
  if (raw === undefined) return undefined;
  const parts = raw.split(",").map(Number);
  if (parts.length !== 2 || parts.some((v) => !Number.isFinite(v))) {
    throw new UsageError(`--${flag} expects "lo,hi", got "${raw}"`);
  }
  return [parts[0]!, parts[1]!];
}

/** Run the figure CLI; returns the process exit code. */
export function main(argv: string[]): number {
  try {
    const args = yargs(argv)
      .scriptName("plot")
      .usage("$0 <kind> --in DIR --out FILE")
      .command("$0 <kind>", "render one figure from pipeline artifacts")
      .positional("kind", {
        describe: "figure kind",
        type: "string",
        choices: FIGURE_KINDS,
      })
      .option("in", {
        type: "string",
        demandOption: true,
        describe: "directory holding the producing stage's artifacts",
      })
      .option("out", {
        type: "string",
        demandOption: true,
        describe: "output SVG path",
      })
      .option("cmap", {
        type: "string",
        choices: COLORMAP_NAMES,
        describe: "colormap name",
      })
      .option("xrange", { type: "string", describe: 'x axis range "lo,hi"' })
      .option("yrange", { type: "string", describe: 'y axis range "lo,hi"' })
      .option("vrange", { type: "string", describe: 'color range "lo,hi"' })
      .strict()
      .exitProcess(false)
      .fail((msg, err) => {
        throw err ?? new UsageError(msg);
      })
      .parseSync();

    writeFigure({
      kind: args.kind as FigureKind,
      inputDir: args.in,
      colormap: args.cmap as ColormapName | undefined,
      xRange: parseRange(args.xrange, "xrange"),
      yRange: parseRange(args.yrange, "yrange"),
      vRange: parseRange(args.vrange, "vrange"),
    }, args.out);
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`);
      return 2;
    }
    if (err instanceof ParseError) {
      console.error(err.message);
      return 1;
    }
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

function invokedDirectly(): boolean {
  const entry = process.argv[1];
  if (entry === undefined) return false;
  try {
    return realpathSync(entry) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  process.exit(main(process.argv.slice(2)));
}
