import { readFileSync, readdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { ColormapName } from "./colormap.js";
import {
  ParseError,
  looseNumericColumn,
  numericColumn,
  parseCsv,
  type Table,
} from "./csv.js";
import {
  energySliceFigure,
  learningCurveFigure,
  lowestPathFigure,
  muCompositionFigure,
  nucleationMapFigure,
  snapshotsFigure,
  timeSeriesFigure,
  type FigureKind,
  type FigureOptions,
  type SlicePanel,
  type Snapshot,
} from "./figures.js";
import { parseGrid } from "./grid.js";
import type { Domain } from "./svg.js";

/** Everything needed to turn one artifact directory into one figure. */
export interface FigureSpec {
  kind: FigureKind;
  /** Directory holding the producing stage's artifacts. */
  inputDir: string;
  colormap?: ColormapName;
  xRange?: Domain;
  yRange?: Domain;
  vRange?: Domain;
}

function readText(dir: string, name: string): string {
  try {
    return readFileSync(join(dir, name), "utf8");
  } catch {
    throw new ParseError(`missing artifact ${name} in ${dir}`);
  }
}

function readTable(dir: string, name: string): Table {
  return parseCsv(readText(dir, name), name);
}

function readBinaryGrid(dir: string, name: string) {
  let buf: Buffer;
  try {
    buf = readFileSync(join(dir, name));
  } catch {
    throw new ParseError(`missing artifact ${name} in ${dir}`);
  }
  return parseGrid(buf, name);
}

// ── per-kind loaders ────────────────────────────────────

interface SliceFile {
  name: string;
  grid: string;
  rows: { label: string; min: number; max: number };
  cols: { label: string; min: number; max: number };
}

function loadSlices(dir: string): SlicePanel[] {
  const raw = readText(dir, "slices.json");
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch (e) {
    throw new ParseError(`slices.json: ${(e as Error).message}`);
  }
  const slices = (parsed as { slices?: unknown }).slices;
  if (!Array.isArray(slices) || slices.length === 0) {
    throw new ParseError('slices.json: expected a non-empty "slices" array');
  }
  return slices.map((entry) => {
    const s = entry as Partial<SliceFile>;
    for (const field of ["name", "grid", "rows", "cols"] as const) {
      if (s[field] === undefined) {
        throw new ParseError(`slices.json: slice entry missing "${field}"`);
      }
    }
    return {
      name: s.name!,
      rows: s.rows!,
      cols: s.cols!,
      grid: readBinaryGrid(dir, s.grid!),
    };
  });
}

function loadSnapshots(dir: string): Snapshot[] {
  let names: string[];
  try {
    names = readdirSync(dir);
  } catch {
    throw new ParseError(`cannot list artifact directory ${dir}`);
  }
  const indices = names
    .map((n) => /^x_(\d+)\.bin$/.exec(n))
    .filter((m): m is RegExpExecArray => m !== null)
    .map((m) => m[1]!)
    .sort();
  if (indices.length === 0) {
    throw new ParseError(`no x_*.bin snapshot grids in ${dir}`);
  }
  return indices.map((idx) => ({
    label: `snapshot ${idx}`,
    composition: readBinaryGrid(dir, `x_${idx}.bin`),
    order: readBinaryGrid(dir, `order_${idx}.bin`),
  }));
}

// ── rendering ───────────────────────────────────────────

/** Read the artifacts a figure kind needs from spec.inputDir and render it. */
export function renderFigure(spec: FigureSpec): string {
  const opts: FigureOptions = {
    colormap: spec.colormap,
    xRange: spec.xRange,
    yRange: spec.yRange,
    vRange: spec.vRange,
  };
  const dir = spec.inputDir;
  switch (spec.kind) {
    case "energy-slice":
      return energySliceFigure(loadSlices(dir), opts);
    case "mu-composition": {
      const t = readTable(dir, "records.csv");
      return muCompositionFigure({
        temperature: numericColumn(t, "T", "records.csv"),
        composition: numericColumn(t, "eta0", "records.csv"),
        mu: numericColumn(t, "mu0", "records.csv"),
      }, opts);
    }
    case "snapshots":
      return snapshotsFigure(loadSnapshots(dir), opts);
    case "nucleation-map": {
      const t = readTable(dir, "cnt_map.csv");
      return nucleationMapFigure({
        voltage: numericColumn(t, "v", "cnt_map.csv"),
        composition: numericColumn(t, "x_mat", "cnt_map.csv"),
        probability: numericColumn(t, "p_n", "cnt_map.csv"),
        rate: looseNumericColumn(t, "j_star", "cnt_map.csv"),
      }, opts);
    }
    case "learning-curve": {
      const t = readTable(dir, "history.csv");
      return learningCurveFigure({
        epoch: numericColumn(t, "epoch", "history.csv"),
        loss: numericColumn(t, "loss", "history.csv"),
      }, opts);
    }
    case "lowest-path": {
      const t = readTable(dir, "path.csv");
      return lowestPathFigure({
        composition: numericColumn(t, "eta0", "path.csv"),
        energy: numericColumn(t, "g_min", "path.csv"),
        orderParams: [1, 2, 3, 4, 5, 6].map((k) =>
          numericColumn(t, `eta${k}`, "path.csv")),
      }, opts);
    }
    case "time-series": {
      const t = readTable(dir, "series.csv");
      return timeSeriesFigure({
        time: numericColumn(t, "t", "series.csv"),
        meanComposition: numericColumn(t, "mean_x", "series.csv"),
        energy: numericColumn(t, "energy", "series.csv"),
        domains: numericColumn(t, "domains", "series.csv"),
      }, opts);
    }
  }
}

/** Render spec and write the SVG to outPath. */
export function writeFigure(spec: FigureSpec, outPath: string): void {
  writeFileSync(outPath, renderFigure(spec) + "\n", "utf8");
}
