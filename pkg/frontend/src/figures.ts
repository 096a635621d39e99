import type { ColormapName } from "./colormap.js";
import { gridMax, gridMin, type Grid } from "./grid.js";
import {
  axes,
  colorbar,
  formatValue,
  heatmapCells,
  legend,
  linePath,
  scatterDots,
  svgDocument,
  tag,
  text,
  type Domain,
  type Rect,
} from "./svg.js";

export type FigureKind =
  | "energy-slice"
  | "mu-composition"
  | "snapshots"
  | "nucleation-map"
  | "learning-curve"
  | "lowest-path"
  | "time-series";

export const FIGURE_KINDS: FigureKind[] = [
  "energy-slice",
  "mu-composition",
  "snapshots",
  "nucleation-map",
  "learning-curve",
  "lowest-path",
  "time-series",
];

/** Presentation knobs shared by every figure kind. */
export interface FigureOptions {
  colormap?: ColormapName;
  /** Override the x axis (line/scatter figures). */
  xRange?: Domain;
  /** Override the y axis (line/scatter figures). */
  yRange?: Domain;
  /** Override the color range (raster figures). */
  vRange?: Domain;
}

const MARGIN = { top: 34, right: 30, bottom: 64, left: 82 };
const PALETTE = [
  "#4464ad", "#c0392b", "#2e7d32", "#8e44ad",
  "#e67e22", "#16a085", "#7f8c8d", "#2c3e50",
];

function pick(i: number): string {
  return PALETTE[i % PALETTE.length]!;
}

function finiteExtent(values: number[]): Domain | undefined {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return lo <= hi ? [lo, hi] : undefined;
}

/** Extent padded for plotting; [0, 1] when no finite data exists. */
function padDomain(extent: Domain | undefined, frac = 0.05): Domain {
  if (extent === undefined) return [0, 1];
  const [lo, hi] = extent;
  if (lo === hi) {
    const pad = 0.5 + Math.abs(lo) * frac;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

/** Axis domain covering cell edges when tick values are cell centers. */
function centersToEdges(values: number[]): Domain {
  const lo = values[0]!;
  const hi = values[values.length - 1]!;
  if (values.length < 2 || lo === hi) return [lo - 0.5, hi + 0.5];
  const half = (hi - lo) / (values.length - 1) / 2;
  return [lo - half, hi + half];
}

// ── energy-slice ────────────────────────────────────────

export interface AxisSpec {
  label: string;
  min: number;
  max: number;
}

export interface SlicePanel {
  name: string;
  rows: AxisSpec;
  cols: AxisSpec;
  grid: Grid;
}

/** Heatmap panels of the free-energy surface, one per stored slice. */
export function energySliceFigure(slices: SlicePanel[], opts: FigureOptions = {}): string {
  const cmap = opts.colormap ?? "viridis";
  const panel = 250;
  const barGap = 56;
  const stride = MARGIN.left + panel + barGap;
  const width = stride * Math.max(1, slices.length) + MARGIN.right;
  const height = MARGIN.top + panel + MARGIN.bottom;
  const parts: string[] = [];
  for (let i = 0; i < slices.length; i++) {
    const s = slices[i]!;
    const rect: Rect = { x: MARGIN.left + stride * i, y: MARGIN.top, width: panel, height: panel };
    const vmin = opts.vRange ? opts.vRange[0] : gridMin(s.grid);
    const vmax = opts.vRange ? opts.vRange[1] : gridMax(s.grid);
    const frame = axes(rect, [s.cols.min, s.cols.max], [s.rows.min, s.rows.max], {
      xLabel: s.cols.label,
      yLabel: s.rows.label,
      title: s.name,
      grid: false,
    });
    parts.push(heatmapCells(frame, s.grid, vmin, vmax, cmap));
    parts.push(frame.svg);
    parts.push(colorbar(
      { x: rect.x + panel + 10, y: rect.y, width: 14, height: panel },
      vmin, vmax, cmap,
    ));
  }
  return svgDocument(width, height, parts.join("\n"));
}

// ── mu-composition ──────────────────────────────────────

export interface MuCompositionData {
  temperature: number[];
  composition: number[];
  mu: number[];
}

/** Sampled chemical potential against composition, one color per temperature. */
export function muCompositionFigure(data: MuCompositionData, opts: FigureOptions = {}): string {
  const width = 560;
  const height = 420;
  const rect: Rect = {
    x: MARGIN.left, y: MARGIN.top,
    width: width - MARGIN.left - MARGIN.right,
    height: height - MARGIN.top - MARGIN.bottom,
  };
  const xDomain = opts.xRange ?? padDomain(finiteExtent(data.composition));
  const yDomain = opts.yRange ?? padDomain(finiteExtent(data.mu));
  const frame = axes(rect, xDomain, yDomain, {
    xLabel: "composition",
    yLabel: "chemical potential (eV)",
    title: "sampled chemical potential",
  });
  const temps = [...new Set(data.temperature)].sort((a, b) => a - b);
  const parts: string[] = [frame.svg];
  const entries: Array<[string, string]> = [];
  for (let i = 0; i < temps.length; i++) {
    const t = temps[i]!;
    const xs: number[] = [];
    const ys: number[] = [];
    for (let k = 0; k < data.temperature.length; k++) {
      if (data.temperature[k] === t) {
        xs.push(data.composition[k]!);
        ys.push(data.mu[k]!);
      }
    }
    parts.push(scatterDots(frame, xs, ys, pick(i)));
    entries.push([`T = ${formatValue(t)} K`, pick(i)]);
  }
  parts.push(legend(frame, entries));
  return svgDocument(width, height, parts.join("\n"));
}

// ── snapshots ───────────────────────────────────────────

export interface Snapshot {
  label: string;
  composition: Grid;
  order: Grid;
}

/**
 * Field snapshots over time: composition on the top row, summed order
 * below, colors shared within each row, per-panel min/max annotations.
 */
export function snapshotsFigure(snaps: Snapshot[], opts: FigureOptions = {}): string {
  const cmap = opts.colormap ?? "viridis";
  const panel = 150;
  const gapX = 18;
  const gapY = 58;
  const left = 70;
  const top = 40;
  const n = Math.max(1, snaps.length);
  const width = left + n * (panel + gapX) + 76;
  const height = top + 2 * panel + gapY + 52;

  const rowSpecs = [
    { name: "composition", get: (s: Snapshot) => s.composition },
    { name: "order", get: (s: Snapshot) => s.order },
  ] as const;
  const parts: string[] = [];
  for (let r = 0; r < rowSpecs.length; r++) {
    const spec = rowSpecs[r]!;
    const grids = snaps.map(spec.get);
    const ext = finiteExtent(grids.flatMap((g) => [gridMin(g), gridMax(g)]));
    const [vmin, vmax] = opts.vRange ?? ext ?? [0, 1];
    const y = top + r * (panel + gapY);
    parts.push(text(16, y + panel / 2, spec.name, {
      "font-size": 12, fill: "#222222", "text-anchor": "middle",
      transform: `rotate(-90 16 ${y + panel / 2})`,
    }));
    for (let i = 0; i < snaps.length; i++) {
      const snap = snaps[i]!;
      const grid = grids[i]!;
      const rect: Rect = { x: left + i * (panel + gapX), y, width: panel, height: panel };
      const frame = {
        rect,
        xDomain: [0, grid.cols] as Domain,
        yDomain: [0, grid.rows] as Domain,
        sx: (v: number) => rect.x + (v / grid.cols) * panel,
        sy: (v: number) => rect.y + panel - (v / grid.rows) * panel,
        svg: "",
      };
      parts.push(heatmapCells(frame, grid, vmin, vmax, cmap));
      parts.push(tag("rect", {
        x: rect.x, y: rect.y, width: panel, height: panel,
        fill: "none", stroke: "#222222", "stroke-width": 1,
      }));
      if (r === 0) {
        parts.push(text(rect.x + panel / 2, y - 8, snap.label, {
          "text-anchor": "middle", "font-size": 12, fill: "#222222",
        }));
      }
      parts.push(text(rect.x + panel / 2, y + panel + 16,
        `min ${formatValue(gridMin(grid))}`, {
          "text-anchor": "middle", "font-size": 11, fill: "#222222",
        }));
      parts.push(text(rect.x + panel / 2, y + panel + 30,
        `max ${formatValue(gridMax(grid))}`, {
          "text-anchor": "middle", "font-size": 11, fill: "#222222",
        }));
    }
    parts.push(colorbar({
      x: left + n * (panel + gapX) + 6, y, width: 14, height: panel,
    }, vmin, vmax, cmap));
  }
  return svgDocument(width, height, parts.join("\n"));
}

// ── nucleation-map ──────────────────────────────────────

export interface NucleationMapData {
  voltage: number[];
  composition: number[];
  probability: number[];
  rate: number[];
}

function pivotMap(
  rowVals: number[],
  colVals: number[],
  rows: number[],
  cols: number[],
  values: number[],
): Grid {
  const data = new Float64Array(rowVals.length * colVals.length).fill(NaN);
  for (let k = 0; k < values.length; k++) {
    const r = rowVals.indexOf(rows[k]!);
    const c = colVals.indexOf(cols[k]!);
    if (r >= 0 && c >= 0) data[r * colVals.length + c] = values[k]!;
  }
  return { rows: rowVals.length, cols: colVals.length, data };
}

/**
 * Nucleation sweep over voltage and matrix composition: element
 * probability on the left, decadic log of the rate on the right
 * (cells that never nucleate stay gray).
 */
export function nucleationMapFigure(data: NucleationMapData, opts: FigureOptions = {}): string {
  const cmap = opts.colormap ?? "viridis";
  const voltages = [...new Set(data.voltage)].sort((a, b) => a - b);
  const comps = [...new Set(data.composition)].sort((a, b) => a - b);
  const logRate = data.rate.map((r) => (r > 0 ? Math.log10(r) : NaN));
  const panels = [
    {
      title: "nucleation probability",
      grid: pivotMap(voltages, comps, data.voltage, data.composition, data.probability),
      range: (opts.vRange ?? [0, 1]) as Domain,
    },
    {
      title: "log10 nucleation rate",
      grid: pivotMap(voltages, comps, data.voltage, data.composition, logRate),
      range: padDomain(finiteExtent(logRate), 0),
    },
  ];
  const panel = 240;
  const barGap = 60;
  const stride = MARGIN.left + panel + barGap;
  const width = stride * panels.length + MARGIN.right;
  const height = MARGIN.top + panel + MARGIN.bottom;
  const parts: string[] = [];
  for (let i = 0; i < panels.length; i++) {
    const p = panels[i]!;
    const rect: Rect = { x: MARGIN.left + stride * i, y: MARGIN.top, width: panel, height: panel };
    const frame = axes(rect, centersToEdges(comps), centersToEdges(voltages), {
      xLabel: "matrix composition",
      yLabel: "voltage (V)",
      title: p.title,
      grid: false,
    });
    parts.push(heatmapCells(frame, p.grid, p.range[0], p.range[1], cmap));
    parts.push(frame.svg);
    parts.push(colorbar(
      { x: rect.x + panel + 10, y: rect.y, width: 14, height: panel },
      p.range[0], p.range[1], cmap,
    ));
  }
  return svgDocument(width, height, parts.join("\n"));
}

// ── learning-curve ──────────────────────────────────────

export interface LearningCurveData {
  epoch: number[];
  loss: number[];
}

/** Training loss against epoch, log-scaled when every loss is positive. */
export function learningCurveFigure(data: LearningCurveData, opts: FigureOptions = {}): string {
  const width = 560;
  const height = 420;
  const rect: Rect = {
    x: MARGIN.left, y: MARGIN.top,
    width: width - MARGIN.left - MARGIN.right,
    height: height - MARGIN.top - MARGIN.bottom,
  };
  const useLog = data.loss.length > 0 && data.loss.every((l) => l > 0);
  const ys = useLog ? data.loss.map(Math.log10) : data.loss;
  const xDomain = opts.xRange ?? padDomain(finiteExtent(data.epoch), 0.02);
  const yDomain = opts.yRange ?? padDomain(finiteExtent(ys));
  const yTicks = useLog ? logTicks(yDomain) : undefined;
  const frame = axes(rect, xDomain, yDomain, {
    xLabel: "epoch",
    yLabel: "training loss",
    title: "training history",
    yTicks,
    yTickLabels: yTicks?.map((v) => formatValue(Math.pow(10, v))),
  });
  const body = [frame.svg, linePath(frame, data.epoch, ys, pick(0))];
  return svgDocument(width, height, body.join("\n"));
}

function logTicks(domain: Domain): number[] {
  const lo = Math.ceil(domain[0] - 1e-9);
  const hi = Math.floor(domain[1] + 1e-9);
  const ticks: number[] = [];
  if (hi - lo >= 1) {
    const step = Math.max(1, Math.round((hi - lo) / 5));
    for (let v = lo; v <= hi; v += step) ticks.push(v);
    return ticks;
  }
  return [domain[0], (domain[0] + domain[1]) / 2, domain[1]];
}

// ── lowest-path ─────────────────────────────────────────

export interface LowestPathData {
  composition: number[];
  energy: number[];
  /** Minimizing order parameters, one inner array per non-conserved slot. */
  orderParams: number[][];
}

/** Lowest free energy over composition, with the minimizing order parameters below. */
export function lowestPathFigure(data: LowestPathData, opts: FigureOptions = {}): string {
  const width = 560;
  const panelH = 210;
  const gapY = 58;
  const height = MARGIN.top + 2 * panelH + gapY + MARGIN.bottom;
  const plotW = width - MARGIN.left - MARGIN.right;
  const xDomain = opts.xRange ?? padDomain(finiteExtent(data.composition), 0.02);

  const topRect: Rect = { x: MARGIN.left, y: MARGIN.top, width: plotW, height: panelH };
  const topFrame = axes(topRect, xDomain, opts.yRange ?? padDomain(finiteExtent(data.energy)), {
    xLabel: "composition",
    yLabel: "free energy (eV)",
    title: "lowest free-energy path",
  });
  const parts = [topFrame.svg, linePath(topFrame, data.composition, data.energy, pick(0))];

  const allEta = data.orderParams.flat();
  const botRect: Rect = {
    x: MARGIN.left, y: MARGIN.top + panelH + gapY, width: plotW, height: panelH,
  };
  const botFrame = axes(botRect, xDomain, padDomain(finiteExtent(allEta)), {
    xLabel: "composition",
    yLabel: "order parameter",
  });
  parts.push(botFrame.svg);
  const entries: Array<[string, string]> = [];
  for (let k = 0; k < data.orderParams.length; k++) {
    parts.push(linePath(botFrame, data.composition, data.orderParams[k]!, pick(k)));
    entries.push([`slot ${k + 1}`, pick(k)]);
  }
  parts.push(legend(botFrame, entries));
  return svgDocument(width, height, parts.join("\n"));
}

// ── time-series ─────────────────────────────────────────

export interface TimeSeriesData {
  time: number[];
  meanComposition: number[];
  energy: number[];
  domains: number[];
}

/** Simulation time series: mean composition, total energy, domain count. */
export function timeSeriesFigure(data: TimeSeriesData, opts: FigureOptions = {}): string {
  const width = 560;
  const panelH = 150;
  const gapY = 52;
  const height = MARGIN.top + 3 * panelH + 2 * gapY + MARGIN.bottom;
  const plotW = width - MARGIN.left - MARGIN.right;
  const xDomain = opts.xRange ?? padDomain(finiteExtent(data.time), 0.02);
  const panels = [
    { label: "mean composition", ys: data.meanComposition },
    { label: "total energy (eV)", ys: data.energy },
    { label: "domain count", ys: data.domains },
  ];
  const parts: string[] = [];
  for (let i = 0; i < panels.length; i++) {
    const p = panels[i]!;
    const rect: Rect = {
      x: MARGIN.left, y: MARGIN.top + i * (panelH + gapY), width: plotW, height: panelH,
    };
    const frame = axes(rect, xDomain, padDomain(finiteExtent(p.ys)), {
      xLabel: i === panels.length - 1 ? "time" : "",
      yLabel: p.label,
      title: i === 0 ? "phase-field evolution" : undefined,
    });
    parts.push(frame.svg);
    parts.push(linePath(frame, data.time, p.ys, pick(i)));
  }
  return svgDocument(width, height, parts.join("\n"));
}
