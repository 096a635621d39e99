import { sampleColormap, type ColormapName } from "./colormap.js";
import type { Grid } from "./grid.js";

// ── geometry ────────────────────────────────────────────

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export type Domain = [number, number];

/** Map a value from domain to range; degenerate domains map to the range midpoint. */
export function scaleLinear(domain: Domain, range: Domain): (v: number) => number {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

/** 4-7 round tick positions covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, target = 5): number[] {
  if (!Number.isFinite(lo) || !Number.isFinite(hi) || lo === hi) {
    return [lo];
  }
  const span = hi - lo;
  const rawStep = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const mult of [1, 2, 5, 10]) {
    step = mult * mag;
    if (span / step <= target + 1) break;
  }
  const ticks: number[] = [];
  const first = Math.ceil(lo / step - 1e-9) * step;
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Compact deterministic number label. */
export function formatValue(v: number): string {
  if (!Number.isFinite(v)) return String(v);
  if (v === 0) return "0";
  const mag = Math.abs(v);
  if (mag >= 1e4 || mag < 1e-3) {
    return v.toExponential(2).replace(/\.?0+e/, "e");
  }
  let s = v.toPrecision(4);
  if (s.includes(".")) s = s.replace(/\.?0+$/, "");
  return s;
}

// ── elements ────────────────────────────────────────────

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

type AttrValue = string | number;

export function tag(
  name: string,
  attrs: Record<string, AttrValue>,
  content = "",
): string {
  const parts = Object.entries(attrs).map(([k, v]) => {
    const text = typeof v === "number" ? formatCoord(v) : escapeXml(v);
    return `${k}="${text}"`;
  });
  const open = `<${name}${parts.length > 0 ? " " + parts.join(" ") : ""}`;
  return content === "" ? `${open}/>` : `${open}>${content}</${name}>`;
}

function formatCoord(v: number): string {
  return String(Math.round(v * 100) / 100);
}

export function text(
  x: number,
  y: number,
  content: string,
  attrs: Record<string, AttrValue> = {},
): string {
  return tag("text", { x, y, ...attrs }, escapeXml(content));
}

export function svgDocument(width: number, height: number, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
    tag("rect", { x: 0, y: 0, width, height, fill: "#ffffff" }),
    body,
    "</svg>",
  ].join("\n");
}

// ── axes ────────────────────────────────────────────────

export interface AxesOptions {
  xLabel: string;
  yLabel: string;
  title?: string;
  /** Tick positions; computed from the domain when omitted. */
  xTicks?: number[];
  yTicks?: number[];
  /** Labels paired with yTicks (for log axes); formatValue when omitted. */
  yTickLabels?: string[];
  grid?: boolean;
}

export interface Frame {
  rect: Rect;
  xDomain: Domain;
  yDomain: Domain;
  /** Data x to pixel x. */
  sx: (v: number) => number;
  /** Data y to pixel y (flipped: larger values sit higher). */
  sy: (v: number) => number;
  svg: string;
}

const TICK_LEN = 5;
const AXIS_COLOR = "#222222";
const GRID_COLOR = "#dddddd";
const FONT = 12;

/** Build a framed plot area with ticks, labels, and optional gridlines. */
export function axes(rect: Rect, xDomain: Domain, yDomain: Domain, opts: AxesOptions): Frame {
  const sx = scaleLinear(xDomain, [rect.x, rect.x + rect.width]);
  const sy = scaleLinear(yDomain, [rect.y + rect.height, rect.y]);
  const xTicks = opts.xTicks ?? niceTicks(xDomain[0], xDomain[1]);
  const yTicks = opts.yTicks ?? niceTicks(yDomain[0], yDomain[1]);
  const parts: string[] = [];

  if (opts.grid !== false) {
    for (const v of xTicks) {
      const px = sx(v);
      parts.push(tag("line", {
        x1: px, y1: rect.y, x2: px, y2: rect.y + rect.height,
        stroke: GRID_COLOR, "stroke-width": 1,
      }));
    }
    for (const v of yTicks) {
      const py = sy(v);
      parts.push(tag("line", {
        x1: rect.x, y1: py, x2: rect.x + rect.width, y2: py,
        stroke: GRID_COLOR, "stroke-width": 1,
      }));
    }
  }

  parts.push(tag("rect", {
    x: rect.x, y: rect.y, width: rect.width, height: rect.height,
    fill: "none", stroke: AXIS_COLOR, "stroke-width": 1,
  }));

  for (const v of xTicks) {
    const px = sx(v);
    const bottom = rect.y + rect.height;
    parts.push(tag("line", {
      x1: px, y1: bottom, x2: px, y2: bottom + TICK_LEN,
      stroke: AXIS_COLOR, "stroke-width": 1,
    }));
    parts.push(text(px, bottom + TICK_LEN + FONT, formatValue(v), {
      "text-anchor": "middle", "font-size": FONT, fill: AXIS_COLOR,
    }));
  }
  for (let i = 0; i < yTicks.length; i++) {
    const v = yTicks[i]!;
    const py = sy(v);
    parts.push(tag("line", {
      x1: rect.x - TICK_LEN, y1: py, x2: rect.x, y2: py,
      stroke: AXIS_COLOR, "stroke-width": 1,
    }));
    const label = opts.yTickLabels ? opts.yTickLabels[i]! : formatValue(v);
    parts.push(text(rect.x - TICK_LEN - 3, py + FONT / 3, label, {
      "text-anchor": "end", "font-size": FONT, fill: AXIS_COLOR,
    }));
  }

  parts.push(text(rect.x + rect.width / 2, rect.y + rect.height + TICK_LEN + 2.4 * FONT,
    opts.xLabel, { "text-anchor": "middle", "font-size": FONT, fill: AXIS_COLOR }));
  const yLabelX = rect.x - 48;
  const yLabelY = rect.y + rect.height / 2;
  parts.push(text(yLabelX, yLabelY, opts.yLabel, {
    "text-anchor": "middle", "font-size": FONT, fill: AXIS_COLOR,
    transform: `rotate(-90 ${yLabelX} ${yLabelY})`,
  }));
  if (opts.title) {
    parts.push(text(rect.x + rect.width / 2, rect.y - 8, opts.title, {
      "text-anchor": "middle", "font-size": FONT + 1, fill: AXIS_COLOR,
      "font-weight": "bold",
    }));
  }

  return { rect, xDomain, yDomain, sx, sy, svg: parts.join("\n") };
}

// ── marks ───────────────────────────────────────────────

/** Polyline through (xs, ys) in data coordinates. */
export function linePath(frame: Frame, xs: number[], ys: number[], stroke: string): string {
  if (xs.length === 0) return "";
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    const cmd = i === 0 ? "M" : "L";
    pts.push(`${cmd}${formatCoord(frame.sx(xs[i]!))} ${formatCoord(frame.sy(ys[i]!))}`);
  }
  return tag("path", {
    d: pts.join(" "), fill: "none", stroke, "stroke-width": 1.5,
  });
}

export function scatterDots(
  frame: Frame,
  xs: number[],
  ys: number[],
  fill: string,
  r = 2.5,
): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    parts.push(tag("circle", { cx: frame.sx(xs[i]!), cy: frame.sy(ys[i]!), r, fill }));
  }
  return parts.join("\n");
}

/** Small color-keyed legend in the top-right corner of the frame. */
export function legend(frame: Frame, entries: Array<[string, string]>): string {
  const parts: string[] = [];
  const x = frame.rect.x + frame.rect.width - 10;
  let y = frame.rect.y + 14;
  for (const [label, color] of entries) {
    parts.push(tag("line", {
      x1: x - 26, y1: y - 4, x2: x - 10, y2: y - 4,
      stroke: color, "stroke-width": 2.5,
    }));
    parts.push(text(x - 32, y, label, {
      "text-anchor": "end", "font-size": FONT - 1, fill: AXIS_COLOR,
    }));
    y += FONT + 4;
  }
  return parts.join("\n");
}

// ── rasters ─────────────────────────────────────────────

/**
 * Draw a grid as colored cells filling the frame. Row 0 sits at the
 * bottom so row index increases with the y axis; NaN cells are gray.
 */
export function heatmapCells(
  frame: Frame,
  grid: Grid,
  vmin: number,
  vmax: number,
  cmap: ColormapName,
): string {
  const { rect } = frame;
  const cw = rect.width / grid.cols;
  const ch = rect.height / grid.rows;
  const span = vmax - vmin;
  const parts: string[] = [];
  for (let r = 0; r < grid.rows; r++) {
    const y = rect.y + rect.height - (r + 1) * ch;
    for (let c = 0; c < grid.cols; c++) {
      const v = grid.data[r * grid.cols + c]!;
      const fill = Number.isFinite(v)
        ? sampleColormap(cmap, span === 0 ? 0.5 : (v - vmin) / span)
        : "#cccccc";
      parts.push(tag("rect", {
        x: rect.x + c * cw, y, width: cw + 0.3, height: ch + 0.3, fill,
      }));
    }
  }
  return parts.join("\n");
}

/** Vertical colorbar with min/max labels to the right of a frame. */
export function colorbar(
  rect: Rect,
  vmin: number,
  vmax: number,
  cmap: ColormapName,
): string {
  const steps = 32;
  const parts: string[] = [];
  const sh = rect.height / steps;
  for (let i = 0; i < steps; i++) {
    const t = (i + 0.5) / steps;
    parts.push(tag("rect", {
      x: rect.x,
      y: rect.y + rect.height - (i + 1) * sh,
      width: rect.width,
      height: sh + 0.3,
      fill: sampleColormap(cmap, t),
    }));
  }
  parts.push(tag("rect", {
    x: rect.x, y: rect.y, width: rect.width, height: rect.height,
    fill: "none", stroke: AXIS_COLOR, "stroke-width": 1,
  }));
  parts.push(text(rect.x + rect.width + 4, rect.y + FONT / 2 + 2, formatValue(vmax), {
    "font-size": FONT - 1, fill: AXIS_COLOR,
  }));
  parts.push(text(rect.x + rect.width + 4, rect.y + rect.height, formatValue(vmin), {
    "font-size": FONT - 1, fill: AXIS_COLOR,
  }));
  return parts.join("\n");
}
