export type ColormapName = "viridis" | "gray" | "bluered";

type Rgb = [number, number, number];

// Evenly spaced anchor colors; sampling interpolates linearly between them.
const ANCHORS: Record<ColormapName, Rgb[]> = {
  viridis: [
    [68, 1, 84],
    [72, 40, 120],
    [62, 74, 137],
    [49, 104, 142],
    [38, 130, 142],
    [31, 158, 137],
    [53, 183, 121],
    [109, 205, 89],
    [180, 222, 44],
    [253, 231, 37],
  ],
  gray: [
    [15, 15, 15],
    [245, 245, 245],
  ],
  bluered: [
    [59, 76, 192],
    [221, 221, 221],
    [180, 4, 38],
  ],
};

export const COLORMAP_NAMES = Object.keys(ANCHORS) as ColormapName[];

function hex2(v: number): string {
  return Math.round(v).toString(16).padStart(2, "0");
}

/** Color at t in [0, 1] (clamped) as "#rrggbb". */
export function sampleColormap(name: ColormapName, t: number): string {
  const anchors = ANCHORS[name];
  const tt = Number.isFinite(t) ? Math.min(1, Math.max(0, t)) : 0;
  const pos = tt * (anchors.length - 1);
  const lo = Math.min(anchors.length - 2, Math.floor(pos));
  const frac = pos - lo;
  const a = anchors[lo]!;
  const b = anchors[lo + 1]!;
  const r = a[0] + (b[0] - a[0]) * frac;
  const g = a[1] + (b[1] - a[1]) * frac;
  const bl = a[2] + (b[2] - a[2]) * frac;
  return `#${hex2(r)}${hex2(g)}${hex2(bl)}`;
}
