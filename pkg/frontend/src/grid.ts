import { ParseError } from "./csv.js";

/** A dense row-major 2D field read from a grid artifact. */
export interface Grid {
  rows: number;
  cols: number;
  data: Float64Array;
}

const MAGIC = "OBGR";
const HEADER_BYTES = 16;
const ITEM_BYTES: Record<number, number> = { 0: 8, 1: 4 };

/**
 * Parse a binary grid artifact: 16-byte header (magic "OBGR",
 * little-endian u32 rows, u32 cols, u16 dtype tag, u16 pad) followed by
 * a row-major payload. Tag 0 is float64, tag 1 is float32.
 */
export function parseGrid(buf: Uint8Array, what: string): Grid {
  if (buf.byteLength < HEADER_BYTES) {
    throw new ParseError(`${what}: ${buf.byteLength} bytes is too short for a grid header`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  const magic = String.fromCharCode(buf[0]!, buf[1]!, buf[2]!, buf[3]!);
  if (magic !== MAGIC) {
    throw new ParseError(`${what}: bad magic ${JSON.stringify(magic)}, expected "${MAGIC}"`);
  }
  const rows = view.getUint32(4, true);
  const cols = view.getUint32(8, true);
  const tag = view.getUint16(12, true);
  const itemBytes = ITEM_BYTES[tag];
  if (itemBytes === undefined) {
    throw new ParseError(`${what}: unknown dtype tag ${tag}`);
  }
  if (rows === 0 || cols === 0) {
    throw new ParseError(`${what}: empty grid (${rows} x ${cols})`);
  }
  const expected = HEADER_BYTES + rows * cols * itemBytes;
  if (buf.byteLength !== expected) {
    throw new ParseError(
      `${what}: payload is ${buf.byteLength - HEADER_BYTES} bytes, ` +
      `expected ${rows} x ${cols} x ${itemBytes}`,
    );
  }
  const data = new Float64Array(rows * cols);
  for (let i = 0; i < rows * cols; i++) {
    data[i] =
      tag === 0
        ? view.getFloat64(HEADER_BYTES + i * 8, true)
        : view.getFloat32(HEADER_BYTES + i * 4, true);
  }
  return { rows, cols, data };
}

export function gridMin(grid: Grid): number {
  let m = Infinity;
  for (const v of grid.data) if (v < m) m = v;
  return m;
}

export function gridMax(grid: Grid): number {
  let m = -Infinity;
  for (const v of grid.data) if (v > m) m = v;
  return m;
}
