import Papa from "papaparse";

/** Raised when an artifact does not parse or lacks an expected shape. */
export class ParseError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ParseError";
  }
}

export interface Table {
  /** Column names from the first row. */
  header: string[];
  /** Data rows as raw strings, one array per line. */
  rows: string[][];
}

/** Parse a comma-separated artifact into a header and string rows. */
export function parseCsv(text: string, what: string): Table {
  const res = Papa.parse<string[]>(text.trim(), {
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (res.errors.length > 0) {
    const first = res.errors[0]!;
    throw new ParseError(`${what}: ${first.message} (row ${first.row ?? "?"})`);
  }
  const lines = res.data;
  if (lines.length === 0 || lines[0]!.length === 0 || lines[0]![0] === "") {
    throw new ParseError(`${what}: empty or missing header row`);
  }
  const header = lines[0]!;
  const rows = lines.slice(1);
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new ParseError(
        `${what}: row has ${row.length} fields, header has ${header.length}`,
      );
    }
  }
  return { header, rows };
}

/** Index of a named column, or a ParseError naming what is missing. */
export function columnIndex(table: Table, name: string, what: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new ParseError(
      `${what}: missing column "${name}" (have: ${table.header.join(", ")})`,
    );
  }
  return idx;
}

/** One named column as finite numbers. */
export function numericColumn(
  table: Table,
  name: string,
  what: string,
): number[] {
  const idx = columnIndex(table, name, what);
  const out: number[] = [];
  for (let i = 0; i < table.rows.length; i++) {
    const cell = table.rows[i]![idx]!;
    const v = Number(cell);
    if (!Number.isFinite(v)) {
      throw new ParseError(
        `${what}: column "${name}" row ${i + 1}: "${cell}" is not a finite number`,
      );
    }
    out.push(v);
  }
  return out;
}

/** Like numericColumn, but lets non-finite cells through as NaN/Infinity. */
export function looseNumericColumn(
  table: Table,
  name: string,
  what: string,
): number[] {
  const idx = columnIndex(table, name, what);
  return table.rows.map((row) => Number(row[idx]));
}

/** One named column as raw strings. */
export function stringColumn(
  table: Table,
  name: string,
  what: string,
): string[] {
  const idx = columnIndex(table, name, what);
  return table.rows.map((row) => row[idx]!);
}
