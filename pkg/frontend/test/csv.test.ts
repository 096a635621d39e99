import { describe, expect, it } from "vitest";

import {
  ParseError,
  looseNumericColumn,
  numericColumn,
  parseCsv,
  stringColumn,
} from "../src/csv.js";

describe("parseCsv", () => {
  it("splits header and rows", () => {
    const t = parseCsv("a,b,c\n1,2,3\n4,5,6\n", "t.csv");
    expect(t.header).toEqual(["a", "b", "c"]);
    expect(t.rows).toEqual([["1", "2", "3"], ["4", "5", "6"]]);
  });

  it("accepts a header-only file", () => {
    const t = parseCsv("a,b\n", "t.csv");
    expect(t.header).toEqual(["a", "b"]);
    expect(t.rows).toEqual([]);
  });

  it("rejects empty input", () => {
    expect(() => parseCsv("", "t.csv")).toThrow(ParseError);
  });

  it("rejects ragged rows and names the file", () => {
    expect(() => parseCsv("a,b\n1,2,3\n", "ragged.csv")).toThrow(/ragged\.csv/);
  });
});

describe("columns", () => {
  const table = parseCsv(
    "T,mode,x\n300.0,umbrella,0.12345678901234568\n4000.0,semigrand,inf\n",
    "cols.csv",
  );

  it("extracts numeric columns at full precision", () => {
    expect(numericColumn(table, "T", "cols.csv")).toEqual([300.0, 4000.0]);
    const text = "v\n0.1234567890123456789\n";
    const v = numericColumn(parseCsv(text, "v.csv"), "v", "v.csv")[0]!;
    expect(v).toBe(0.1234567890123456789);
  });

  it("rejects non-finite cells in strict mode", () => {
    expect(() => numericColumn(table, "x", "cols.csv")).toThrow(/not a finite number/);
  });

  it("lets non-finite cells through in loose mode", () => {
    const xs = looseNumericColumn(table, "x", "cols.csv");
    expect(xs[0]).toBeCloseTo(0.12345678901234568, 15);
    expect(Number.isNaN(xs[1])).toBe(true);
  });

  it("keeps strings raw", () => {
    expect(stringColumn(table, "mode", "cols.csv")).toEqual(["umbrella", "semigrand"]);
  });

  it("names the missing column", () => {
    expect(() => numericColumn(table, "nope", "cols.csv")).toThrow(/"nope"/);
  });
});
