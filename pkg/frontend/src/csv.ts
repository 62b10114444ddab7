/**
 * Minimal reader for the run-record CSV streams (headered, numeric
 * except for occasional label columns).
 */
import { readFileSync } from "fs";

export interface Table {
  header: string[];
  /** column name -> column index */
  index: Map<string, number>;
  /** raw cell values, row major */
  cells: string[][];
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: empty CSV`);
  }
  const header = lines[0].split(",");
  const index = new Map(header.map((name, i) => [name, i]));
  const cells = lines.slice(1).map((l) => l.split(","));
  return { header, index, cells };
}

export function column(table: Table, name: string, file = "csv"): number[] {
  const i = table.index.get(name);
  if (i === undefined) {
    throw new Error(`${file}: missing column '${name}'`);
  }
  return table.cells.map((row) => Number(row[i]));
}

export function hasColumn(table: Table, name: string): boolean {
  return table.index.has(name);
}

/** Rows matching a string key, e.g. per-station rows of v2g.csv. */
export function filterRows(
  table: Table,
  name: string,
  value: string,
  file = "csv",
): Table {
  const i = table.index.get(name);
  if (i === undefined) {
    throw new Error(`${file}: missing column '${name}'`);
  }
  return {
    header: table.header,
    index: table.index,
    cells: table.cells.filter((row) => row[i] === value),
  };
}

export function writeCsvText(header: string[], rows: number[][]): string {
  const body = rows
    .map((r) => r.map((v) => numberCell(v)).join(","))
    .join("\n");
  return header.join(",") + "\n" + body + "\n";
}

function numberCell(v: number): string {
  // full round-trip precision so re-runs diff byte-identically
  return Object.is(v, -0) ? "0" : String(v);
}
