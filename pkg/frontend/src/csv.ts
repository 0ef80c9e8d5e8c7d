import { readFileSync } from "fs";

export interface TraceTable {
  path: string;
  columns: Map<string, number[]>;
  rows: number;
}

/** Parse a solver trace CSV (header row + numeric rows). */
export function readTrace(path: string): TraceTable {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new Error(`cannot read trace file ${path}: ${(err as Error).message}`);
  }
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new Error(`trace file ${path} is empty`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  if (lines.length === 1) {
    throw new Error(`trace file ${path} has a header but no data rows`);
  }
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new Error(
        `trace file ${path} line ${i + 1}: expected ${header.length} fields, got ${parts.length}`,
      );
    }
    for (let j = 0; j < header.length; j++) {
      const v = Number(parts[j]);
      if (Number.isNaN(v) && parts[j].trim() !== "nan") {
        throw new Error(`trace file ${path} line ${i + 1}: bad number ${parts[j]!}`);
      }
      columns.get(header[j])!.push(v);
    }
  }
  return { path, columns, rows: lines.length - 1 };
}

/** Fetch required columns, aborting with the file name when one is missing. */
export function requireColumns(table: TraceTable, names: string[]): number[][] {
  return names.map((name) => {
    const col = table.columns.get(name);
    if (!col) {
      throw new Error(
        `trace file ${table.path} is missing required column '${name}' ` +
        `(has: ${[...table.columns.keys()].join(", ")})`,
      );
    }
    return col;
  });
}
