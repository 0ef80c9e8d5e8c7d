import { readFileSync } from "fs";
import { dirname, resolve } from "path";

export interface IndexEntry {
  value: number | string;
  seed: number;
  trace: string;
  bits_to_target?: number | null;
  final_residual?: number;
  final_constraint_violation?: number;
}

export interface StudyIndex {
  study: string;
  iterations: number;
  entries: IndexEntry[];
  expected_trend?: string;
  target_residual?: number;
  baseline_trace?: string;
  baseline_bits_to_target?: number | null;
  dir: string;
}

/** Load a study index JSON; trace paths resolve relative to the index file. */
export function readIndex(path: string): StudyIndex {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new Error(`cannot read index file ${path}: ${(err as Error).message}`);
  }
  let data: StudyIndex;
  try {
    data = JSON.parse(text);
  } catch (err) {
    throw new Error(`index file ${path} is not valid JSON: ${(err as Error).message}`);
  }
  if (!data.study || !Array.isArray(data.entries)) {
    throw new Error(`index file ${path} lacks 'study' or 'entries'`);
  }
  data.dir = dirname(resolve(path));
  return data;
}

export function tracePath(index: StudyIndex, name: string): string {
  return resolve(index.dir, name);
}
