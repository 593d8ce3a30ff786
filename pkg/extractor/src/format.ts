/** FDESC/LDESC writers matching the pipeline's file contracts. */
import { writeFileSync } from "node:fs";

import { N_CONCEPTS } from "./concepts.js";

const FDESC_HEADER = "FDESC v1";
const LDESC_HEADER = "LDESC v1";

/** Shortest decimal that round-trips to the same double; always finite. */
export function fmtFloat(x: number): string {
  if (!Number.isFinite(x)) throw new Error("non-finite value");
  return String(x);
}

export interface FrameRow {
  frameIndex: number;
  conceptScores: number[];
}

export function writeFdesc(rows: FrameRow[], path: string): void {
  const lines = [`${FDESC_HEADER} ${rows.length} ${N_CONCEPTS} 0`];
  let prev = -1;
  for (const row of rows) {
    if (row.conceptScores.length !== N_CONCEPTS) {
      throw new Error(`expected ${N_CONCEPTS} concept scores`);
    }
    if (row.frameIndex <= prev) {
      throw new Error("frame indices must be strictly increasing");
    }
    prev = row.frameIndex;
    lines.push([String(row.frameIndex), ...row.conceptScores.map(fmtFloat)].join(" "));
  }
  writeFileSync(path, lines.join("\n") + "\n");
}

export interface LocalRow {
  frameIndex: number;
  descriptor: number[];
}

export function writeLdesc(rows: LocalRow[], dim: number, path: string): void {
  const lines = [`${LDESC_HEADER} ${dim}`];
  for (const row of rows) {
    if (row.descriptor.length !== dim) {
      throw new Error(`expected descriptor dimension ${dim}`);
    }
    lines.push([String(row.frameIndex), ...row.descriptor.map(fmtFloat)].join(" "));
  }
  writeFileSync(path, lines.join("\n") + "\n");
}
