/** Extraction jobs: PPM file or directory -> FDESC (+ optional LDESC). */
import { readFileSync, readdirSync, statSync } from "node:fs";
import { join } from "node:path";

import { conceptScores, loadConceptModel } from "./concepts.js";
import { writeFdesc, writeLdesc, type FrameRow, type LocalRow } from "./format.js";
import { LOCAL_DESCRIPTOR_DIM, localDescriptors } from "./local.js";
import { decodePpm } from "./ppm.js";

export interface ExtractionJob {
  input: string;
  stride: number;
  fdescOut: string;
  ldescOut?: string;
  conceptsModel: string;
}

export interface ExtractionSummary {
  nFramesSeen: number;
  nFramesWritten: number;
  nLocalDescriptors: number;
}

function listFrames(input: string): string[] {
  const stats = statSync(input);
  if (stats.isFile()) return [input];
  const names = readdirSync(input)
    .filter((name) => name.toLowerCase().endsWith(".ppm"))
    .sort();
  if (names.length === 0) {
    throw new Error(`no .ppm files in directory ${input}`);
  }
  return names.map((name) => join(input, name));
}

export function extract(job: ExtractionJob): ExtractionSummary {
  if (!Number.isInteger(job.stride) || job.stride < 1) {
    throw new Error("stride must be an integer >= 1");
  }
  const model = loadConceptModel(job.conceptsModel);
  const paths = listFrames(job.input);
  const fdescRows: FrameRow[] = [];
  const ldescRows: LocalRow[] = [];
  for (let i = 0; i < paths.length; i += job.stride) {
    let image;
    try {
      image = decodePpm(readFileSync(paths[i]));
    } catch (err) {
      throw new Error(`cannot decode ${paths[i]}: ${(err as Error).message}`);
    }
    fdescRows.push({ frameIndex: i, conceptScores: conceptScores(image, model) });
    if (job.ldescOut) {
      for (const descriptor of localDescriptors(image)) {
        ldescRows.push({ frameIndex: i, descriptor });
      }
    }
  }
  writeFdesc(fdescRows, job.fdescOut);
  if (job.ldescOut) {
    writeLdesc(ldescRows, LOCAL_DESCRIPTOR_DIM, job.ldescOut);
  }
  return {
    nFramesSeen: paths.length,
    nFramesWritten: fdescRows.length,
    nLocalDescriptors: ldescRows.length,
  };
}
