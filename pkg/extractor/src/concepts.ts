/** STUMPS-CONCEPTS model loading and HSV color-histogram concept scoring.
 *
 * The binning and scoring rules mirror the pipeline's built-in PPM path
 * operation for operation so both sides produce the same scores on the same
 * image.
 */
import { readFileSync } from "node:fs";

import type { Image } from "./ppm.js";

export const CONCEPTS = ["Pitch", "Ground", "Sky", "PlayerCloseup", "Scorecard"] as const;
export const N_CONCEPTS = CONCEPTS.length;

export const HSV_BINS: [number, number, number] = [8, 8, 4];
export const N_COLOR_BINS = HSV_BINS[0] * HSV_BINS[1] * HSV_BINS[2];

const CONCEPTS_HEADER = "STUMPS-CONCEPTS v1";

export interface ConceptModel {
  /** N_CONCEPTS rows of N_COLOR_BINS bin probabilities. */
  histograms: Float64Array[];
  /** Uniform per-bin likelihood for unexplained pixels. */
  background: number;
}

export function loadConceptModel(path: string): ConceptModel {
  const lines = readFileSync(path, "utf-8").split("\n");
  if (lines[0] !== CONCEPTS_HEADER) {
    throw new Error(`expected header '${CONCEPTS_HEADER}'`);
  }
  const background = Number.parseFloat(lines[3].split(/\s+/)[1]);
  const histograms: Float64Array[] = CONCEPTS.map(() => new Float64Array(N_COLOR_BINS));
  for (const line of lines.slice(4)) {
    if (!line.trim()) continue;
    const parts = line.split(/\s+/);
    const ci = CONCEPTS.indexOf(parts[1] as (typeof CONCEPTS)[number]);
    if (ci < 0) throw new Error(`unknown concept ${parts[1]}`);
    for (let b = 0; b < N_COLOR_BINS; b += 1) {
      histograms[ci][b] = Number.parseFloat(parts[2 + b]);
    }
  }
  return { histograms, background };
}

/** Flat 8x8x4 HSV bin index for one RGB pixel, channels in 0..255. */
export function hsvBinIndex(r8: number, g8: number, b8: number): number {
  const r = r8 / 255.0;
  const g = g8 / 255.0;
  const b = b8 / 255.0;
  const maxc = Math.max(r, g, b);
  const minc = Math.min(r, g, b);
  const delta = maxc - minc;
  let h = 0.0;
  if (delta > 0) {
    if (maxc === r) {
      // Euclidean mod 6 without disturbing already-positive values: adding 6
      // and reducing again would round through 6.x and lose a bit.
      h = (g - b) / delta;
      h %= 6.0;
      if (h !== 0 && h < 0) h += 6.0;
    } else if (maxc === g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
  }
  h /= 6.0;
  const s = maxc > 0 ? delta / maxc : 0.0;
  const v = maxc;
  const [hb, sb, vb] = HSV_BINS;
  const hi = Math.min(Math.trunc(h * hb), hb - 1);
  const si = Math.min(Math.trunc(s * sb), sb - 1);
  const vi = Math.min(Math.trunc(v * vb), vb - 1);
  return hi * (sb * vb) + si * vb + vi;
}

/** Fraction of pixels whose color is most likely under each concept's
 * histogram; pixels better explained by the uniform background count for no
 * concept. Ties on the likelihood go to the lowest concept index. */
export function conceptScores(image: Image, model: ConceptModel): number[] {
  if (image.height < 8 || image.width < 8) {
    throw new Error("image must be RGB with dimensions >= 8x8");
  }
  const nPixels = image.width * image.height;
  const counts = new Array<number>(N_CONCEPTS).fill(0);
  for (let p = 0; p < nPixels; p += 1) {
    const bin = hsvBinIndex(image.data[3 * p], image.data[3 * p + 1], image.data[3 * p + 2]);
    let best = 0;
    let bestVal = model.histograms[0][bin];
    for (let ci = 1; ci < N_CONCEPTS; ci += 1) {
      const val = model.histograms[ci][bin];
      if (val > bestVal) {
        best = ci;
        bestVal = val;
      }
    }
    if (bestVal > model.background) counts[best] += 1;
  }
  return counts.map((c) => c / nPixels);
}
