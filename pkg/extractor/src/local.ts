/** Local keypoint descriptors: gradient-orientation histograms on a uniform
 * grid, a simplified SIFT-style patch descriptor. The dimension is a property
 * of this extractor and is declared in the LDESC header, never assumed by
 * readers.
 */
import type { Image } from "./ppm.js";

const PATCH = 16; // patch side length around each keypoint
const QUADRANTS = 2; // 2x2 subregions
const ORIENT_BINS = 8;

export const LOCAL_DESCRIPTOR_DIM = QUADRANTS * QUADRANTS * ORIENT_BINS;

function gray(image: Image, x: number, y: number): number {
  const p = 3 * (y * image.width + x);
  return 0.299 * image.data[p] + 0.587 * image.data[p + 1] + 0.114 * image.data[p + 2];
}

/** One descriptor per grid keypoint; images smaller than one patch yield an
 * empty list. */
export function localDescriptors(image: Image): number[][] {
  const half = PATCH / 2;
  const out: number[][] = [];
  for (let cy = half; cy + half < image.height; cy += PATCH) {
    for (let cx = half; cx + half < image.width; cx += PATCH) {
      const hist = new Array<number>(LOCAL_DESCRIPTOR_DIM).fill(0);
      for (let y = cy - half + 1; y < cy + half - 1; y += 1) {
        for (let x = cx - half + 1; x < cx + half - 1; x += 1) {
          const dx = gray(image, x + 1, y) - gray(image, x - 1, y);
          const dy = gray(image, x, y + 1) - gray(image, x, y - 1);
          const mag = Math.hypot(dx, dy);
          if (mag === 0) continue;
          let angle = Math.atan2(dy, dx); // [-pi, pi]
          let ob = Math.floor(((angle + Math.PI) / (2 * Math.PI)) * ORIENT_BINS);
          if (ob >= ORIENT_BINS) ob = ORIENT_BINS - 1;
          const qx = x < cx ? 0 : 1;
          const qy = y < cy ? 0 : 1;
          hist[(qy * QUADRANTS + qx) * ORIENT_BINS + ob] += mag;
        }
      }
      const norm = Math.hypot(...hist);
      out.push(norm > 0 ? hist.map((v) => v / norm) : hist);
    }
  }
  return out;
}
