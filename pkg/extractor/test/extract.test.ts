import { execFileSync, spawnSync } from "node:child_process";
import { mkdirSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { beforeAll, describe, expect, it } from "vitest";

import { conceptScores, decodePpm, extract, loadConceptModel } from "../dist/index.js";

const CLI = join(dirname(fileURLToPath(import.meta.url)), "..", "dist", "cli.js");

let root: string;
let framesDir: string;
let modelPath: string;

function python(script: string, ...args: string[]): string {
  return execFileSync("python3", ["-c", script, ...args], { encoding: "utf-8" });
}

/** Deterministic byte stream (LCG) for reproducible synthetic frames. */
function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state >>> 24;
  };
}

function writePpm(path: string, width: number, height: number, pixel: (x: number, y: number) => [number, number, number]): void {
  const header = Buffer.from(`P6\n${width} ${height}\n255\n`, "ascii");
  const body = Buffer.alloc(width * height * 3);
  for (let y = 0; y < height; y += 1) {
    for (let x = 0; x < width; x += 1) {
      const [r, g, b] = pixel(x, y);
      const p = 3 * (y * width + x);
      body[p] = r;
      body[p + 1] = g;
      body[p + 2] = b;
    }
  }
  writeFileSync(path, Buffer.concat([header, body]));
}

beforeAll(() => {
  root = mkdtempSync(join(tmpdir(), "extractor-"));
  framesDir = join(root, "frames");
  mkdirSync(framesDir);
  modelPath = join(root, "concepts.model");
  python(
    "import sys\n" +
      "from stumps.frame_features import default_concept_model, save_concept_model\n" +
      "save_concept_model(default_concept_model(), sys.argv[1])\n",
    modelPath,
  );
  for (let i = 0; i < 10; i += 1) {
    const rng = makeRng(1000 + i);
    writePpm(join(framesDir, `frame${String(i).padStart(3, "0")}.ppm`), 32, 24, () => [rng(), rng(), rng()]);
  }
});

describe("extract", () => {
  it("10-frame sequence parses on the pipeline side with matching concept scores", () => {
    const fdesc = join(root, "out.fdesc");
    const summary = extract({ input: framesDir, stride: 1, fdescOut: fdesc, conceptsModel: modelPath });
    expect(summary.nFramesWritten).toBe(10);

    const report = JSON.parse(
      python(
        "import json, os, sys\n" +
          "from stumps.frame_features import (concept_scores_from_image, decode_ppm,\n" +
          "                                   default_concept_model, read_descriptors)\n" +
          "fdesc, frames_dir = sys.argv[1], sys.argv[2]\n" +
          "frames = read_descriptors(fdesc)\n" +
          "model = default_concept_model()\n" +
          "names = sorted(n for n in os.listdir(frames_dir) if n.endswith('.ppm'))\n" +
          "rows = []\n" +
          "for f in frames:\n" +
          "    with open(os.path.join(frames_dir, names[f.frame_index]), 'rb') as fh:\n" +
          "        image = decode_ppm(fh.read())\n" +
          "    expected = concept_scores_from_image(image, model)\n" +
          "    rows.append({'got': [round(float(v), 6) for v in f.concept_scores],\n" +
          "                 'exp': [round(float(v), 6) for v in expected]})\n" +
          "print(json.dumps(rows))\n",
        fdesc,
        framesDir,
      ),
    ) as { got: number[]; exp: number[] }[];
    expect(report).toHaveLength(10);
    for (const row of report) {
      for (let c = 0; c < 5; c += 1) {
        expect(Math.abs(row.got[c] - row.exp[c])).toBeLessThanOrEqual(1e-6);
      }
    }
    console.log("ACCEPTANCE extractor-parity: PASS");
  });

  it("stride 2 over 10 frames writes 5 rows with original frame indices", () => {
    const fdesc = join(root, "strided.fdesc");
    const summary = extract({ input: framesDir, stride: 2, fdescOut: fdesc, conceptsModel: modelPath });
    expect(summary.nFramesWritten).toBe(5);
    const lines = readFileSync(fdesc, "utf-8").trim().split("\n");
    expect(lines[0]).toBe("FDESC v1 5 5 0");
    expect(lines.slice(1).map((l) => Number(l.split(" ")[0]))).toEqual([0, 2, 4, 6, 8]);
  });

  it("half sky / half ground image scores within 0.02 of (0, 0.5, 0.5, 0, 0)", () => {
    const path = join(root, "skyground.ppm");
    // Prototype colors: Ground (58,157,35), Sky (110,180,235).
    writePpm(path, 40, 40, (_x, y) => (y < 20 ? [110, 180, 235] : [58, 157, 35]));
    const scores = conceptScores(decodePpm(readFileSync(path)), loadConceptModel(modelPath));
    const expected = [0, 0.5, 0.5, 0, 0];
    for (let c = 0; c < 5; c += 1) {
      expect(Math.abs(scores[c] - expected[c])).toBeLessThanOrEqual(0.02);
    }
  });

  it("writes LDESC files the pipeline can read", () => {
    const fdesc = join(root, "with_local.fdesc");
    const ldesc = join(root, "with_local.ldesc");
    const summary = extract({ input: framesDir, stride: 1, fdescOut: fdesc, ldescOut: ldesc, conceptsModel: modelPath });
    expect(summary.nLocalDescriptors).toBeGreaterThan(0);
    const out = python(
      "import sys\n" +
        "from stumps.frame_features import read_local_descriptors\n" +
        "dim, rows = read_local_descriptors(sys.argv[1])\n" +
        "print(dim, len(rows))\n",
      ldesc,
    );
    const [dim, nRows] = out.trim().split(" ").map(Number);
    expect(dim).toBe(32);
    expect(nRows).toBe(summary.nLocalDescriptors);
  });

  it("CLI succeeds on good input and fails with a message on undecodable input", () => {
    const fdesc = join(root, "cli.fdesc");
    const ok = spawnSync("node", [CLI, "--in", framesDir, "--stride", "1", "--fdesc", fdesc, "--concepts", modelPath], {
      encoding: "utf-8",
    });
    expect(ok.status).toBe(0);
    expect(JSON.parse(ok.stdout).nFramesWritten).toBe(10);

    const badPath = join(root, "bad.ppm");
    writeFileSync(badPath, "not a ppm");
    const bad = spawnSync("node", [CLI, "--in", badPath, "--stride", "1", "--fdesc", fdesc, "--concepts", modelPath], {
      encoding: "utf-8",
    });
    expect(bad.status).not.toBe(0);
    expect(bad.stderr).toContain("bad.ppm");

    const missing = spawnSync("node", [CLI, "--in", framesDir], { encoding: "utf-8" });
    expect(missing.status).not.toBe(0);
    expect(missing.stderr).toContain("required");
  });

  it("rejects stride 0", () => {
    expect(() =>
      extract({ input: framesDir, stride: 0, fdescOut: join(root, "x.fdesc"), conceptsModel: modelPath }),
    ).toThrow(/stride/);
  });
});
