// Cross-boundary equivalence: the binding must return exactly what a user
// driving the CLI by hand would get for the same input. The file here is
// written by an independent inline encoder, not the binding's writer.

import { execFile } from "node:child_process";
import { promises as fs } from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { promisify } from "node:util";

import { describe, expect, it } from "vitest";

import { select_frames } from "../src/index.js";
import { mulberry32, randomVectors } from "./helpers.js";

const run = promisify(execFile);

async function writeEmbByHand(
  dir: string,
  vectors: number[][],
  timestamps: number[],
): Promise<string> {
  const n = vectors.length;
  const d = vectors[0].length;
  const buf = Buffer.alloc(12 + n * d * 4);
  buf.write("EMB1", 0, "ascii");
  buf.writeUInt32LE(n, 4);
  buf.writeUInt32LE(d, 8);
  const view = new DataView(buf.buffer, buf.byteOffset + 12);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < d; j++) {
      view.setFloat32((i * d + j) * 4, vectors[i][j], true);
    }
  }
  const embPath = path.join(dir, "byhand.emb");
  await fs.writeFile(embPath, buf);
  await fs.writeFile(
    path.join(dir, "byhand.meta.json"),
    JSON.stringify({
      video_id: "byhand",
      duration_s: timestamps[n - 1] + 1.0,
      timestamps_s: timestamps,
      source_fps: 0.0,
    }),
  );
  return embPath;
}

describe("binding vs hand-driven CLI", () => {
  it("identical indices and objective on a 50x16 instance", async () => {
    const rand = mulberry32(404);
    const vectors = randomVectors(rand, 50, 16);
    const timestamps = Array.from({ length: 50 }, (_, i) => i * 15 + 7.5);

    const viaBinding = await select_frames(vectors, timestamps, { k: 12 });

    const dir = await fs.mkdtemp(path.join(os.tmpdir(), "byhand-"));
    try {
      const embPath = await writeEmbByHand(dir, vectors, timestamps);
      const outPath = path.join(dir, "sel.json");
      await run("python3", [
        "-m", "framesampler.cli", "select",
        "--embeddings", embPath, "--k", "12", "--out", outPath,
      ]);
      const viaCli = JSON.parse(await fs.readFile(outPath, "utf8"));
      expect(viaBinding.indices).toEqual(viaCli.indices);
      expect(viaBinding.objective).toBe(viaCli.objective);
      expect(viaBinding.timestampsS).toEqual(viaCli.timestamps_s);
    } finally {
      await fs.rm(dir, { recursive: true, force: true });
    }
  }, 60_000);
});
