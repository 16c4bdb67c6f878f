// Embedding file writer: magic "EMB1", little-endian u32 n and d, then
// n*d float32 row-major, plus the JSON metadata sidecar the core expects.

import { promises as fs } from "node:fs";
import * as path from "node:path";

export interface EmbeddingInput {
  vectors: number[][];
  timestampsS: number[];
  durationS: number;
  videoId?: string;
  sourceFps?: number;
}

export function validateEmbeddings(input: EmbeddingInput): { n: number; d: number } {
  const { vectors, timestampsS, durationS } = input;
  if (!Array.isArray(vectors) || vectors.length < 1) {
    throw new Error("vectors must be a non-empty n x d array");
  }
  const n = vectors.length;
  const d = vectors[0].length;
  if (d < 1) {
    throw new Error("vectors must have at least one column");
  }
  for (let i = 0; i < n; i++) {
    if (vectors[i].length !== d) {
      throw new Error(`row ${i} has ${vectors[i].length} values, expected ${d}`);
    }
    for (let j = 0; j < d; j++) {
      if (!Number.isFinite(vectors[i][j])) {
        throw new Error(`non-finite value at row ${i}, column ${j}`);
      }
    }
  }
  if (timestampsS.length !== n) {
    throw new Error(`expected ${n} timestamps, got ${timestampsS.length}`);
  }
  for (let i = 1; i < n; i++) {
    if (!(timestampsS[i] > timestampsS[i - 1])) {
      throw new Error(`timestamps must be strictly increasing (row ${i})`);
    }
  }
  if (!(durationS > 0) || timestampsS[0] < 0 || timestampsS[n - 1] > durationS) {
    throw new Error("timestamps must lie within [0, durationS]");
  }
  return { n, d };
}

/** Write `<base>.emb` and `<base>.meta.json` under `dir`; returns the .emb path. */
export async function writeEmbeddings(dir: string, input: EmbeddingInput): Promise<string> {
  const { n, d } = validateEmbeddings(input);
  const header = Buffer.alloc(12);
  header.write("EMB1", 0, "ascii");
  header.writeUInt32LE(n, 4);
  header.writeUInt32LE(d, 8);
  // one validated copy of the payload, quantized to the f32 wire format
  const payload = Buffer.alloc(n * d * 4);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < d; j++) {
      payload.writeFloatLE(input.vectors[i][j], (i * d + j) * 4);
    }
  }
  const embPath = path.join(dir, "input.emb");
  await fs.writeFile(embPath, Buffer.concat([header, payload]));
  const meta = {
    video_id: input.videoId ?? "binding",
    duration_s: input.durationS,
    timestamps_s: input.timestampsS,
    source_fps: input.sourceFps ?? 0.0,
  };
  await fs.writeFile(path.join(dir, "input.meta.json"), JSON.stringify(meta));
  return embPath;
}
