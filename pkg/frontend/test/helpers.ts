// Shared test utilities: a seeded RNG and an independent reference
// implementation of the selection objective (weights + brute force), used
// to cross-check the binding against the core across the language boundary.

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Gaussian-ish values via sum of uniforms; distribution details are moot. */
export function randomVectors(rand: () => number, n: number, d: number): number[][] {
  const rows: number[][] = [];
  for (let i = 0; i < n; i++) {
    const row: number[] = [];
    for (let j = 0; j < d; j++) {
      // quantize to f32 so the reference sees exactly the wire-format values
      row.push(Math.fround(rand() * 4 - 2 + 0.01));
    }
    rows.push(row);
  }
  return rows;
}

/** Pairwise weights: cosine similarity plus -strength * (gap/n)^exponent. */
export function buildWeights(
  vectors: number[][],
  strength: number,
  exponent: number,
): number[][] {
  const n = vectors.length;
  const d = vectors[0].length;
  const norms = vectors.map((row) => {
    let sum = 0;
    for (let j = 0; j < d; j++) sum += row[j] * row[j];
    return Math.sqrt(sum);
  });
  const weights: number[][] = Array.from({ length: n }, () => new Array(n).fill(0));
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      let dot = 0;
      for (let c = 0; c < d; c++) dot += vectors[i][c] * vectors[j][c];
      let sim = dot / (norms[i] * norms[j]);
      sim = Math.min(1, Math.max(-1, sim));
      const w = sim - strength * Math.pow((j - i) / n, exponent);
      weights[i][j] = w;
      weights[j][i] = w;
    }
  }
  return weights;
}

/** Exhaustive minimizer of the consecutive-pair weight sum over k-subsets. */
export function bruteForceSelect(
  weights: number[][],
  k: number,
): { indices: number[]; objective: number } {
  const n = weights.length;
  let best: number[] | null = null;
  let bestObj = Infinity;
  const combo: number[] = [];
  const walk = (start: number) => {
    if (combo.length === k) {
      let obj = 0;
      for (let t = 0; t + 1 < k; t++) obj += weights[combo[t]][combo[t + 1]];
      if (obj < bestObj) {
        bestObj = obj;
        best = [...combo];
      }
      return;
    }
    for (let i = start; i <= n - (k - combo.length); i++) {
      combo.push(i);
      walk(i + 1);
      combo.pop();
    }
  };
  walk(0);
  if (!best) throw new Error("no subset found");
  return { indices: best, objective: bestObj };
}

/** Run async jobs with a concurrency bound. */
export async function pooled<T>(
  jobs: (() => Promise<T>)[],
  limit: number,
): Promise<T[]> {
  const results: T[] = new Array(jobs.length);
  let next = 0;
  const workers = Array.from({ length: Math.min(limit, jobs.length) }, async () => {
    while (next < jobs.length) {
      const mine = next++;
      results[mine] = await jobs[mine]();
    }
  });
  await Promise.all(workers);
  return results;
}
