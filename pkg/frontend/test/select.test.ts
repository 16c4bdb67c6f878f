import { describe, expect, it } from "vitest";

import { select_frames } from "../src/index.js";
import { bruteForceSelect, buildWeights, mulberry32, pooled, randomVectors } from "./helpers.js";

const STRENGTH = 10.0;
const EXPONENT = 0.3;

describe("select_frames fidelity", () => {
  it(
    "matches an independent exhaustive reference on 1000 random instances",
    async () => {
      const rand = mulberry32(20240229);
      const instances = Array.from({ length: 1000 }, () => {
        const n = 2 + Math.floor(rand() * 9); // 2..10
        const d = 2 + Math.floor(rand() * 5); // 2..6
        const k = 1 + Math.floor(rand() * n); // 1..n
        return { n, d, k, vectors: randomVectors(rand, n, d) };
      });
      const jobs = instances.map(({ n, d: _d, k, vectors }) => async () => {
        const timestamps = Array.from({ length: n }, (_, i) => i * 15 + 7.5);
        const got = await select_frames(vectors, timestamps, {
          k,
          penaltyStrength: STRENGTH,
          penaltyExponent: EXPONENT,
          mode: "min-end",
        });
        const reference = bruteForceSelect(buildWeights(vectors, STRENGTH, EXPONENT), k);
        expect(got.indices).toEqual(reference.indices);
        expect(Math.abs(got.objective - reference.objective)).toBeLessThanOrEqual(1e-9);
        return true;
      });
      const results = await pooled(jobs, 8);
      expect(results).toHaveLength(1000);
    },
    900_000,
  );

  it("returns every index when k equals n", async () => {
    const rand = mulberry32(7);
    const vectors = randomVectors(rand, 6, 3);
    const timestamps = [1, 2, 3, 4, 5, 6];
    const got = await select_frames(vectors, timestamps, { k: 6 });
    expect(got.indices).toEqual([0, 1, 2, 3, 4, 5]);
    expect(got.timestampsS).toEqual(timestamps);
  });

  it("rejects NaN input before spawning anything", async () => {
    const vectors = [
      [1, 0],
      [NaN, 1],
    ];
    await expect(select_frames(vectors, [0, 1], { k: 1 })).rejects.toThrow(/non-finite/);
  });

  it("rejects ragged rows", async () => {
    await expect(select_frames([[1, 0], [1]], [0, 1], { k: 1 })).rejects.toThrow(/row 1/);
  });

  it("requires exactly one of k / keepRatio", async () => {
    const vectors = [
      [1, 0],
      [0, 1],
    ];
    await expect(select_frames(vectors, [0, 1], {})).rejects.toThrow(/exactly one/);
    await expect(select_frames(vectors, [0, 1], { k: 1, keepRatio: 0.5 })).rejects.toThrow(
      /exactly one/,
    );
  });

  it("keepRatio resolves like the core (rounded, at least 1)", async () => {
    const rand = mulberry32(11);
    const vectors = randomVectors(rand, 16, 4);
    const timestamps = Array.from({ length: 16 }, (_, i) => i + 0.5);
    const got = await select_frames(vectors, timestamps, { keepRatio: 0.25 });
    expect(got.indices).toHaveLength(4);
  });
});
