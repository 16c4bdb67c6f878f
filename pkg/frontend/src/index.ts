// Node bindings for the framesampler core. Everything goes through the
// core's public surfaces: the EMB1 embedding format in, the CLI, and the
// JSON result/plan formats out. Versioned in lockstep with the core.

import { execFile } from "node:child_process";
import { promises as fs } from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { promisify } from "node:util";

import { writeEmbeddings, validateEmbeddings, type EmbeddingInput } from "./emb.js";

const execFileAsync = promisify(execFile);

export const VERSION = "0.1.0";

export type BacktraceMode = "min-end" | "faithful";

export interface SelectOptions {
  k?: number;
  keepRatio?: number;
  penaltyStrength?: number;
  penaltyExponent?: number;
  mode?: BacktraceMode;
  /** Python interpreter with the core installed; default "python3". */
  python?: string;
}

export interface SelectResult {
  indices: number[];
  objective: number;
  timestampsS: number[];
}

export interface PlanOptions {
  rateFpm?: number;
  keepRatio?: number;
  rateFps?: number;
  videoId?: string;
  penaltyStrength?: number;
  penaltyExponent?: number;
  /** Also write the plan JSON here (kept after the call). */
  outPath?: string;
  python?: string;
}

export interface SamplingPlanJson {
  video_id: string;
  duration_s: number;
  mode: string;
  stage1: { rate_fpm: number; keyframes: { index: number; t_s: number }[] };
  segments: { index: number; start_s: number; end_s: number }[];
  selected: number[];
  stage2: { rate_fps: number; timestamps: number[] };
  budget: {
    stage1_frames: number;
    stage2_frames: number;
    total_frames: number;
    sd_full_video: number;
    sd_dense: number;
  };
}

async function runCli(python: string, args: string[]): Promise<void> {
  try {
    await execFileAsync(python, ["-m", "framesampler.cli", ...args], {
      maxBuffer: 64 * 1024 * 1024,
    });
  } catch (error) {
    const err = error as { stderr?: string; message?: string };
    throw new Error(`framesampler CLI failed: ${err.stderr?.trim() || err.message}`);
  }
}

async function withTempDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await fs.mkdtemp(path.join(os.tmpdir(), "framesampler-"));
  try {
    return await fn(dir);
  } finally {
    await fs.rm(dir, { recursive: true, force: true });
  }
}

/**
 * Diverse frame selection: identical indices and objective to the core
 * solver on the same inputs (vectors are quantized once to the f32 wire
 * format, exactly as any other producer of the embedding file would).
 */
export async function select_frames(
  vectors: number[][],
  timestampsS: number[],
  options: SelectOptions = {},
): Promise<SelectResult> {
  if ((options.k === undefined) === (options.keepRatio === undefined)) {
    throw new Error("set exactly one of k / keepRatio");
  }
  // duration is metadata only for selection; anything past the last sample works
  const durationS = timestampsS.length ? timestampsS[timestampsS.length - 1] + 1.0 : 0;
  const input: EmbeddingInput = { vectors, timestampsS, durationS };
  validateEmbeddings(input);
  const python = options.python ?? "python3";
  return withTempDir(async (dir) => {
    const embPath = await writeEmbeddings(dir, input);
    const outPath = path.join(dir, "selection.json");
    const args = ["select", "--embeddings", embPath, "--out", outPath];
    if (options.k !== undefined) {
      args.push("--k", String(options.k));
    } else {
      args.push("--ratio", String(options.keepRatio));
    }
    if (options.penaltyStrength !== undefined) {
      args.push("--penalty-strength", String(options.penaltyStrength));
    }
    if (options.penaltyExponent !== undefined) {
      args.push("--penalty-exponent", String(options.penaltyExponent));
    }
    if (options.mode !== undefined) {
      args.push("--mode", options.mode);
    }
    await runCli(python, args);
    const payload = JSON.parse(await fs.readFile(outPath, "utf8"));
    return {
      indices: payload.indices as number[],
      objective: payload.objective as number,
      timestampsS: payload.timestamps_s as number[],
    };
  });
}

/**
 * Two-stage sampling plan over an explicit segment selection. Mirrors the
 * core planner contracts; the returned object is the parsed plan JSON and
 * matches the file schema exactly.
 */
export async function plan_rhs(
  durationS: number,
  selectedSegments: number[],
  vectors: number[][] | null,
  timestampsS: number[] | null,
  options: PlanOptions = {},
): Promise<SamplingPlanJson> {
  const keepRatio = options.keepRatio ?? 0.25;
  const rateFpm = options.rateFpm ?? 4.0;
  const rateFps = options.rateFps ?? 1.0;
  const python = options.python ?? "python3";
  if (keepRatio < 1.0 && vectors === null) {
    throw new Error("keepRatio < 1 needs vectors for the sparse grid");
  }
  return withTempDir(async (dir) => {
    const outPath = options.outPath ?? path.join(dir, "plan.json");
    const args = [
      "plan",
      "--duration", String(durationS),
      "--ratio", String(keepRatio),
      "--stage1-fpm", String(rateFpm),
      "--stage2-fps", String(rateFps),
      "--localizer", "fixed",
      "--segments", selectedSegments.join(","),
      "--out", outPath,
    ];
    if (vectors !== null) {
      // default timestamps: the stage-1 center-of-cell grid the core expects
      const interval = 60.0 / rateFpm;
      const grid =
        timestampsS ?? Array.from({ length: vectors.length }, (_, i) => (i + 0.5) * interval);
      const embPath = await writeEmbeddings(dir, {
        vectors,
        timestampsS: grid,
        durationS,
        videoId: options.videoId,
      });
      args.push("--embeddings", embPath);
    }
    if (options.videoId) {
      args.push("--video-id", options.videoId);
    }
    if (options.penaltyStrength !== undefined) {
      args.push("--penalty-strength", String(options.penaltyStrength));
    }
    if (options.penaltyExponent !== undefined) {
      args.push("--penalty-exponent", String(options.penaltyExponent));
    }
    await runCli(python, args);
    const plan = JSON.parse(await fs.readFile(outPath, "utf8")) as SamplingPlanJson;
    validatePlan(plan);
    return plan;
  });
}

/** Throw unless `plan` carries every field of the core plan schema. */
export function validatePlan(plan: SamplingPlanJson): void {
  const missing: string[] = [];
  const need = (cond: boolean, name: string) => {
    if (!cond) missing.push(name);
  };
  need(typeof plan.video_id === "string", "video_id");
  need(typeof plan.duration_s === "number", "duration_s");
  need(typeof plan.mode === "string", "mode");
  need(typeof plan.stage1?.rate_fpm === "number", "stage1.rate_fpm");
  need(Array.isArray(plan.stage1?.keyframes), "stage1.keyframes");
  need(Array.isArray(plan.segments), "segments");
  need(Array.isArray(plan.selected), "selected");
  need(typeof plan.stage2?.rate_fps === "number", "stage2.rate_fps");
  need(Array.isArray(plan.stage2?.timestamps), "stage2.timestamps");
  for (const key of [
    "stage1_frames",
    "stage2_frames",
    "total_frames",
    "sd_full_video",
    "sd_dense",
  ] as const) {
    need(typeof plan.budget?.[key] === "number", `budget.${key}`);
  }
  if (missing.length) {
    throw new Error(`plan JSON missing fields: ${missing.join(", ")}`);
  }
}

/** Stable serialization: recursively sorted keys, JSON number formatting. */
export function canonicalJson(value: unknown): string {
  const sort = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(sort);
    if (v !== null && typeof v === "object") {
      const entries = Object.entries(v as Record<string, unknown>).sort(([a], [b]) =>
        a < b ? -1 : a > b ? 1 : 0,
      );
      return Object.fromEntries(entries.map(([k, val]) => [k, sort(val)]));
    }
    return v;
  };
  return JSON.stringify(sort(value));
}

export { writeEmbeddings, validateEmbeddings };
export const selectFrames = select_frames;
export const planRhs = plan_rhs;
