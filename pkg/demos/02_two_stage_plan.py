"""
Building a two-stage sampling plan
==================================

Stage 1 walks the whole video sparsely and keeps a diverse quarter of the
grid; the surviving keyframes split the timeline into segments.  A localizer
(here: the oracle, which knows the target window) picks the segments worth
dense sampling, and stage 2 lays a 1 fps grid over just those.

The point: a 45-minute video gets answered from ~220 frames instead of the
~2700 a 1 fps global sweep would need.
"""

from pathlib import Path

import numpy as np

import framesampler as fs

rng = np.random.default_rng(1)

duration_s = 45.0 * 60
stage1_fpm = 4.0

# pretend embeddings: smooth random walk so neighbouring frames look alike
grid = fs.uniform_timestamps(duration_s, stage1_fpm / 60.0)
steps = rng.normal(size=(grid.shape[0], 24)) * 0.2
vectors = np.cumsum(steps, axis=0) + rng.normal(size=24)
seq = fs.EmbeddingSequence("walk", vectors, grid, duration_s, source_fps=stage1_fpm / 60.0)
seq = fs.normalize(seq)

stage1 = fs.plan_stage1(duration_s, stage1_fpm, keep_ratio=0.25, seq=seq)
print(f"stage 1: grid of {seq.n} frames -> {len(stage1.keyframe_times)} keyframes, "
      f"{len(stage1.segments)} segments")

# the question targets a 3-minute window; the oracle localizer selects every
# segment overlapping it
target = (1200.0, 1380.0)
spans = {s.index: (s.start_s, s.end_s) for s in stage1.segments}
oracle = fs.OracleLocalizer(window=target, segment_spans=spans)
request = fs.LocalizationRequest(
    question="What is packed into the bag at the checkout counter?",
    keyframes=tuple(
        fs.KeyframeRef(segment=s.index, t_s=t)
        for s, t in zip(stage1.segments, stage1.keyframe_times)
    ),
    max_selected=4,
)
located = fs.localize(oracle, request)
print(f"localizer picked segments {sorted(located.selected_segments)} "
      f"for target window {target}")

plan = fs.assemble_plan("walk", duration_s, stage1_fpm, stage1, located.selected_segments, 1.0)
b = plan.budget
print(f"\nbudget: {b.stage1_frames} sparse + {b.stage2_frames} dense = {b.total_frames} frames")
print(f"sampling density over the full video : {b.sd_full_video:.4f} f/s")
print(f"sampling density inside the selection: {b.sd_dense:.4f} f/s")
print(f"coverage of the target window: {fs.coverage_rate(plan.selected_spans(), target):.2f}")

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)
plan_path = out_dir / "two_stage_plan.json"
plan_path.write_text(plan.to_json())
fs.emit_timeline(plan, gt=target, out=out_dir / "two_stage_plan.svg")
print(f"\nwrote {plan_path} and its timeline SVG next to it")
