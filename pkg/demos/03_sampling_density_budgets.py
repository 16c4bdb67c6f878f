"""
Sampling density and frame budgets
==================================

Two bookkeeping ideas drive the toolkit:

* necessary sampling density: how fast must a *uniform* sampler run so
  that, whatever the phase, at least one frame lands inside every cue
  window?  Answer: one over the shortest window.

* sampling density of a plan: frames divided by video seconds, the
  efficiency denominator when comparing sampling strategies.
"""

import framesampler as fs

# a question about minute-scale scenes tolerates very sparse sampling;
# second-scale hand movements do not
scene_windows = [(300.0, 540.0), (1200.0, 1500.0)]
action_windows = [(742.0, 743.5), (760.0, 761.0), (788.5, 790.5)]

print("necessary sampling density")
print(f"  minute-scale scenes : {fs.estimate_nsd(scene_windows):.4f} f/s")
print(f"  second-scale actions: {fs.estimate_nsd(action_windows):.4f} f/s")
print("  (second-scale cues force ~1 f/s on the whole video under uniform sampling)")

# what the two-stage plan pays instead, on a 45.39-minute video with a
# 3-minute target: sparse stage keeps 45 of 181 grid frames, dense stage
# covers 180 s at increasing rates
duration_s = 2723.4
print("\nframe budgets on a 45.39-min video, 180 s of selected segments")
print("  dense rate   stage1  stage2   total   SD (f/s)")
for rate in (0.25, 0.5, 1.0):
    dense = int(180.0 * rate)
    summary = fs.summarize_budget(45, dense, duration_s, 180.0)
    print(
        f"  {rate:>7.2f}    {summary.stage1_frames:>6}  {summary.stage2_frames:>6}"
        f"  {summary.total_frames:>6}   {summary.sd_full_video:.3f}"
    )

print("\nglobal uniform baselines for comparison")
for frames in (256, 768, 2723):
    print(f"  {frames:>5} frames -> SD {fs.sampling_density(frames, duration_s):.3f} f/s")

print("\nupper bound: sample only the annotated 3-minute window")
for rate in (0.25, 0.5, 1.0):
    plan = fs.oracle_plan("oracle", duration_s, (1000.0, 1180.0), rate)
    print(f"  {rate:>5.2f} f/s over the window -> {plan.budget.total_frames} frames")
