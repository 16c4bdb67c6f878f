"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines; every tolerance is pinned here, nothing is calibrated elsewhere.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

import framesampler as fs
from framesampler.simulate import SimulationConfig, simulate


def _report(name: str, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: PASS{suffix}")


def _random_weights(rng, n):
    raw = rng.normal(size=(n, n))
    sym = (raw + raw.T) / 2
    np.fill_diagonal(sym, 0.0)
    return fs.WeightMatrix.from_dense(sym)


def _constant_sequence(duration_s, rate_fpm, dim=4):
    grid = fs.uniform_timestamps(duration_s, rate_fpm / 60.0)
    vectors = np.zeros((grid.shape[0], dim))
    vectors[:, 0] = 1.0
    return fs.EmbeddingSequence("const", vectors, grid, duration_s, source_fps=rate_fpm / 60.0)


def test_criterion_dp_oracle_equivalence():
    """DP (min-end) equals exhaustive search exactly on 1000+ random matrices."""
    start = time.monotonic()
    rng = np.random.default_rng(7)
    trials = 0
    for n in range(2, 13):
        for k in range(1, n + 1):
            for _ in range(13):
                weights = _random_weights(rng, n)
                dp = fs.select_dp(weights, k, mode="min-end")
                bf = fs.select_bruteforce(weights, k)
                assert dp.objective == bf.objective, (n, k)
                assert dp.indices == bf.indices, (n, k)
                trials += 1
    elapsed = time.monotonic() - start
    assert trials >= 1000
    assert elapsed < 60.0
    _report("dp-oracle-equivalence", f"{trials} instances in {elapsed:.1f}s")


def test_criterion_two_stage_budgets():
    """45.39-min video, 180 s selected span: totals 90/135/225 exactly."""
    start = time.monotonic()
    duration = 2723.4  # 45.39 minutes
    seq = _constant_sequence(duration, 4.0)
    stage1 = fs.plan_stage1(duration, 4.0, keep_ratio=0.25, seq=seq)
    assert len(stage1.keyframe_times) == 45

    # three consecutive segments of exactly 60 s make a 180 s target window
    lengths = [s.length_s for s in stage1.segments]
    run = next(
        i for i in range(len(lengths) - 2)
        if lengths[i] == 60.0 and lengths[i + 1] == 60.0 and lengths[i + 2] == 60.0
    )
    window = (stage1.segments[run].start_s, stage1.segments[run + 2].end_s)
    assert window[1] - window[0] == 180.0

    spans = {s.index: (s.start_s, s.end_s) for s in stage1.segments}
    impl = fs.OracleLocalizer(window=window, segment_spans=spans)
    request = fs.LocalizationRequest(
        question="synthetic",
        keyframes=tuple(
            fs.KeyframeRef(segment=s.index, t_s=t)
            for s, t in zip(stage1.segments, stage1.keyframe_times)
        ),
        max_selected=3,
    )
    selected = fs.localize(impl, request).selected_segments
    assert sorted(selected) == [run, run + 1, run + 2]

    for rate, expected in [(0.25, 90), (0.5, 135), (1.0, 225)]:
        plan = fs.assemble_plan("t2", duration, 4.0, stage1, selected, rate)
        assert plan.budget.total_frames == expected, (rate, plan.budget.total_frames)
        assert plan.budget.stage1_frames == 45

    for rate, expected in [(0.25, 45), (0.5, 90), (1.0, 180)]:
        plan = fs.oracle_plan("t2", duration, (1000.0, 1180.0), rate)
        assert plan.budget.total_frames == expected
        assert plan.budget.stage1_frames == 0

    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    _report("two-stage-budgets", f"90/135/225 and 45/90/180 exact in {elapsed:.2f}s")


def test_criterion_sd_accounting():
    """Sampling density matches the published accounting."""
    sd = fs.sampling_density(256, 45.39 * 60)
    assert abs(sd - 0.094) <= 0.001
    assert round(sd, 1) == 0.1
    assert fs.sampling_density(180, 180.0) == 1.0
    _report("sd-accounting", f"256 frames -> {sd:.4f} f/s; 180/180s -> 1.0")


def test_criterion_nsd_properties():
    """Shortest-window rule exact; scaling windows by c scales the rate by 1/c."""
    rng = np.random.default_rng(11)
    for _ in range(100):
        count = int(rng.integers(1, 12))
        starts = rng.uniform(0, 5000, size=count)
        widths = rng.uniform(0.05, 400, size=count)
        windows = [(float(s), float(s + w)) for s, w in zip(starts, widths)]
        rate = fs.estimate_nsd(windows)
        assert rate == 1.0 / min(e - s for s, e in windows)
        factor = float(rng.uniform(0.001, 1000))
        scaled = fs.estimate_nsd([(s * factor, e * factor) for s, e in windows])
        assert math.isclose(scaled, rate / factor, rel_tol=1e-9)
    _report("nsd-properties", "100 window sets")


def test_criterion_equal_spacing():
    """Constant embeddings: DP matches brute force and spans the full range."""
    for n in range(2, 13):
        grid = np.arange(n) * 10.0 + 5.0
        vectors = np.zeros((n, 3))
        vectors[:, 0] = 1.0
        seq = fs.EmbeddingSequence("flat", vectors, grid, float(n * 10))
        cfg = fs.SelectorConfig(penalty_strength=10.0, penalty_exponent=0.3, keep_ratio=1.0)
        weights = fs.build_weights(seq, cfg)
        for k in range(2, n + 1):
            dp = fs.select_dp(weights, k, mode="min-end")
            bf = fs.select_bruteforce(weights, k)
            assert dp.objective == bf.objective, (n, k)
            assert dp.indices == bf.indices, (n, k)
            assert bf.indices[0] == 0 and bf.indices[-1] == n - 1, (n, k)
    _report("equal-spacing", "n<=12, all k, maximal span")


def test_criterion_oracle_end_to_end():
    """Oracle localizer covers every target; rigged answerer scores 1.0."""
    output = simulate(SimulationConfig(n_items=50, seed=3, localizer="oracle", answerer="oracle"))
    assert output.report.mean_coverage == 1.0
    assert output.report.accuracy == 1.0
    assert output.report.n_items == 50
    _report("oracle-end-to-end", "50 items, coverage 1.0, accuracy 1.0")


def test_criterion_random_answerer():
    """Seeded uniform guesser lands at 0.25 +/- 0.03 over 2000 items."""
    output = simulate(
        SimulationConfig(n_items=2000, seed=17, localizer="oracle", answerer="random", with_plans=False)
    )
    assert abs(output.report.accuracy - 0.25) <= 0.03
    _report("random-answerer", f"accuracy {output.report.accuracy:.4f} over 2000 items")


def test_criterion_dp_performance():
    """n=1000, k=250 finishes under 10 s and 1 GiB in a fresh process."""
    script = """
import json, resource, time
import numpy as np
import framesampler as fs
rng = np.random.default_rng(0)
raw = rng.normal(size=(1000, 1000))
sym = (raw + raw.T) / 2
np.fill_diagonal(sym, 0.0)
weights = fs.WeightMatrix.from_dense(sym)
start = time.monotonic()
result = fs.select_dp(weights, 250, mode="min-end")
elapsed = time.monotonic() - start
peak_mib = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
print(json.dumps({"elapsed_s": elapsed, "peak_mib": peak_mib, "k": len(result.indices)}))
"""
    proc = subprocess.run(
        [sys.executable, "-c", script], capture_output=True, text=True, timeout=120
    )
    assert proc.returncode == 0, proc.stderr
    stats = json.loads(proc.stdout)
    assert stats["k"] == 250
    assert stats["elapsed_s"] < 10.0, stats
    assert stats["peak_mib"] < 1024.0, stats
    _report("dp-performance", f"{stats['elapsed_s']:.2f}s, {stats['peak_mib']:.0f} MiB peak")


def test_criterion_simulate_determinism(tmp_path):
    """Two simulate runs with one seed write byte-identical files."""
    outputs = []
    for name in ("first", "second"):
        out_dir = tmp_path / name
        proc = subprocess.run(
            [
                sys.executable, "-m", "framesampler.cli", "simulate",
                "--items", "6", "--seed", "99", "--out", str(out_dir),
                "--localizer", "oracle", "--answerer", "oracle", "--timelines",
            ],
            capture_output=True, text=True, timeout=300,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(out_dir)
    first, second = outputs
    files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    assert files, "simulate wrote nothing"
    for rel in files:
        assert (first / rel).read_bytes() == (second / rel).read_bytes(), rel
    _report("simulate-determinism", f"{len(files)} files byte-identical")
