"""End-to-end dry runs on synthetic fixtures.

Generates seeded synthetic videos (random unit embeddings on a sparse
grid), QA items whose target windows sit inside one or two adjacent
stage-1 segments, plans them through the real pipeline with a chosen
localizer, answers them with a rigged or random answerer, and scores the
lot.  Everything is a pure function of the seed, so two runs with the same
seed write byte-identical files.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingSequence
from .evaluation import (
    EvalReport,
    QARecord,
    evaluate,
    render_timeline,
    save_qa_records,
    save_replies,
)
from .localizer import (
    KeyframeRef,
    LocalizationRequest,
    MockLocalizer,
    OracleLocalizer,
    RandomLocalizer,
    localize,
)
from .planner import Stage1Plan, assemble_plan, plan_stage1
from .selector import SelectorConfig

LOCALIZER_KINDS = ("oracle", "random", "mock")
ANSWERER_KINDS = ("oracle", "random")


@dataclass(frozen=True)
class SimulationConfig:
    n_items: int = 50
    seed: int = 0
    localizer: str = "oracle"
    answerer: str = "oracle"
    with_plans: bool = True
    stage1_fpm: float = 4.0
    keep_ratio: float = 0.25
    stage2_fps: float = 1.0
    max_selected: int = 2
    embedding_dim: int = 16

    def __post_init__(self):
        if self.localizer not in LOCALIZER_KINDS:
            raise ValueError(f"localizer must be one of {LOCALIZER_KINDS}")
        if self.answerer not in ANSWERER_KINDS:
            raise ValueError(f"answerer must be one of {ANSWERER_KINDS}")
        if self.n_items < 1:
            raise ValueError("n_items must be >= 1")


@dataclass(frozen=True)
class SimulationOutput:
    records: tuple[QARecord, ...]
    replies: dict
    plans: dict
    report: EvalReport


def _synthetic_sequence(rng, video_id: str, duration_s: float, rate_fpm: float, dim: int) -> EmbeddingSequence:
    from .embeddings import uniform_timestamps

    grid = uniform_timestamps(duration_s, rate_fpm / 60.0)
    vectors = rng.normal(size=(grid.shape[0], dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return EmbeddingSequence(
        video_id=video_id,
        vectors=vectors,
        timestamps_s=grid,
        duration_s=duration_s,
        source_fps=rate_fpm / 60.0,
    )


def _draw_target(rng, stage1: Stage1Plan, duration_s: float) -> tuple[float, float]:
    """Target window inside one segment or straddling two adjacent ones."""
    segments = stage1.segments
    span = int(rng.integers(1, 3)) if len(segments) > 1 else 1
    first = int(rng.integers(0, len(segments) - span + 1))
    lo = segments[first].start_s
    hi = segments[first + span - 1].end_s
    width = hi - lo
    start = lo + float(rng.uniform(0.05, 0.35)) * width
    end = lo + float(rng.uniform(0.65, 0.95)) * width
    return (round(start, 3), round(min(end, duration_s), 3))


def _make_record(rng, idx: int, stage1: Stage1Plan, video_id: str, duration_s: float) -> QARecord:
    target = _draw_target(rng, stage1, duration_s)
    answer = "ABCD"[int(rng.integers(0, 4))]
    options = {label: f"Option {label} for item {idx}" for label in "ABCD"}
    return QARecord(
        id=f"item-{idx:05d}",
        video_id=video_id,
        question=f"What happens between {target[0]:.0f}s and {target[1]:.0f}s in video {video_id}?",
        options=options,
        answer=answer,
        target_start_s=target[0],
        target_end_s=target[1],
        duration_s=duration_s,
    )


def _build_localizer(kind: str, record: QARecord, stage1: Stage1Plan, seed: int):
    if kind == "oracle":
        spans = {s.index: (s.start_s, s.end_s) for s in stage1.segments}
        return OracleLocalizer(window=record.target, segment_spans=spans)
    if kind == "random":
        return RandomLocalizer(seed=seed)
    return MockLocalizer(segments=(0,))


def _answer(kind: str, rng, record: QARecord) -> str:
    if kind == "oracle":
        return f"The answer is ({record.answer})."
    return f"Answer: {'ABCD'[int(rng.integers(0, 4))]}"


def _run_item(config: SimulationConfig, idx: int):
    """One synthetic item; seeded by (seed, idx) so order of execution is moot."""
    rng = np.random.default_rng([config.seed, idx])
    duration_s = round(float(rng.uniform(2400.0, 3600.0)), 1)
    video_id = f"vid-{idx:05d}"
    if config.with_plans:
        seq = _synthetic_sequence(rng, video_id, duration_s, config.stage1_fpm, config.embedding_dim)
        stage1 = plan_stage1(
            duration_s,
            config.stage1_fpm,
            keep_ratio=config.keep_ratio,
            seq=seq,
            selector_config=SelectorConfig(keep_ratio=config.keep_ratio),
        )
    else:
        # accuracy-only runs skip the selector; plain grid partition
        stage1 = plan_stage1(duration_s, config.stage1_fpm, keep_ratio=1.0)
    record = _make_record(rng, idx, stage1, video_id, duration_s)
    reply = _answer(config.answerer, rng, record)
    plan = None
    if config.with_plans:
        impl = _build_localizer(config.localizer, record, stage1, config.seed)
        request = LocalizationRequest(
            question=record.question,
            keyframes=tuple(
                KeyframeRef(segment=s.index, t_s=t)
                for s, t in zip(stage1.segments, stage1.keyframe_times)
            ),
            max_selected=config.max_selected,
        )
        result = localize(impl, request)
        plan = assemble_plan(
            video_id,
            duration_s,
            config.stage1_fpm,
            stage1,
            result.selected_segments,
            config.stage2_fps,
        )
    return record, reply, plan


def simulate(config: SimulationConfig, jobs: int = 1) -> SimulationOutput:
    """Run the synthetic pipeline and score it.

    ``jobs`` bounds a worker pool over items; results are identical to the
    sequential run because every item derives its own RNG stream.
    """
    indices = range(config.n_items)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            items = list(pool.map(lambda i: _run_item(config, i), indices))
    else:
        items = [_run_item(config, i) for i in indices]
    records = [record for record, _, _ in items]
    replies = {record.id: reply for record, reply, _ in items}
    plans = {record.id: plan for record, _, plan in items if plan is not None}
    report = evaluate(records, replies, plans if config.with_plans else None)
    return SimulationOutput(
        records=tuple(records), replies=replies, plans=plans, report=report
    )


def write_outputs(output: SimulationOutput, out_dir, timelines: bool = False) -> list[Path]:
    """Write qa.jsonl, replies.jsonl, plans/, and the report files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    qa_path = out / "qa.jsonl"
    save_qa_records(output.records, qa_path)
    written.append(qa_path)
    replies_path = out / "replies.jsonl"
    save_replies(output.replies, replies_path)
    written.append(replies_path)
    if output.plans:
        plans_dir = out / "plans"
        plans_dir.mkdir(exist_ok=True)
        for item_id in sorted(output.plans):
            plan_path = plans_dir / f"{item_id}.json"
            plan_path.write_text(output.plans[item_id].to_json())
            written.append(plan_path)
            if timelines:
                svg_path = plans_dir / f"{item_id}.svg"
                record = next(r for r in output.records if r.id == item_id)
                svg_path.write_text(render_timeline(output.plans[item_id], record.target))
                written.append(svg_path)
    report_json = out / "report.json"
    report_json.write_text(output.report.to_json())
    written.append(report_json)
    report_txt = out / "report.txt"
    report_txt.write_text(output.report.to_table())
    written.append(report_txt)
    return written
