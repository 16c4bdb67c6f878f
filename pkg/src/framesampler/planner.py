"""Two-stage hierarchical sampling plans.

Stage 1 samples the whole video sparsely (optionally thinned by the
diversity selector) and partitions the timeline into segments around the
surviving keyframes.  A localizer then picks the segments worth a closer
look, and stage 2 lays a dense sampling grid over just those segments.
The budget summary accounts for total frames and sampling density.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSequence, uniform_timestamps
from .selector import SelectorConfig, select_frames


@dataclass(frozen=True)
class Segment:
    """One contiguous span [start_s, end_s) of the video timeline.

    Segments of a partition are contiguous and cover [0, duration]; the
    final segment is closed at the video end so every timestamp belongs to
    exactly one segment.
    """

    index: int
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.start_s < 0 or self.end_s <= self.start_s:
            raise ValueError(f"invalid segment [{self.start_s}, {self.end_s})")

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class BudgetSummary:
    """Frame-count and sampling-density accounting for one plan."""

    stage1_frames: int
    stage2_frames: int
    total_frames: int
    sd_full_video: float
    sd_dense: float

    def to_dict(self) -> dict:
        return {
            "stage1_frames": self.stage1_frames,
            "stage2_frames": self.stage2_frames,
            "total_frames": self.total_frames,
            "sd_full_video": self.sd_full_video,
            "sd_dense": self.sd_dense,
        }


@dataclass(frozen=True)
class Stage1Plan:
    """Sparse keyframes plus the segment partition they induce."""

    keyframe_indices: tuple[int, ...]
    keyframe_times: tuple[float, ...]
    segments: tuple[Segment, ...]


@dataclass(frozen=True)
class SamplingPlan:
    """Complete two-stage plan for one video.

    ``mode`` is "rhs" for genuine two-stage plans (keyframe count equals
    segment count by construction) or "oracle" for plans that densely
    sample a given ground-truth window with no sparse stage at all.
    """

    video_id: str
    duration_s: float
    stage1_rate_fpm: float
    keyframe_indices: tuple[int, ...]
    keyframe_times: tuple[float, ...]
    segments: tuple[Segment, ...]
    selected_segments: tuple[int, ...]
    stage2_rate_fps: float
    stage2_timestamps: tuple[float, ...]
    budget: BudgetSummary
    mode: str = "rhs"

    def __post_init__(self):
        valid = set(range(len(self.segments)))
        if not set(self.selected_segments) <= valid:
            raise ValueError("selected segment index outside the partition")
        if self.mode == "rhs":
            if len(self.keyframe_times) != len(self.segments):
                raise ValueError("two-stage plans need one keyframe per segment")
            if self.segments:
                if self.segments[0].start_s != 0.0 or self.segments[-1].end_s != self.duration_s:
                    raise ValueError("segments must cover [0, duration]")
                for a, b in zip(self.segments, self.segments[1:]):
                    if a.end_s != b.start_s:
                        raise ValueError(f"segments {a.index} and {b.index} do not meet")
        if self.budget.total_frames != len(self.keyframe_times) + len(self.stage2_timestamps):
            raise ValueError("budget totals disagree with plan contents")
        spans = self.selected_spans()
        for t in self.stage2_timestamps:
            if not any(s <= t < e for s, e in spans):
                raise ValueError(f"dense timestamp {t} outside the selected segments")

    def selected_spans(self) -> list[tuple[float, float]]:
        return [(self.segments[i].start_s, self.segments[i].end_s) for i in sorted(self.selected_segments)]

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "duration_s": self.duration_s,
            "mode": self.mode,
            "stage1": {
                "rate_fpm": self.stage1_rate_fpm,
                "keyframes": [
                    {"index": i, "t_s": t}
                    for i, t in zip(self.keyframe_indices, self.keyframe_times)
                ],
            },
            "segments": [
                {"index": s.index, "start_s": s.start_s, "end_s": s.end_s} for s in self.segments
            ],
            "selected": list(self.selected_segments),
            "stage2": {
                "rate_fps": self.stage2_rate_fps,
                "timestamps": list(self.stage2_timestamps),
            },
            "budget": self.budget.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "SamplingPlan":
        budget = BudgetSummary(**data["budget"])
        return cls(
            video_id=data["video_id"],
            duration_s=float(data["duration_s"]),
            stage1_rate_fpm=float(data["stage1"]["rate_fpm"]),
            keyframe_indices=tuple(kf["index"] for kf in data["stage1"]["keyframes"]),
            keyframe_times=tuple(kf["t_s"] for kf in data["stage1"]["keyframes"]),
            segments=tuple(
                Segment(index=s["index"], start_s=s["start_s"], end_s=s["end_s"])
                for s in data["segments"]
            ),
            selected_segments=tuple(data["selected"]),
            stage2_rate_fps=float(data["stage2"]["rate_fps"]),
            stage2_timestamps=tuple(data["stage2"]["timestamps"]),
            budget=budget,
            mode=data.get("mode", "rhs"),
        )


def partition_segments(keyframe_times, duration_s: float) -> list[Segment]:
    """Partition [0, duration] into segments with midpoint boundaries.

    Segment i runs from the midpoint between keyframes i-1 and i to the
    midpoint between i and i+1; the first starts at 0 and the last ends at
    the video duration.  Exactly one keyframe falls in each segment.
    """
    times = [float(t) for t in keyframe_times]
    if not times:
        raise ValueError("need at least one keyframe")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("keyframe times must be strictly increasing")
    if times[0] < 0 or times[-1] > duration_s:
        raise ValueError("keyframe times must lie within [0, duration]")
    bounds = [0.0]
    bounds.extend((a + b) / 2.0 for a, b in zip(times, times[1:]))
    bounds.append(float(duration_s))
    return [Segment(index=i, start_s=bounds[i], end_s=bounds[i + 1]) for i in range(len(times))]


def plan_stage1(
    duration_s: float,
    rate_fpm: float,
    keep_ratio: float = 1.0,
    seq: EmbeddingSequence | None = None,
    selector_config: SelectorConfig | None = None,
) -> Stage1Plan:
    """Sparse stage-1 keyframes and their segment partition.

    Lays a uniform grid at ``rate_fpm`` frames per minute; when
    ``keep_ratio`` < 1 the diversity selector thins it to
    round(keep_ratio * n) frames, which requires one embedding per grid
    point in ``seq``.
    """
    if not 0 < keep_ratio <= 1:
        raise ValueError("keep_ratio must be in (0, 1]")
    grid = uniform_timestamps(duration_s, rate_fpm / 60.0)
    n = grid.shape[0]
    if keep_ratio == 1.0:
        indices = tuple(range(n))
    else:
        if seq is None:
            raise ValueError("keep_ratio < 1 needs embeddings for the stage-1 grid")
        if seq.n != n:
            raise ValueError(f"grid has {n} frames but sequence has {seq.n} embeddings")
        cfg = selector_config or SelectorConfig(keep_ratio=keep_ratio)
        if cfg.keep_ratio != keep_ratio and cfg.target_count is None:
            cfg = SelectorConfig(
                penalty_strength=cfg.penalty_strength,
                penalty_exponent=cfg.penalty_exponent,
                keep_ratio=keep_ratio,
                backtrace_mode=cfg.backtrace_mode,
                positions_from_timestamps=cfg.positions_from_timestamps,
            )
        indices = select_frames(seq, cfg).indices
    times = tuple(float(grid[i]) for i in indices)
    segments = tuple(partition_segments(times, duration_s))
    return Stage1Plan(keyframe_indices=indices, keyframe_times=times, segments=segments)


def plan_stage2(segments, selected, rate_fps: float) -> list[float]:
    """Dense center-of-cell timestamps inside each selected segment.

    Segments are processed in temporal order regardless of the order of
    ``selected``; the result is strictly increasing.
    """
    if rate_fps <= 0:
        raise ValueError("rate_fps must be positive")
    segments = list(segments)
    valid = {s.index for s in segments}
    chosen = sorted(set(int(i) for i in selected))
    unknown = [i for i in chosen if i not in valid]
    if unknown:
        raise ValueError(f"unknown segment indices {unknown}")
    by_index = {s.index: s for s in segments}
    timestamps: list[float] = []
    for idx in chosen:
        seg = by_index[idx]
        local = uniform_timestamps(seg.length_s, rate_fps)
        timestamps.extend(float(seg.start_s + t) for t in local)
    return timestamps


def summarize_budget(
    stage1_frames: int,
    stage2_frames: int,
    duration_s: float,
    selected_duration_s: float,
) -> BudgetSummary:
    total = stage1_frames + stage2_frames
    return BudgetSummary(
        stage1_frames=stage1_frames,
        stage2_frames=stage2_frames,
        total_frames=total,
        sd_full_video=sampling_density(total, duration_s),
        sd_dense=sampling_density(stage2_frames, selected_duration_s) if selected_duration_s > 0 else 0.0,
    )


def sampling_density(frames: int, seconds: float) -> float:
    """Frames sampled per second of video."""
    if seconds <= 0:
        raise ValueError("seconds must be positive")
    return frames / seconds


def budget(plan: SamplingPlan, duration_s: float | None = None) -> BudgetSummary:
    """Recompute the budget summary for ``plan`` from its contents."""
    duration = plan.duration_s if duration_s is None else duration_s
    selected_duration = math.fsum(e - s for s, e in plan.selected_spans())
    return summarize_budget(
        stage1_frames=len(plan.keyframe_times),
        stage2_frames=len(plan.stage2_timestamps),
        duration_s=duration,
        selected_duration_s=selected_duration,
    )


def assemble_plan(
    video_id: str,
    duration_s: float,
    rate_fpm: float,
    stage1: Stage1Plan,
    selected,
    rate_fps: float,
) -> SamplingPlan:
    """Glue a stage-1 result and a segment selection into a full plan."""
    selected = tuple(sorted(set(int(i) for i in selected)))
    timestamps = plan_stage2(stage1.segments, selected, rate_fps)
    selected_duration = math.fsum(stage1.segments[i].length_s for i in selected)
    summary = summarize_budget(
        stage1_frames=len(stage1.keyframe_times),
        stage2_frames=len(timestamps),
        duration_s=duration_s,
        selected_duration_s=selected_duration,
    )
    return SamplingPlan(
        video_id=video_id,
        duration_s=duration_s,
        stage1_rate_fpm=rate_fpm,
        keyframe_indices=stage1.keyframe_indices,
        keyframe_times=stage1.keyframe_times,
        segments=stage1.segments,
        selected_segments=selected,
        stage2_rate_fps=rate_fps,
        stage2_timestamps=tuple(timestamps),
        budget=summary,
        mode="rhs",
    )


def oracle_plan(video_id: str, duration_s: float, window, rate_fps: float) -> SamplingPlan:
    """Plan that densely samples a known target window and nothing else.

    The upper-bound evaluation setting: no sparse stage, the annotated
    window itself is the only selected segment.
    """
    start, end = float(window[0]), float(window[1])
    if not (0 <= start < end <= duration_s):
        raise ValueError(f"window [{start}, {end}] outside [0, {duration_s}]")
    segment = Segment(index=0, start_s=start, end_s=end)
    timestamps = plan_stage2([segment], [0], rate_fps)
    summary = summarize_budget(
        stage1_frames=0,
        stage2_frames=len(timestamps),
        duration_s=duration_s,
        selected_duration_s=end - start,
    )
    return SamplingPlan(
        video_id=video_id,
        duration_s=duration_s,
        stage1_rate_fpm=0.0,
        keyframe_indices=(),
        keyframe_times=(),
        segments=(segment,),
        selected_segments=(0,),
        stage2_rate_fps=rate_fps,
        stage2_timestamps=tuple(timestamps),
        budget=summary,
        mode="oracle",
    )


def estimate_nsd(cue_windows) -> float:
    """Minimal uniform rate guaranteeing a sample inside every cue window.

    A uniform grid with interval no longer than the shortest window hits
    every window regardless of phase, so the answer is 1 / min length.
    """
    windows = [(float(s), float(e)) for s, e in cue_windows]
    if not windows:
        raise ValueError("need at least one cue window")
    lengths = [e - s for s, e in windows]
    shortest = min(lengths)
    if shortest <= 0:
        bad = lengths.index(shortest)
        raise ValueError(f"cue window {bad} has non-positive length")
    return 1.0 / shortest
