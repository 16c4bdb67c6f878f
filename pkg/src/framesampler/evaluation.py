"""Scoring and reporting for multiple-choice video QA runs.

Consumes QA records and model replies as JSON-lines streams, scores
accuracy, measures how well stage-1 selections cover the annotated target
segments, aggregates frame budgets, and renders timeline SVGs.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .planner import SamplingPlan, budget

LABELS = ("A", "B", "C", "D")

# pattern precedence for extracting a choice from free-form reply text:
# 1. a parenthesized label anywhere: "(B)"
# 2. "answer ... B" with optional "is"/colon/parentheses
# 3. a leading standalone label: "B", "B.", "B)", "B:"
_CHOICE_PATTERNS = (
    re.compile(r"\(([A-D])\)"),
    re.compile(r"answer(?:\s+is)?\s*:?\s*\(?([A-D])\)?(?![A-Za-z])", re.IGNORECASE),
    re.compile(r"^\s*([A-D])(?:[.):,\s]|$)"),
)


@dataclass(frozen=True)
class QARecord:
    """One multiple-choice question about one video."""

    id: str
    video_id: str
    question: str
    options: dict
    answer: str
    target_start_s: float
    target_end_s: float
    duration_s: float

    def __post_init__(self):
        if set(self.options.keys()) != set(LABELS):
            raise ValueError(f"{self.id}: options must be labeled exactly A-D")
        if self.answer not in LABELS:
            raise ValueError(f"{self.id}: answer {self.answer!r} is not one of A-D")
        if not 0 <= self.target_start_s < self.target_end_s <= self.duration_s:
            raise ValueError(
                f"{self.id}: target [{self.target_start_s}, {self.target_end_s}] "
                f"outside [0, {self.duration_s}]"
            )

    @property
    def target(self) -> tuple[float, float]:
        return (self.target_start_s, self.target_end_s)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "video_id": self.video_id,
            "question": self.question,
            "options": {k: self.options[k] for k in LABELS},
            "answer": self.answer,
            "target": {"start_s": self.target_start_s, "end_s": self.target_end_s},
            "duration_s": self.duration_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QARecord":
        return cls(
            id=str(data["id"]),
            video_id=str(data["video_id"]),
            question=data["question"],
            options=dict(data["options"]),
            answer=data["answer"],
            target_start_s=float(data["target"]["start_s"]),
            target_end_s=float(data["target"]["end_s"]),
            duration_s=float(data["duration_s"]),
        )


@dataclass(frozen=True)
class EvalReport:
    """Aggregate metrics plus one row per scored item."""

    n_items: int
    accuracy: float
    mean_total_frames: float | None
    mean_sd: float | None
    mean_coverage: float | None
    rows: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "accuracy": self.accuracy,
            "mean_total_frames": self.mean_total_frames,
            "mean_sd": self.mean_sd,
            "mean_coverage": self.mean_coverage,
            "rows": list(self.rows),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_table(self) -> str:
        """Plain-text summary table, deterministic for fixed inputs."""

        def fmt(value, pattern="{:.4f}"):
            return "-" if value is None else pattern.format(value)

        lines = [
            f"items           {self.n_items}",
            f"accuracy        {self.accuracy:.4f}",
            f"mean frames     {fmt(self.mean_total_frames, '{:.2f}')}",
            f"mean SD (f/s)   {fmt(self.mean_sd)}",
            f"mean coverage   {fmt(self.mean_coverage)}",
            "",
            "id            correct  parsed  frames  coverage",
        ]
        for row in self.rows:
            lines.append(
                "{id:<13} {correct:<8} {parsed:<7} {frames:<7} {coverage}".format(
                    id=row["id"],
                    correct=str(row["correct"]).lower(),
                    parsed=row["parsed"] or "-",
                    frames="-" if row["total_frames"] is None else row["total_frames"],
                    coverage="-" if row["coverage"] is None else f"{row['coverage']:.4f}",
                )
            )
        return "\n".join(lines) + "\n"


def parse_choice(model_reply: str) -> str | None:
    """First A-D label in ``model_reply`` per the documented precedence.

    Returns None when no label is found; callers count that as incorrect
    rather than dropping the item.
    """
    for pattern in _CHOICE_PATTERNS:
        match = pattern.search(model_reply)
        if match:
            return match.group(1).upper()
    return None


def merge_intervals(intervals) -> list[tuple[float, float]]:
    spans = sorted((float(s), float(e)) for s, e in intervals)
    merged: list[tuple[float, float]] = []
    for s, e in spans:
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def coverage_rate(predicted, gt) -> float:
    """Fraction of the ground-truth window overlapped by the predictions.

    ``predicted`` is an iterable of (start_s, end_s) spans or Segment-like
    objects with start_s/end_s attributes.
    """
    lo, hi = float(gt[0]), float(gt[1])
    if hi <= lo:
        raise ValueError("ground-truth window must have positive length")
    spans = [
        (p.start_s, p.end_s) if hasattr(p, "start_s") else (p[0], p[1]) for p in predicted
    ]
    overlap = math.fsum(
        max(0.0, min(e, hi) - max(s, lo)) for s, e in merge_intervals(spans)
    )
    return min(1.0, overlap / (hi - lo))


def evaluate(records, replies: dict, plans: dict | None = None) -> EvalReport:
    """Score ``records`` against ``replies`` (id -> reply text).

    ``plans`` optionally maps record id to its SamplingPlan; items with a
    plan contribute frame/SD/coverage numbers, items without contribute
    accuracy only.  Rows are sorted by id so the report is independent of
    input order.  Raises ValueError naming every record without a reply.
    """
    records = sorted(records, key=lambda r: r.id)
    missing = [r.id for r in records if r.id not in replies]
    if missing:
        raise ValueError(f"missing replies for ids: {', '.join(missing)}")
    if not records:
        raise ValueError("no records to evaluate")
    plans = plans or {}
    rows = []
    correct_count = 0
    frames, sds, coverages = [], [], []
    for record in records:
        parsed = parse_choice(replies[record.id])
        correct = parsed == record.answer
        correct_count += int(correct)
        row = {
            "id": record.id,
            "video_id": record.video_id,
            "parsed": parsed,
            "correct": correct,
            "total_frames": None,
            "sd": None,
            "coverage": None,
        }
        plan = plans.get(record.id)
        if plan is not None:
            summary = budget(plan)
            cov = coverage_rate(plan.selected_spans(), record.target)
            row["total_frames"] = summary.total_frames
            row["sd"] = summary.sd_full_video
            row["coverage"] = cov
            frames.append(summary.total_frames)
            sds.append(summary.sd_full_video)
            coverages.append(cov)
        rows.append(row)
    n = len(records)
    return EvalReport(
        n_items=n,
        accuracy=correct_count / n,
        mean_total_frames=(math.fsum(frames) / len(frames)) if frames else None,
        mean_sd=(math.fsum(sds) / len(sds)) if sds else None,
        mean_coverage=(math.fsum(coverages) / len(coverages)) if coverages else None,
        rows=tuple(rows),
    )


def load_qa_records(path) -> list[QARecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            records.append(QARecord.from_dict(json.loads(line)))
    return records


def save_qa_records(records, path) -> None:
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def load_replies(path) -> dict:
    replies = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            entry = json.loads(line)
            replies[str(entry["id"])] = entry["reply_text"]
    return replies


def save_replies(replies: dict, path) -> None:
    lines = [
        json.dumps({"id": k, "reply_text": replies[k]}, sort_keys=True)
        for k in sorted(replies)
    ]
    Path(path).write_text("\n".join(lines) + "\n")


# --- timeline rendering -----------------------------------------------------

_SVG_W = 1000.0
_SVG_H = 120.0
_MARGIN = 20.0


def _x(t: float, duration: float) -> str:
    return f"{_MARGIN + (_SVG_W - 2 * _MARGIN) * t / duration:.4f}"


def render_timeline(plan: SamplingPlan, gt=None) -> str:
    """SVG timeline of a plan: axis, stage-1 ticks, selected segments,
    stage-2 ticks, and an optional ground-truth band.

    Output bytes are a pure function of the inputs (fixed float formatting,
    no timestamps or generated ids), so identical plans render identically.
    """
    dur = plan.duration_s
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W:.0f}" height="{_SVG_H:.0f}" '
        f'viewBox="0 0 {_SVG_W:.0f} {_SVG_H:.0f}">',
        f'<title>{plan.video_id}</title>',
        f'<line class="axis" x1="{_MARGIN}" y1="60" x2="{_SVG_W - _MARGIN}" y2="60" '
        'stroke="#555" stroke-width="1"/>',
    ]
    if gt is not None:
        x0, x1 = _x(float(gt[0]), dur), _x(float(gt[1]), dur)
        parts.append(
            f'<rect class="gt" x="{x0}" y="40" width="{float(x1) - float(x0):.4f}" height="40" '
            'fill="#f5c26b" fill-opacity="0.5"/>'
        )
    for idx in sorted(plan.selected_segments):
        seg = plan.segments[idx]
        x0, x1 = _x(seg.start_s, dur), _x(seg.end_s, dur)
        parts.append(
            f'<rect class="selected" x="{x0}" y="50" width="{float(x1) - float(x0):.4f}" '
            'height="20" fill="#7fb3d5" fill-opacity="0.6"/>'
        )
    for t in plan.keyframe_times:
        x = _x(t, dur)
        parts.append(f'<line class="kf" x1="{x}" y1="30" x2="{x}" y2="60" stroke="#1a5276" stroke-width="1"/>')
    for t in plan.stage2_timestamps:
        x = _x(t, dur)
        parts.append(f'<line class="dense" x1="{x}" y1="60" x2="{x}" y2="85" stroke="#b03a2e" stroke-width="0.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_timeline(plan: SamplingPlan, gt=None, out=None) -> Path:
    """Write the timeline SVG for ``plan`` to ``out`` and return the path."""
    if out is None:
        raise ValueError("out path is required")
    path = Path(out)
    path.write_text(render_timeline(plan, gt))
    return path
