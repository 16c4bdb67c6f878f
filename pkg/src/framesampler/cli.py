"""Command-line surface for batch runs.

Subcommands: select, plan, partition, nsd, evaluate, timeline, simulate.
Settings resolve as flags > environment variables > config file > defaults,
with defaults matching the toolkit's standard operating point (4 frames per
minute sparse, keep ratio 0.25, penalty 10.0 / 0.3, 1 fps dense).

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import embeddings as emb
from . import evaluation as ev
from . import planner as pl
from . import selector as sel

ENV_PREFIX = "FRAMESAMPLER_"

DEFAULTS = {
    "penalty_strength": 10.0,
    "penalty_exponent": 0.3,
    "keep_ratio": 0.25,
    "backtrace_mode": "min-end",
    "stage1_fpm": 4.0,
    "stage2_fps": 1.0,
    "localizer": "mock",
    "endpoint": "",
    "model": "default",
    "timeout_s": 30.0,
    "max_in_flight": 4,
    "max_selected": 2,
    "jobs": 1,
    "seed": 0,
}


class UsageError(ValueError):
    """Validation problem that maps to exit code 2."""


@dataclass
class RunConfig:
    """Resolved run-level settings (see module docstring for precedence)."""

    penalty_strength: float
    penalty_exponent: float
    keep_ratio: float
    backtrace_mode: str
    stage1_fpm: float
    stage2_fps: float
    localizer: str
    endpoint: str
    model: str
    timeout_s: float
    max_in_flight: int
    max_selected: int
    jobs: int
    seed: int

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "RunConfig":
        file_values = {}
        config_path = getattr(args, "config", None) or os.environ.get(ENV_PREFIX + "CONFIG")
        if config_path:
            try:
                file_values = json.loads(Path(config_path).read_text())
            except OSError as exc:
                raise UsageError(f"cannot read config file: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise UsageError(f"config file is not valid JSON: {exc}") from exc
        values = {}
        for key, default in DEFAULTS.items():
            value = getattr(args, key, None)
            if value is None:
                env = os.environ.get(ENV_PREFIX + key.upper())
                if env is not None:
                    value = env
                elif key in file_values:
                    value = file_values[key]
                else:
                    value = default
            values[key] = type(default)(value)
        cfg = cls(**values)
        if cfg.stage1_fpm <= 0 or cfg.stage2_fps <= 0:
            raise UsageError("rates must be positive")
        if cfg.jobs < 1:
            raise UsageError("jobs must be >= 1")
        if not 0 < cfg.keep_ratio <= 1:
            raise UsageError("keep ratio must be in (0, 1]")
        return cfg

    def selector_config(self, target_count: int | None = None, keep_ratio: float | None = None) -> sel.SelectorConfig:
        if target_count is None and keep_ratio is None:
            keep_ratio = self.keep_ratio
        return sel.SelectorConfig(
            penalty_strength=self.penalty_strength,
            penalty_exponent=self.penalty_exponent,
            target_count=target_count,
            keep_ratio=keep_ratio,
            backtrace_mode=self.backtrace_mode,
        )


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _dump_json(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


# --- subcommands -------------------------------------------------------------


def cmd_select(args: argparse.Namespace) -> int:
    cfg = RunConfig.resolve(args)
    if (args.k is None) == (args.ratio is None):
        raise UsageError("give exactly one of --k / --ratio")
    if args.k is not None and args.k < 1:
        raise UsageError("--k must be >= 1")
    seq = emb.load_embeddings(args.embeddings, format=args.format)
    selector_cfg = cfg.selector_config(target_count=args.k, keep_ratio=args.ratio)
    result = sel.select_frames(seq, selector_cfg)
    payload = {
        "video_id": seq.video_id,
        "indices": list(result.indices),
        "timestamps_s": [float(seq.timestamps_s[i]) for i in result.indices],
        "objective": result.objective,
        "mode": result.mode,
        "n": seq.n,
        "k": len(result.indices),
    }
    text = _dump_json(payload)
    if args.out:
        _write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def _build_localizer(cfg: RunConfig, args: argparse.Namespace, stage1: pl.Stage1Plan):
    from . import localizer as loc

    kind = cfg.localizer
    if kind == "mock":
        if args.segments:
            picks = [int(s) for s in args.segments.split(",") if s.strip()]
        else:
            picks = [0]
        return loc.MockLocalizer(segments=picks), max(len(picks), 1)
    if kind == "oracle":
        if not args.gt:
            raise UsageError("--localizer oracle needs --gt start,end")
        start, end = (float(v) for v in args.gt.split(","))
        spans = {s.index: (s.start_s, s.end_s) for s in stage1.segments}
        return loc.OracleLocalizer(window=(start, end), segment_spans=spans), cfg.max_selected
    if kind == "random":
        return loc.RandomLocalizer(seed=cfg.seed), cfg.max_selected
    if kind == "remote":
        if not cfg.endpoint:
            raise UsageError("--localizer remote needs an endpoint (flag, env, or config)")
        return (
            loc.RemoteLocalizer(
                endpoint=cfg.endpoint,
                model=cfg.model,
                timeout_s=cfg.timeout_s,
                max_in_flight=cfg.max_in_flight,
            ),
            cfg.max_selected,
        )
    raise UsageError(f"unknown localizer {kind!r}")


def cmd_plan(args: argparse.Namespace) -> int:
    from . import localizer as loc

    cfg = RunConfig.resolve(args)
    keep_ratio = args.ratio if args.ratio is not None else cfg.keep_ratio
    seq = None
    if args.embeddings:
        seq = emb.load_embeddings(args.embeddings, format=args.format)
        duration = seq.duration_s
        video_id = args.video_id or seq.video_id
    else:
        if keep_ratio < 1.0:
            raise UsageError("keep ratio < 1 needs --embeddings")
        if args.duration is None:
            raise UsageError("give --embeddings or --duration")
        duration = args.duration
        video_id = args.video_id or "video"
    stage1 = pl.plan_stage1(
        duration,
        cfg.stage1_fpm,
        keep_ratio=keep_ratio,
        seq=seq,
        selector_config=cfg.selector_config(keep_ratio=keep_ratio) if keep_ratio < 1 else None,
    )
    if cfg.localizer == "fixed":
        # explicit selection pass-through; may legitimately be empty
        selected = [int(s) for s in (args.segments or "").split(",") if s.strip()]
    else:
        impl, max_selected = _build_localizer(cfg, args, stage1)
        request = loc.LocalizationRequest(
            question=args.question or "Which segments matter?",
            keyframes=tuple(
                loc.KeyframeRef(segment=s.index, t_s=t)
                for s, t in zip(stage1.segments, stage1.keyframe_times)
            ),
            max_selected=max_selected,
        )
        selected = loc.localize(impl, request).selected_segments
    plan = pl.assemble_plan(
        video_id, duration, cfg.stage1_fpm, stage1, selected, cfg.stage2_fps
    )
    _write_atomic(Path(args.out), plan.to_json())
    if args.timeline:
        gt = tuple(float(v) for v in args.gt.split(",")) if args.gt else None
        _write_atomic(Path(args.timeline), ev.render_timeline(plan, gt))
    if args.extract_out:
        if not args.extract_template or not args.video_path:
            raise UsageError("--extract-out needs --extract-template and --video-path")
        _write_atomic(
            Path(args.extract_out),
            render_extract_commands(plan, args.extract_template, args.video_path),
        )
    return 0


def render_extract_commands(plan: pl.SamplingPlan, template: str, video_path: str) -> str:
    """One decoder command per sampled timestamp, from a user template.

    The template receives {video_path}, {t_s}, and {out_path}; the toolkit
    renders the commands but never runs a decoder itself.
    """
    lines = []
    for stage, timestamps in (("stage1", plan.keyframe_times), ("stage2", plan.stage2_timestamps)):
        for i, t in enumerate(timestamps):
            out_path = f"{plan.video_id}_{stage}_{i:05d}.jpg"
            lines.append(template.format(video_path=video_path, t_s=t, out_path=out_path))
    return "\n".join(lines) + "\n"


def cmd_partition(args: argparse.Namespace) -> int:
    times = [float(v) for v in args.keyframes.split(",") if v.strip()]
    segments = pl.partition_segments(times, args.duration)
    payload = [{"index": s.index, "start_s": s.start_s, "end_s": s.end_s} for s in segments]
    text = _dump_json(payload)
    if args.out:
        _write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_nsd(args: argparse.Namespace) -> int:
    windows = []
    for chunk in args.windows.split(";"):
        if chunk.strip():
            start, end = (float(v) for v in chunk.split(","))
            windows.append((start, end))
    rate = pl.estimate_nsd(windows)
    sys.stdout.write(_dump_json({"nsd_fps": rate, "windows": len(windows)}))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    records = ev.load_qa_records(args.qa)
    replies = ev.load_replies(args.replies)
    plans = None
    if args.plans_dir:
        plans = {}
        for record in records:
            path = Path(args.plans_dir) / f"{record.id}.json"
            if path.exists():
                plans[record.id] = pl.SamplingPlan.from_dict(json.loads(path.read_text()))
    report = ev.evaluate(records, replies, plans)
    _write_atomic(Path(args.out_prefix + ".json"), report.to_json())
    _write_atomic(Path(args.out_prefix + ".txt"), report.to_table())
    sys.stdout.write(report.to_table())
    return 0


def cmd_timeline(args: argparse.Namespace) -> int:
    plan = pl.SamplingPlan.from_dict(json.loads(Path(args.plan).read_text()))
    gt = tuple(float(v) for v in args.gt.split(",")) if args.gt else None
    _write_atomic(Path(args.out), ev.render_timeline(plan, gt))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    from . import simulate as sim

    cfg = RunConfig.resolve(args)
    config = sim.SimulationConfig(
        n_items=args.items,
        seed=cfg.seed,
        localizer=args.sim_localizer,
        answerer=args.answerer,
        with_plans=not args.no_plans,
        stage1_fpm=cfg.stage1_fpm,
        keep_ratio=cfg.keep_ratio,
        stage2_fps=cfg.stage2_fps,
        max_selected=cfg.max_selected,
    )
    output = sim.simulate(config, jobs=cfg.jobs)
    sim.write_outputs(output, args.out, timelines=args.timelines)
    sys.stdout.write(output.report.to_table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file (flags and env override it)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed for seeded components")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker bound for batch work")

    parser = argparse.ArgumentParser(
        prog="framesampler",
        description="Frame sampling toolkit: diverse keyframe selection, two-stage plans, QA scoring.",
        parents=[common],
    )
    parser.set_defaults(config=None, seed=None, jobs=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("select", help="pick a diverse frame subset from an embedding file")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--format", choices=("binary", "csv"), default="binary")
    p.add_argument("--k", type=int, default=None, help="exact number of frames to keep")
    p.add_argument("--ratio", type=float, default=None, help="fraction of frames to keep")
    p.add_argument("--penalty-strength", dest="penalty_strength", type=float, default=None)
    p.add_argument("--penalty-exponent", dest="penalty_exponent", type=float, default=None)
    p.add_argument("--mode", dest="backtrace_mode", choices=sel.BACKTRACE_MODES, default=None)
    p.add_argument("--out", default=None, help="output JSON (stdout when omitted)")
    p.set_defaults(func=cmd_select)

    p = add_parser("plan", help="build a two-stage sampling plan")
    p.add_argument("--video-id", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--format", choices=("binary", "csv"), default="binary")
    p.add_argument("--duration", type=float, default=None, help="seconds; required without embeddings")
    p.add_argument("--question", default=None)
    p.add_argument("--ratio", type=float, default=None, help="stage-1 keep ratio")
    p.add_argument("--stage1-fpm", dest="stage1_fpm", type=float, default=None)
    p.add_argument("--stage2-fps", dest="stage2_fps", type=float, default=None)
    p.add_argument("--penalty-strength", dest="penalty_strength", type=float, default=None)
    p.add_argument("--penalty-exponent", dest="penalty_exponent", type=float, default=None)
    p.add_argument("--localizer", dest="localizer", choices=("mock", "fixed", "oracle", "random", "remote"), default=None)
    p.add_argument("--segments", default=None, help="comma list for the mock/fixed localizer")
    p.add_argument("--gt", default=None, help="start,end seconds for the oracle localizer")
    p.add_argument("--max-selected", dest="max_selected", type=int, default=None)
    p.add_argument("--endpoint", default=None, help="remote localizer URL")
    p.add_argument("--model", default=None)
    p.add_argument("--timeout-s", dest="timeout_s", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--timeline", default=None, help="also write a timeline SVG here")
    p.add_argument("--extract-template", dest="extract_template", default=None,
                   help="decoder command template with {video_path} {t_s} {out_path}")
    p.add_argument("--video-path", dest="video_path", default=None)
    p.add_argument("--extract-out", dest="extract_out", default=None,
                   help="write one rendered decoder command per sampled frame")
    p.set_defaults(func=cmd_plan)

    p = add_parser("partition", help="midpoint segment partition for keyframe times")
    p.add_argument("--keyframes", required=True, help="comma-separated seconds")
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_partition)

    p = add_parser("nsd", help="necessary sampling density for cue windows")
    p.add_argument("--windows", required=True, help="semicolon-separated start,end pairs")
    p.set_defaults(func=cmd_nsd)

    p = add_parser("evaluate", help="score a QA run")
    p.add_argument("--qa", required=True)
    p.add_argument("--replies", required=True)
    p.add_argument("--plans-dir", default=None)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = add_parser("timeline", help="render a plan file as an SVG timeline")
    p.add_argument("--plan", required=True)
    p.add_argument("--gt", default=None, help="start,end seconds")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_timeline)

    p = add_parser("simulate", help="seeded end-to-end run on synthetic fixtures")
    p.add_argument("--items", type=int, default=50)
    p.add_argument("--out", required=True)
    p.add_argument("--localizer", dest="sim_localizer", choices=("oracle", "random", "mock"), default="mock")
    p.add_argument("--answerer", choices=("oracle", "random"), default="oracle")
    p.add_argument("--no-plans", action="store_true", help="skip planning; score answers only")
    p.add_argument("--timelines", action="store_true", help="write per-item timeline SVGs")
    p.add_argument("--stage1-fpm", dest="stage1_fpm", type=float, default=None)
    p.add_argument("--stage2-fps", dest="stage2_fps", type=float, default=None)
    p.add_argument("--ratio", dest="keep_ratio", type=float, default=None)
    p.add_argument("--max-selected", dest="max_selected", type=int, default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (emb.EmbeddingFormatError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit 1
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
