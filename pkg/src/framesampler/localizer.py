"""Stage-1 segment localization: which parts of the video deserve dense sampling.

The planner hands a localizer the sparse keyframes, their segments, and the
question; the localizer answers with a subset of segment indices.  Besides
the remote client that asks an actual vision-language endpoint, this module
ships an oracle (ground-truth overlap), a seeded random picker, and a fixed
mock for tests and dry runs.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import re
import threading
import time
from collections import Counter
from dataclasses import dataclass
from importlib import resources

import numpy as np

logger = logging.getLogger(__name__)

PROMPT_VERSION = "localize_v1"


class LocalizerError(Exception):
    """Base class for localization failures."""


class LocalizerTransportError(LocalizerError):
    """Endpoint unreachable, bad status, or malformed response body."""


class LocalizerTimeoutError(LocalizerTransportError):
    """Request exceeded the configured timeout."""


class LocalizerParseError(LocalizerError):
    """No segment selection could be extracted from the reply text."""


@dataclass(frozen=True)
class KeyframeRef:
    """One stage-1 keyframe shown to the localizer."""

    segment: int
    t_s: float
    frame_path: str | None = None


@dataclass(frozen=True)
class LocalizationRequest:
    question: str
    keyframes: tuple[KeyframeRef, ...]
    options: tuple[str, ...] | None = None
    max_selected: int = 2

    def __post_init__(self):
        if not self.keyframes:
            raise ValueError("request needs at least one keyframe")
        if self.max_selected < 1:
            raise ValueError("max_selected must be >= 1")
        if self.options is not None and len(self.options) != 4:
            raise ValueError("options must be exactly 4 texts when given")

    @property
    def segment_indices(self) -> tuple[int, ...]:
        return tuple(kf.segment for kf in self.keyframes)


@dataclass(frozen=True)
class LocalizationResult:
    selected_segments: frozenset[int]
    rationale: str = ""
    latency_ms: float = 0.0


# response grammar: integers following the token "segment(s)", separated by
# commas, "and", or whitespace; an optional colon after the token
_SEGMENT_LIST = re.compile(
    r"segments?\s*:?\s*((?:#?\d+)(?:\s*(?:,|and|&)?\s*#?\d+)*)", re.IGNORECASE
)
_FRAME_MENTION = re.compile(r"frame\s*#?(\d+)", re.IGNORECASE)


def parse_segment_reply(text: str) -> set[int]:
    """Extract the segment indices named in a localizer reply.

    Duplicates collapse and order is ignored.  Raises LocalizerParseError
    when no integer follows any "segment(s)" token.
    """
    found: set[int] = set()
    for match in _SEGMENT_LIST.finditer(text):
        found.update(int(v) for v in re.findall(r"\d+", match.group(1)))
    if not found:
        raise LocalizerParseError(f"no segment numbers in reply: {text[:120]!r}")
    return found


def _fallback_from_frame_mentions(text: str, request: LocalizationRequest) -> set[int]:
    """Last resort: the segment whose keyframe the reply mentions most."""
    frame_to_segment = {i: kf.segment for i, kf in enumerate(request.keyframes)}
    counts = Counter(
        frame_to_segment[int(m)] for m in _FRAME_MENTION.findall(text) if int(m) in frame_to_segment
    )
    if not counts:
        raise LocalizerParseError(f"reply names no segments and no known frames: {text[:120]!r}")
    top = max(counts.values())
    return {min(seg for seg, c in counts.items() if c == top)}


def build_prompt(request: LocalizationRequest) -> str:
    """Render the frozen localization prompt for ``request``."""
    template = resources.files("framesampler").joinpath(f"prompts/{PROMPT_VERSION}.txt").read_text()
    frame_lines = "\n".join(
        f"Frame {i} @ {kf.t_s:.1f}s -> segment {kf.segment}"
        for i, kf in enumerate(request.keyframes)
    )
    question = request.question
    if request.options is not None:
        labels = ["A", "B", "C", "D"]
        question += "\n" + "\n".join(f"{l}. {o}" for l, o in zip(labels, request.options))
    return template.format(
        frame_lines=frame_lines, question=question, max_selected=request.max_selected
    )


class MockLocalizer:
    """Deterministic test double returning a fixed selection.

    The configured indices are filtered to the request's segments and
    truncated to ``max_selected``; with no overlap it falls back to the
    first segment.
    """

    def __init__(self, segments=(0,)):
        self.segments = tuple(int(s) for s in segments)

    def localize(self, request: LocalizationRequest) -> LocalizationResult:
        valid = set(request.segment_indices)
        picks = [s for s in self.segments if s in valid][: request.max_selected]
        if not picks:
            picks = [request.segment_indices[0]]
        return LocalizationResult(selected_segments=frozenset(picks), rationale="mock")


class OracleLocalizer:
    """Selects every segment overlapping the ground-truth window.

    When more segments overlap than ``max_selected`` allows, the largest
    overlaps win (ties to the earlier segment), so coverage degrades
    gracefully instead of the cap being violated.
    """

    def __init__(self, window, segment_spans):
        self.window = (float(window[0]), float(window[1]))
        # segment index -> (start_s, end_s)
        self.spans = {int(i): (float(s), float(e)) for i, (s, e) in segment_spans.items()}

    def localize(self, request: LocalizationRequest) -> LocalizationResult:
        lo, hi = self.window
        overlaps = []
        for idx in request.segment_indices:
            s, e = self.spans[idx]
            ov = min(e, hi) - max(s, lo)
            if ov > 0:
                overlaps.append((idx, ov))
        if not overlaps:
            # window between samples; nearest segment keeps the result non-empty
            nearest = min(
                request.segment_indices,
                key=lambda i: abs((self.spans[i][0] + self.spans[i][1]) / 2 - (lo + hi) / 2),
            )
            return LocalizationResult(selected_segments=frozenset({nearest}), rationale="oracle:nearest")
        overlaps.sort(key=lambda pair: (-pair[1], pair[0]))
        picks = frozenset(idx for idx, _ in overlaps[: request.max_selected])
        return LocalizationResult(selected_segments=picks, rationale="oracle:overlap")


class RandomLocalizer:
    """Seeded uniform pick of ``max_selected`` distinct segments.

    The per-request RNG is derived from the seed plus a digest of the
    question and segment list, so repeat calls with the same request give
    the same answer in any process.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def localize(self, request: LocalizationRequest) -> LocalizationResult:
        digest = hashlib.sha256(
            json.dumps([request.question, list(request.segment_indices)]).encode()
        ).digest()
        rng = np.random.default_rng([self.seed, int.from_bytes(digest[:8], "big")])
        pool = list(request.segment_indices)
        count = min(request.max_selected, len(pool))
        picks = rng.choice(len(pool), size=count, replace=False)
        return LocalizationResult(
            selected_segments=frozenset(pool[i] for i in picks), rationale="random"
        )


class RemoteLocalizer:
    """HTTP client for a vision-language localization endpoint.

    One JSON request per attempt: {model, question, frames, instruction};
    the response body must be {"text": ...} and the text must follow the
    segment-reply grammar.  Retries are independent: each attempt is parsed
    in isolation, so a retry can never merge selections from two replies.
    A semaphore bounds in-flight requests across threads.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        timeout_s: float = 30.0,
        max_in_flight: int = 4,
        retries: int = 2,
        include_images: bool = True,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout_s = timeout_s
        self.retries = max(1, int(retries))
        self.include_images = include_images
        self._slot = threading.Semaphore(max_in_flight)

    def _frame_payload(self, kf: KeyframeRef) -> dict:
        entry = {"segment": kf.segment, "t_s": kf.t_s}
        if kf.frame_path is None or not self.include_images:
            entry["image"] = None
        elif kf.frame_path.startswith(("http://", "https://", "file://")):
            entry["image"] = kf.frame_path
        else:
            try:
                with open(kf.frame_path, "rb") as fh:
                    entry["image"] = base64.b64encode(fh.read()).decode("ascii")
            except OSError:
                entry["image"] = "file://" + kf.frame_path
        return entry

    def localize(self, request: LocalizationRequest) -> LocalizationResult:
        import requests
        from requests import exceptions as rex

        payload = {
            "model": self.model,
            "question": request.question,
            "frames": [self._frame_payload(kf) for kf in request.keyframes],
            "instruction": build_prompt(request),
        }
        last_error: Exception | None = None
        for attempt in range(self.retries):
            start = time.monotonic()
            try:
                with self._slot:
                    response = requests.post(self.endpoint, json=payload, timeout=self.timeout_s)
            except rex.Timeout as exc:
                last_error = LocalizerTimeoutError(f"attempt {attempt + 1}: {exc}")
                logger.warning("localize timeout (attempt %d/%d)", attempt + 1, self.retries)
                continue
            except rex.RequestException as exc:
                last_error = LocalizerTransportError(f"attempt {attempt + 1}: {exc}")
                logger.warning("localize transport error (attempt %d/%d): %s", attempt + 1, self.retries, exc)
                continue
            latency = (time.monotonic() - start) * 1000.0
            if response.status_code != 200:
                last_error = LocalizerTransportError(
                    f"attempt {attempt + 1}: HTTP {response.status_code}"
                )
                continue
            try:
                text = response.json()["text"]
            except (ValueError, KeyError) as exc:
                last_error = LocalizerTransportError(f"attempt {attempt + 1}: bad body ({exc})")
                continue
            # each attempt parses its own reply only; never merge attempts
            try:
                selected = parse_segment_reply(text)
            except LocalizerParseError:
                try:
                    selected = _fallback_from_frame_mentions(text, request)
                except LocalizerParseError as exc:
                    last_error = exc
                    continue
            valid = set(request.segment_indices)
            selected &= valid
            if not selected:
                last_error = LocalizerParseError("reply named no segment of this video")
                continue
            picks = sorted(selected)[: request.max_selected]
            return LocalizationResult(
                selected_segments=frozenset(picks), rationale=text, latency_ms=latency
            )
        raise last_error if last_error is not None else LocalizerTransportError("no attempts made")


def localize(impl, request: LocalizationRequest) -> LocalizationResult:
    """Run ``impl`` on ``request`` and enforce the result contract.

    Guarantees the selection is a non-empty subset of the request's
    segments, no larger than ``max_selected``.
    """
    result = impl.localize(request)
    valid = set(request.segment_indices)
    if not result.selected_segments:
        raise LocalizerError(f"{type(impl).__name__} returned an empty selection")
    if not set(result.selected_segments) <= valid:
        raise LocalizerError(
            f"{type(impl).__name__} selected segments outside the request: "
            f"{sorted(set(result.selected_segments) - valid)}"
        )
    if len(result.selected_segments) > request.max_selected:
        raise LocalizerError(
            f"{type(impl).__name__} exceeded max_selected={request.max_selected}"
        )
    return result
