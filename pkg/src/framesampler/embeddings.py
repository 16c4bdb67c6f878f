"""Per-frame embedding sequences: validation, normalization, and file I/O.

The selector operates on encoder-agnostic data: whatever model produced the
embeddings, this module only cares that they arrive as an n x d matrix of
finite values with strictly increasing timestamps.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"


class EmbeddingFormatError(ValueError):
    """Raised for malformed embedding files or invalid sequences.

    ``code`` identifies the failure class, ``row`` the offending frame row
    (when one can be named):

    - ``bad-header``: missing magic bytes or truncated header
    - ``dimension-mismatch``: declared n x d disagrees with the payload
    - ``non-finite``: NaN or infinity in a vector
    - ``non-monotone-timestamps``: timestamps not strictly increasing
    - ``timestamp-out-of-range``: timestamp before 0 or after duration
    - ``zero-norm-row``: a vector with L2 norm exactly 0
    - ``missing-sidecar``: binary file without its metadata sidecar
    """

    def __init__(self, code: str, message: str, row: int | None = None):
        super().__init__(message)
        self.code = code
        self.row = row


@dataclass(frozen=True)
class EmbeddingSequence:
    """n frame embeddings with timestamps and source-video metadata.

    ``vectors`` is an n x d float64 matrix, row i the embedding of frame i
    (rows are 0-based throughout the API).  Timestamps are seconds from the
    start of the video, strictly increasing, within [0, duration_s].
    """

    video_id: str
    vectors: np.ndarray
    timestamps_s: np.ndarray
    duration_s: float
    source_fps: float = 0.0

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        timestamps = np.asarray(self.timestamps_s, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise EmbeddingFormatError(
                "dimension-mismatch",
                f"vectors must be a non-empty 2-d matrix, got shape {vectors.shape}",
            )
        if timestamps.ndim != 1 or timestamps.shape[0] != vectors.shape[0]:
            raise EmbeddingFormatError(
                "dimension-mismatch",
                f"expected {vectors.shape[0]} timestamps, got {timestamps.shape[0]}",
            )
        bad = np.nonzero(~np.isfinite(vectors).all(axis=1))[0]
        if bad.size:
            raise EmbeddingFormatError(
                "non-finite", f"non-finite value in vector row {bad[0]}", row=int(bad[0])
            )
        if not np.isfinite(timestamps).all():
            row = int(np.nonzero(~np.isfinite(timestamps))[0][0])
            raise EmbeddingFormatError(
                "non-finite", f"non-finite timestamp at row {row}", row=row
            )
        decreasing = np.nonzero(np.diff(timestamps) <= 0)[0]
        if decreasing.size:
            row = int(decreasing[0]) + 1
            raise EmbeddingFormatError(
                "non-monotone-timestamps",
                f"timestamp at row {row} does not increase past row {row - 1}",
                row=row,
            )
        if timestamps[0] < 0:
            raise EmbeddingFormatError(
                "timestamp-out-of-range", "first timestamp is negative", row=0
            )
        if timestamps[-1] > self.duration_s:
            raise EmbeddingFormatError(
                "timestamp-out-of-range",
                f"last timestamp {timestamps[-1]} exceeds duration {self.duration_s}",
                row=int(timestamps.shape[0] - 1),
            )
        vectors.setflags(write=False)
        timestamps.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "timestamps_s", timestamps)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


def normalize(seq: EmbeddingSequence) -> EmbeddingSequence:
    """Return a copy of ``seq`` with every row scaled to unit L2 norm.

    Pure: the input sequence is untouched.  Scaling rows does not change
    pairwise cosine similarities, so this is safe to apply defensively
    before building weight matrices.

    Raises:
        EmbeddingFormatError: code ``zero-norm-row`` if any row has norm 0.
    """
    norms = np.linalg.norm(seq.vectors, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise EmbeddingFormatError(
            "zero-norm-row", f"vector row {zero[0]} has zero norm", row=int(zero[0])
        )
    return EmbeddingSequence(
        video_id=seq.video_id,
        vectors=seq.vectors / norms[:, None],
        timestamps_s=seq.timestamps_s,
        duration_s=seq.duration_s,
        source_fps=seq.source_fps,
    )


def uniform_timestamps(duration_s: float, rate_hz: float) -> np.ndarray:
    """Center-of-cell uniform sampling grid.

    Divides [0, duration_s) into cells of width 1/rate_hz and samples the
    midpoint of each complete cell, so the first sample sits at half an
    interval rather than t=0.  Count is floor(duration_s * rate_hz).

    ``rate_hz`` is frames per second; divide frames-per-minute rates by 60.
    """
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    if rate_hz <= 0:
        raise ValueError(f"rate_hz must be positive, got {rate_hz}")
    count = int(math.floor(duration_s * rate_hz))
    interval = 1.0 / rate_hz
    return (np.arange(count) + 0.5) * interval


def save_embeddings(seq: EmbeddingSequence, path: str | Path, format: str = "binary") -> Path:
    """Write ``seq`` to ``path`` plus a ``<name>.meta.json`` sidecar.

    Binary layout: magic ``EMB1``, little-endian u32 n and d, then n*d
    float32 values row-major.  Vectors are quantized to float32 on disk;
    sequences loaded from disk round-trip bit-exactly.
    """
    path = Path(path)
    if format == "binary":
        payload = np.ascontiguousarray(seq.vectors, dtype="<f4")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", seq.n, seq.d))
            fh.write(payload.tobytes())
    elif format == "csv":
        header = "t," + ",".join(f"e{i}" for i in range(seq.d))
        lines = [header]
        for t, row in zip(seq.timestamps_s, seq.vectors):
            lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in row]))
        Path(path).write_text("\n".join(lines) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")
    meta = {
        "video_id": seq.video_id,
        "duration_s": seq.duration_s,
        "timestamps_s": [float(t) for t in seq.timestamps_s],
        "source_fps": seq.source_fps,
    }
    sidecar_for(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def sidecar_for(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def load_embeddings(path: str | Path, format: str = "binary") -> EmbeddingSequence:
    """Load and validate an embedding sequence from ``path``.

    Binary files require the metadata sidecar (it carries the timestamps);
    CSV files carry timestamps inline and merge the sidecar when present.

    Raises:
        EmbeddingFormatError: with a distinct ``code`` per failure mode and
            the offending row where applicable.
        FileNotFoundError: if ``path`` does not exist.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown format {format!r}")


def _read_sidecar(path: Path) -> dict | None:
    sc = sidecar_for(path)
    if not sc.exists():
        return None
    return json.loads(sc.read_text())


def _load_binary(path: Path) -> EmbeddingSequence:
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise EmbeddingFormatError("bad-header", f"{path.name}: missing EMB1 magic or truncated header")
    n, d = struct.unpack("<II", raw[4:12])
    if n < 1 or d < 1:
        raise EmbeddingFormatError("bad-header", f"{path.name}: header declares n={n}, d={d}")
    body = raw[12:]
    expected = n * d * 4
    if len(body) != expected:
        rows_present = len(body) // (d * 4)
        raise EmbeddingFormatError(
            "dimension-mismatch",
            f"{path.name}: header declares {n} rows of {d} floats but payload holds "
            f"{rows_present} complete rows ({len(body)} bytes, expected {expected})",
            row=min(n, rows_present),
        )
    vectors = np.frombuffer(body, dtype="<f4").reshape(n, d).astype(np.float64)
    meta = _read_sidecar(path)
    if meta is None:
        raise EmbeddingFormatError(
            "missing-sidecar",
            f"{path.name}: binary embeddings need {sidecar_for(path).name} for timestamps",
        )
    timestamps = np.asarray(meta["timestamps_s"], dtype=np.float64)
    if timestamps.shape[0] != n:
        raise EmbeddingFormatError(
            "dimension-mismatch",
            f"{path.name}: sidecar has {timestamps.shape[0]} timestamps for {n} rows",
            row=min(n, int(timestamps.shape[0])),
        )
    return EmbeddingSequence(
        video_id=meta.get("video_id", path.stem),
        vectors=vectors,
        timestamps_s=timestamps,
        duration_s=float(meta["duration_s"]),
        source_fps=float(meta.get("source_fps", 0.0)),
    )


def _load_csv(path: Path) -> EmbeddingSequence:
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("t,"):
        raise EmbeddingFormatError("bad-header", f"{path.name}: expected header 't,e0,...'")
    d = len(lines[0].split(",")) - 1
    if d < 1:
        raise EmbeddingFormatError("bad-header", f"{path.name}: header names no embedding columns")
    timestamps, rows = [], []
    for row_idx, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != d + 1:
            raise EmbeddingFormatError(
                "dimension-mismatch",
                f"{path.name}: row {row_idx} has {len(cells) - 1} values, expected {d}",
                row=row_idx,
            )
        try:
            values = [float(c) for c in cells]
        except ValueError as exc:
            raise EmbeddingFormatError(
                "non-finite", f"{path.name}: row {row_idx} has a non-numeric cell", row=row_idx
            ) from exc
        timestamps.append(values[0])
        rows.append(values[1:])
    if not rows:
        raise EmbeddingFormatError("bad-header", f"{path.name}: no data rows")
    meta = _read_sidecar(path) or {}
    return EmbeddingSequence(
        video_id=meta.get("video_id", path.stem),
        vectors=np.asarray(rows, dtype=np.float64),
        timestamps_s=np.asarray(timestamps, dtype=np.float64),
        duration_s=float(meta.get("duration_s", timestamps[-1])),
        source_fps=float(meta.get("source_fps", 0.0)),
    )
