"""Diversity-maximizing keyframe subset selection.

Given n frame embeddings, build a pairwise weight matrix (cosine similarity
plus a non-positive temporal-proximity penalty) and pick the k-subset whose
consecutive-pair weight sum is minimal.  Low similarity between neighbours in
the subset means high diversity, so minimizing the sum spreads the selection
over distinct visual content; the penalty keeps it from clumping in time.

Indices are 0-based everywhere in this API.  The derivation of the weight
formulas uses 1-based frame positions, but both the similarity and the
penalty depend only on index differences, so the convention is invisible to
the numbers; only the returned indices reflect it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSequence

# Two candidate subsets whose objectives differ by less than this relative
# tolerance are treated as tied and resolved to the lexicographically
# smaller index set.  Needed because float addition is not associative: the
# DP and an exhaustive enumeration accumulate the same pair weights in
# different orders.
TIE_REL_TOL = 1e-12

BACKTRACE_MODES = ("min-end", "faithful")


@dataclass(frozen=True)
class SelectorConfig:
    """Weight-matrix and selection parameters.

    penalty_strength and penalty_exponent shape the temporal-proximity
    penalty -strength * (gap/n) ** exponent.  Exactly one of ``target_count``
    and ``keep_ratio`` must be set to size the selection.
    """

    penalty_strength: float = 10.0
    penalty_exponent: float = 0.3
    target_count: int | None = None
    keep_ratio: float | None = None
    backtrace_mode: str = "min-end"
    positions_from_timestamps: bool = False

    def __post_init__(self):
        if self.penalty_strength < 0:
            raise ValueError("penalty_strength must be >= 0")
        if self.penalty_exponent <= 0:
            raise ValueError("penalty_exponent must be > 0")
        if (self.target_count is None) == (self.keep_ratio is None):
            raise ValueError("set exactly one of target_count / keep_ratio")
        if self.keep_ratio is not None and not 0 < self.keep_ratio <= 1:
            raise ValueError("keep_ratio must be in (0, 1]")
        if self.target_count is not None and self.target_count < 1:
            raise ValueError("target_count must be >= 1")
        if self.backtrace_mode not in BACKTRACE_MODES:
            raise ValueError(f"backtrace_mode must be one of {BACKTRACE_MODES}")

    def resolve_count(self, n: int) -> int:
        """Number of frames to keep out of n."""
        if self.target_count is not None:
            if self.target_count > n:
                raise ValueError(f"target_count {self.target_count} exceeds n={n}")
            return self.target_count
        return min(n, max(1, round(self.keep_ratio * n)))


@dataclass(frozen=True)
class WeightMatrix:
    """Upper-triangle pairwise weights W[i, j] = S[i, j] + P[i, j], i < j.

    Stored packed (n*(n-1)/2 values, row-major over the strict upper
    triangle) to halve resident memory; ``dense()`` materializes the full
    symmetric matrix for the solvers.
    """

    n: int
    packed: np.ndarray
    config: SelectorConfig | None = None

    def __post_init__(self):
        packed = np.asarray(self.packed, dtype=np.float64)
        expected = self.n * (self.n - 1) // 2
        if packed.shape != (expected,):
            raise ValueError(f"packed triangle for n={self.n} needs {expected} entries")
        if not np.isfinite(packed).all():
            raise ValueError("weight matrix contains non-finite entries")
        packed.setflags(write=False)
        object.__setattr__(self, "packed", packed)

    @classmethod
    def from_dense(cls, dense: np.ndarray, config: SelectorConfig | None = None) -> "WeightMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        n = dense.shape[0]
        if dense.shape != (n, n):
            raise ValueError("dense weight matrix must be square")
        return cls(n=n, packed=dense[np.triu_indices(n, 1)], config=config)

    def dense(self) -> np.ndarray:
        """Full symmetric matrix with zero diagonal."""
        full = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        full[iu] = self.packed
        full[(iu[1], iu[0])] = self.packed
        return full

    def entry(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("weights are defined for distinct frame pairs only")
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"pair ({i}, {j}) out of range for n={self.n}")
        if i > j:
            i, j = j, i
        offset = i * (2 * self.n - i - 1) // 2 + (j - i - 1)
        return float(self.packed[offset])

    def dump_csv(self, path) -> None:
        """Debug dump: one ``i,j,value`` line per upper-triangle entry."""
        with open(path, "w") as fh:
            fh.write("i,j,value\n")
            for i in range(self.n - 1):
                for j in range(i + 1, self.n):
                    fh.write(f"{i},{j},{repr(self.entry(i, j))}\n")


@dataclass(frozen=True)
class SelectionResult:
    """Selected frame indices (strictly increasing, 0-based) and objective.

    ``objective`` is the sum of pairwise weights between consecutive
    selected frames; None when no weight matrix was involved (plain uniform
    selection).  ``mode`` records which solver produced the result.
    """

    indices: tuple[int, ...]
    objective: float | None
    mode: str

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")


def similarity(seq: EmbeddingSequence, i: int, j: int) -> float:
    """Cosine similarity of frames i and j (0-based rows)."""
    n = seq.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"frame pair ({i}, {j}) out of range for n={n}")
    a, b = seq.vectors[i], seq.vectors[j]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        row = i if na == 0.0 else j
        raise ValueError(f"vector row {row} has zero norm")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def penalty(i: int, j: int, n: int, strength: float, exponent: float) -> float:
    """Temporal-proximity penalty -strength * (|i - j| / n) ** exponent.

    Always <= 0 and symmetric in i, j; equals 0 at i == j or strength 0.
    Computed from the index gap so equal gaps yield bit-identical values
    regardless of position.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"frame pair ({i}, {j}) out of range for n={n}")
    gap = abs(i - j) / n
    return -strength * gap**exponent


def build_weights(seq: EmbeddingSequence, cfg: SelectorConfig) -> WeightMatrix:
    """Pairwise weight matrix for ``seq``: cosine similarity plus penalty.

    O(n^2 d) via a single gram-matrix product.  Positions for the penalty
    come from index ratios by default; set ``cfg.positions_from_timestamps``
    to use timestamps normalized by the video duration instead (useful when
    the input grid is not uniform).
    """
    n = seq.n
    if n < 2:
        raise ValueError("need at least 2 frames to build pairwise weights")
    norms = np.linalg.norm(seq.vectors, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValueError(f"vector row {zero[0]} has zero norm")
    sims = (seq.vectors @ seq.vectors.T) / np.outer(norms, norms)
    np.clip(sims, -1.0, 1.0, out=sims)
    if cfg.positions_from_timestamps:
        pos = seq.timestamps_s / seq.duration_s
        gaps = np.abs(pos[:, None] - pos[None, :])
    else:
        gaps = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]) / n
    weights = sims - cfg.penalty_strength * gaps**cfg.penalty_exponent
    return WeightMatrix.from_dense(weights, config=cfg)


def path_objective(weights: WeightMatrix, indices) -> float:
    """Sum of weights between consecutive indices, exactly rounded (fsum)."""
    dense = weights.dense()
    return _path_objective_dense(dense, list(indices))


def _path_objective_dense(dense: np.ndarray, indices) -> float:
    return math.fsum(dense[a, b] for a, b in zip(indices, indices[1:]))


def _upper_masked(dense: np.ndarray) -> np.ndarray:
    # U[i, q] = W[i, q] for q > i, +inf elsewhere (only forward transitions)
    n = dense.shape[0]
    upper = np.where(np.triu(np.ones((n, n), dtype=bool), 1), dense, np.inf)
    return upper


def _fill_end_anchored(dense: np.ndarray, k: int):
    """dp[i, j] = minimal cost of choosing j frames with the last at i.

    Tables are (n+1) x (k+1) over 1-based frame positions with a virtual
    start at position 0 whose outgoing weights are 0, making the first
    selected frame cost-free.  trace[i, j] is the smallest predecessor
    attaining dp[i, j] (-1 where unreachable).
    """
    n = dense.shape[0]
    aug = np.full((n + 1, n + 1), np.inf)
    aug[0, 1:] = 0.0
    aug[1:, 1:] = _upper_masked(dense)
    dp = np.full((n + 1, k + 1), np.inf)
    trace = np.full((n + 1, k + 1), -1, dtype=np.int64)
    dp[0, 0] = 0.0
    cols = np.arange(n + 1)
    for j in range(1, k + 1):
        candidates = dp[:, j - 1][:, None] + aug
        best_p = np.argmin(candidates, axis=0)
        values = candidates[best_p, cols]
        dp[:, j] = values
        trace[:, j] = np.where(np.isfinite(values), best_p, -1)
    return dp, trace


def _fill_suffix(upper: np.ndarray, k: int) -> np.ndarray:
    """comp[i, j] = minimal cost of extending past frame i with j more frames."""
    n = upper.shape[0]
    comp = np.full((n, k), np.inf)
    comp[:, 0] = 0.0
    for j in range(1, k):
        comp[:, j] = np.min(upper + comp[:, j - 1][None, :], axis=1)
    return comp


def _first_within_tie(values: np.ndarray) -> int:
    best = float(np.min(values))
    cut = best + TIE_REL_TOL * max(1.0, abs(best))
    return int(np.nonzero(values <= cut)[0][0])


def select_dp(weights: WeightMatrix, k: int, mode: str = "min-end") -> SelectionResult:
    """Optimal k-subset by dynamic programming, O(n^2 k) time.

    ``min-end`` (default) minimizes over all possible final frames and
    resolves ties to the lexicographically smallest index set, matching
    select_bruteforce exactly.  ``faithful`` reproduces the backtrace of the
    reference pseudocode, which pins the final frame to index n-1; its
    objective can therefore sit above the global minimum.
    """
    if mode not in BACKTRACE_MODES:
        raise ValueError(f"mode must be one of {BACKTRACE_MODES}")
    n = weights.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    dense = weights.dense()
    dp, trace = _fill_end_anchored(dense, k)

    if mode == "faithful":
        selected = []
        i, j = n, k
        while j > 0:
            selected.append(i)
            i = int(trace[i, j])
            j -= 1
        indices = tuple(p - 1 for p in reversed(selected))
    else:
        upper = _upper_masked(dense)
        comp = _fill_suffix(upper, k)
        cur = _first_within_tie(comp[:, k - 1])
        chosen = [cur]
        for j in range(k - 1, 0, -1):
            cur = _first_within_tie(upper[cur, :] + comp[:, j - 1])
            chosen.append(cur)
        indices = tuple(chosen)

    return SelectionResult(
        indices=indices,
        objective=_path_objective_dense(dense, indices),
        mode=mode,
    )


def select_bruteforce(weights: WeightMatrix, k: int, max_subsets: int = 10**7) -> SelectionResult:
    """Exhaustive minimizer over all k-subsets; the test oracle for select_dp.

    Ties (objectives within TIE_REL_TOL relative) resolve to the
    lexicographically smallest index set.  Refuses instances with more than
    ``max_subsets`` subsets.
    """
    n = weights.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    total = math.comb(n, k)
    if total > max_subsets:
        raise ValueError(f"C({n},{k}) = {total} subsets exceeds limit {max_subsets}")
    dense = weights.dense()
    best = math.inf
    for combo in itertools.combinations(range(n), k):
        obj = _path_objective_dense(dense, combo)
        if obj < best:
            best = obj
    cut = best + TIE_REL_TOL * max(1.0, abs(best))
    for combo in itertools.combinations(range(n), k):
        obj = _path_objective_dense(dense, combo)
        if obj <= cut:
            return SelectionResult(indices=combo, objective=obj, mode="bruteforce")
    raise AssertionError("unreachable: minimum vanished between passes")


def select_uniform(n: int, k: int, weights: WeightMatrix | None = None) -> SelectionResult:
    """Evenly spaced baseline: cell centers of a k-way split of [0, n).

    Uses round-half-up so k == n returns every index; collisions from
    rounding are nudged to keep the result strictly increasing within
    [0, n).  Objective is computed when a weight matrix is supplied.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    picks = []
    prev = -1
    for j in range(1, k + 1):
        idx = int(math.floor((j - 0.5) * n / k + 0.5)) - 1
        idx = max(idx, prev + 1)
        picks.append(idx)
        prev = idx
    for j in range(k - 1, -1, -1):
        limit = n - (k - j)
        if picks[j] > limit:
            picks[j] = limit
    objective = path_objective(weights, picks) if weights is not None else None
    return SelectionResult(indices=tuple(picks), objective=objective, mode="uniform")


def select_frames(seq: EmbeddingSequence, cfg: SelectorConfig) -> SelectionResult:
    """End-to-end selection: build weights for ``seq`` and run the DP."""
    k = cfg.resolve_count(seq.n)
    if k == seq.n:
        full = tuple(range(seq.n))
        if seq.n < 2:
            return SelectionResult(indices=full, objective=0.0, mode=cfg.backtrace_mode)
        weights = build_weights(seq, cfg)
        return SelectionResult(
            indices=full,
            objective=path_objective(weights, full),
            mode=cfg.backtrace_mode,
        )
    weights = build_weights(seq, cfg)
    return select_dp(weights, k, mode=cfg.backtrace_mode)
