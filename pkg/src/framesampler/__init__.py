"""Frame sampling toolkit for long videos.

Core pieces: embedding sequences and their file formats, the
diversity-maximizing frame selector, two-stage sampling plans with budget
accounting, pluggable segment localizers, and a QA evaluation harness.
"""

from .embeddings import (
    EmbeddingFormatError,
    EmbeddingSequence,
    load_embeddings,
    normalize,
    save_embeddings,
    uniform_timestamps,
)
from .evaluation import (
    EvalReport,
    QARecord,
    coverage_rate,
    emit_timeline,
    evaluate,
    parse_choice,
    render_timeline,
)
from .localizer import (
    KeyframeRef,
    LocalizationRequest,
    LocalizationResult,
    LocalizerError,
    LocalizerParseError,
    LocalizerTimeoutError,
    LocalizerTransportError,
    MockLocalizer,
    OracleLocalizer,
    RandomLocalizer,
    RemoteLocalizer,
    localize,
    parse_segment_reply,
)
from .planner import (
    BudgetSummary,
    SamplingPlan,
    Segment,
    Stage1Plan,
    assemble_plan,
    budget,
    estimate_nsd,
    oracle_plan,
    partition_segments,
    plan_stage1,
    plan_stage2,
    sampling_density,
    summarize_budget,
)
from .selector import (
    SelectionResult,
    SelectorConfig,
    WeightMatrix,
    build_weights,
    path_objective,
    penalty,
    select_bruteforce,
    select_dp,
    select_frames,
    select_uniform,
    similarity,
)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingFormatError",
    "EmbeddingSequence",
    "load_embeddings",
    "normalize",
    "save_embeddings",
    "uniform_timestamps",
    "EvalReport",
    "QARecord",
    "coverage_rate",
    "emit_timeline",
    "evaluate",
    "parse_choice",
    "render_timeline",
    "KeyframeRef",
    "LocalizationRequest",
    "LocalizationResult",
    "LocalizerError",
    "LocalizerParseError",
    "LocalizerTimeoutError",
    "LocalizerTransportError",
    "MockLocalizer",
    "OracleLocalizer",
    "RandomLocalizer",
    "RemoteLocalizer",
    "localize",
    "parse_segment_reply",
    "BudgetSummary",
    "SamplingPlan",
    "Segment",
    "Stage1Plan",
    "assemble_plan",
    "budget",
    "estimate_nsd",
    "oracle_plan",
    "partition_segments",
    "plan_stage1",
    "plan_stage2",
    "sampling_density",
    "summarize_budget",
    "SelectionResult",
    "SelectorConfig",
    "WeightMatrix",
    "build_weights",
    "path_objective",
    "penalty",
    "select_bruteforce",
    "select_dp",
    "select_frames",
    "select_uniform",
    "similarity",
    "__version__",
]
