"""Adaptive batch-size scheduling driven by gradient and loss dynamics.

The package is organized around a small epoch-step engine:

* :mod:`deba.types` — records, signal frames, config, decisions, state
* :mod:`deba.signals` — variance/norm/variation/confidence computation
* :mod:`deba.decision` — the increase/rollback/hold rule with cooldown
* :mod:`deba.profiler` — stability scoring, taxonomy, threshold calibration
* :mod:`deba.trace_io` — trace, decision-log, config, and checkpoint files
* :mod:`deba.sim` — synthetic dynamics, throughput models, replay harness
* :mod:`deba.cli` — the ``deba`` command
"""

__version__ = "0.1.0"

from .decision import StepOutcome, apply_update, classify, step
from .profiler import (
    CalibratedThresholds,
    DebaDiagnostics,
    SeedAggregate,
    StabilityProfile,
    Taxonomy,
    aggregate_seeds,
    calibrate_thresholds,
    classify_taxonomy,
    deba_diagnostics,
    stability_score,
)
from .signals import (
    WindowStats,
    build_signal_frame,
    compute_frames,
    confidence_score,
    gradient_norm,
    gradient_variance,
    relative_variation,
)
from .sim import (
    DynamicsSpec,
    ParametricThroughput,
    Phase,
    ReplayResult,
    TableThroughput,
    estimate_walltime,
    generate_trace,
    replay,
)
from .types import (
    Decision,
    DecisionKind,
    DecisionReason,
    EpochRecord,
    LogEntry,
    PrecomputedStats,
    RawGradient,
    SchedulerConfig,
    SchedulerState,
    SignalFrame,
    StatsMode,
    new_state,
)

__all__ = [
    "__version__",
    "CalibratedThresholds",
    "DebaDiagnostics",
    "Decision",
    "DecisionKind",
    "DecisionReason",
    "DynamicsSpec",
    "EpochRecord",
    "LogEntry",
    "ParametricThroughput",
    "Phase",
    "PrecomputedStats",
    "RawGradient",
    "ReplayResult",
    "SchedulerConfig",
    "SchedulerState",
    "SeedAggregate",
    "SignalFrame",
    "StabilityProfile",
    "StatsMode",
    "StepOutcome",
    "TableThroughput",
    "Taxonomy",
    "WindowStats",
    "aggregate_seeds",
    "apply_update",
    "build_signal_frame",
    "calibrate_thresholds",
    "classify",
    "classify_taxonomy",
    "compute_frames",
    "confidence_score",
    "deba_diagnostics",
    "estimate_walltime",
    "generate_trace",
    "gradient_norm",
    "gradient_variance",
    "new_state",
    "relative_variation",
    "replay",
    "stability_score",
    "step",
]
