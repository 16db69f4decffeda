"""Synthetic training-dynamics generator, throughput models, and the
end-to-end replay harness.

The generator follows the common three-phase shape of training runs: an
exploration phase with high gradient variance, a transition phase where
dynamics settle, and a consolidation phase with low variance. Loss and
gradient norm follow jittered exponential decays; variance decays
geometrically inside each phase between the phase's band edges.

Throughput is modeled either parametrically, t(B) = overhead + amortized/B
(fixed per-epoch cost plus a perfectly amortized per-sample cost), or by
linear interpolation over measured (batch, seconds-per-epoch) points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .decision import step
from .errors import InvalidSpec, InvalidValue, IoError, ModelDomainError, ParseError
from .types import EpochRecord, LogEntry, PrecomputedStats, SchedulerConfig, new_state

__all__ = [
    "Phase",
    "DynamicsSpec",
    "ParametricThroughput",
    "TableThroughput",
    "ThroughputModel",
    "ReplayResult",
    "generate_trace",
    "estimate_walltime",
    "read_throughput_table",
    "replay",
]


# --------------------------------------------------------------------------
# synthetic dynamics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Phase:
    """One contiguous stretch of epochs with its gradient-variance band.

    Variance slides geometrically from ``variance_start`` to
    ``variance_end`` across the phase, with multiplicative lognormal jitter.
    """

    length: int
    variance_start: float
    variance_end: float
    variance_jitter: float = 0.15

    def __post_init__(self):
        if self.length < 1:
            raise InvalidSpec(f"phase length must be >= 1, got {self.length}")
        for name in ("variance_start", "variance_end"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidSpec(f"{name} must be finite and > 0, got {value}")
        if not math.isfinite(self.variance_jitter) or self.variance_jitter < 0:
            raise InvalidSpec(f"variance_jitter must be >= 0, got {self.variance_jitter}")


_DEFAULT_PHASES = (
    Phase(length=30, variance_start=1e-5, variance_end=1e-6),
    Phase(length=40, variance_start=1e-6, variance_end=1e-7),
    Phase(length=30, variance_start=1e-7, variance_end=1e-8),
)


@dataclass(frozen=True)
class DynamicsSpec:
    """Deterministic recipe for a synthetic epoch trace."""

    seed: int
    n_epochs: int = 100
    phases: tuple[Phase, ...] = _DEFAULT_PHASES
    loss_start: float = 2.3
    loss_floor: float = 0.35
    loss_tau: float = 35.0
    loss_jitter: float = 0.02
    norm_start: float = 5.0
    norm_floor: float = 0.6
    norm_tau: float = 45.0
    norm_jitter: float = 0.05

    def __post_init__(self):
        if self.n_epochs < 0:
            raise InvalidSpec(f"n_epochs must be >= 0, got {self.n_epochs}")
        if sum(p.length for p in self.phases) != self.n_epochs:
            raise InvalidSpec(
                f"phase lengths sum to {sum(p.length for p in self.phases)}, "
                f"expected n_epochs = {self.n_epochs}"
            )
        for name in ("loss_start", "loss_floor", "norm_start", "norm_floor"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidSpec(f"{name} must be finite and > 0, got {value}")
        for name in ("loss_tau", "norm_tau"):
            if getattr(self, name) <= 0:
                raise InvalidSpec(f"{name} must be > 0")
        for name in ("loss_jitter", "norm_jitter"):
            value = getattr(self, name)
            if not math.isfinite(value) or not 0 <= value < 0.3:
                raise InvalidSpec(f"{name} must be in [0, 0.3), got {value}")


def generate_trace(spec: DynamicsSpec) -> list[EpochRecord]:
    """Deterministic precomputed-stats trace for the given spec and seed."""
    rng = np.random.default_rng(spec.seed)
    records: list[EpochRecord] = []
    epoch = 0
    for phase in spec.phases:
        ratio = phase.variance_end / phase.variance_start
        for i in range(phase.length):
            z_loss, z_norm, z_var = rng.standard_normal(3)
            loss = (
                spec.loss_floor
                + (spec.loss_start - spec.loss_floor) * math.exp(-epoch / spec.loss_tau)
            ) * (1.0 + spec.loss_jitter * z_loss)
            norm = (
                spec.norm_floor
                + (spec.norm_start - spec.norm_floor) * math.exp(-epoch / spec.norm_tau)
            ) * (1.0 + spec.norm_jitter * z_norm)
            variance = (
                phase.variance_start
                * ratio ** (i / phase.length)
                * math.exp(phase.variance_jitter * z_var)
            )
            records.append(
                EpochRecord(
                    epoch=epoch,
                    loss=loss,
                    grad_stats=PrecomputedStats(grad_norm=norm, grad_variance=variance),
                )
            )
            epoch += 1
    return records


# --------------------------------------------------------------------------
# throughput models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ParametricThroughput:
    """t(B) = overhead_seconds + amortized_seconds / B, strictly decreasing in B."""

    overhead_seconds: float
    amortized_seconds: float

    def __post_init__(self):
        if not math.isfinite(self.overhead_seconds) or self.overhead_seconds < 0:
            raise InvalidValue("overhead_seconds", f"must be >= 0, got {self.overhead_seconds}")
        if not math.isfinite(self.amortized_seconds) or self.amortized_seconds <= 0:
            raise InvalidValue("amortized_seconds", f"must be > 0, got {self.amortized_seconds}")

    def seconds_per_epoch(self, batch: int) -> float:
        if batch < 1:
            raise ModelDomainError(f"batch must be >= 1, got {batch}")
        return self.overhead_seconds + self.amortized_seconds / batch


@dataclass(frozen=True)
class TableThroughput:
    """Linear interpolation over measured (batch, seconds-per-epoch) points.

    Queries outside the measured batch range raise ModelDomainError rather
    than extrapolating.
    """

    points: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise InvalidValue("points", f"need >= 2 measurements, got {len(self.points)}")
        batches = [b for b, _ in self.points]
        if sorted(set(batches)) != batches:
            raise InvalidValue("points", "batches must be strictly increasing")
        for b, s in self.points:
            if b < 1:
                raise InvalidValue("points", f"batch must be >= 1, got {b}")
            if not math.isfinite(s) or s <= 0:
                raise InvalidValue("points", f"seconds must be finite and > 0, got {s}")

    def seconds_per_epoch(self, batch: int) -> float:
        lo_batch = self.points[0][0]
        hi_batch = self.points[-1][0]
        if not lo_batch <= batch <= hi_batch:
            raise ModelDomainError(
                f"batch {batch} outside measured range [{lo_batch}, {hi_batch}]"
            )
        for (b0, s0), (b1, s1) in zip(self.points, self.points[1:]):
            if batch <= b1:
                if batch == b0:
                    return s0
                return s0 + (s1 - s0) * (batch - b0) / (b1 - b0)
        return self.points[-1][1]


ThroughputModel = Union[ParametricThroughput, TableThroughput]


def read_throughput_table(path: Union[str, Path]) -> TableThroughput:
    """Parse tab-separated ``batch<TAB>seconds_per_epoch`` measurements."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read throughput table {path}: {exc}") from exc
    points = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split("\t")
        if len(parts) != 2:
            raise ParseError(line_no, 1, f"expected 'batch<TAB>seconds', got {line!r}")
        try:
            points.append((int(parts[0]), float(parts[1])))
        except ValueError:
            raise ParseError(line_no, 1, f"bad measurement {line!r}") from None
    return TableThroughput(points=tuple(sorted(points)))


def estimate_walltime(
    schedule: Sequence[tuple[int, int]], model: ThroughputModel
) -> float:
    """Total seconds for a per-epoch batch schedule: sum of t(B_t).

    The schedule must cover epochs 0..n-1 contiguously.
    """
    for i, (epoch, _) in enumerate(schedule):
        if epoch != i:
            raise InvalidValue("schedule", f"expected epoch {i}, got {epoch}")
    return math.fsum(model.seconds_per_epoch(batch) for _, batch in schedule)


# --------------------------------------------------------------------------
# replay harness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayResult:
    """Decision log, effective batch schedule, and optional speedup estimate.

    ``schedule[t]`` is the batch in effect while epoch t ran (decisions
    take effect the following epoch). Speedup is relative wall-time saved
    versus holding the initial batch for the whole run:
    (fixed - adaptive) / fixed.
    """

    log: list[LogEntry] = field(repr=False)
    schedule: list[tuple[int, int]]
    adaptive_seconds: Optional[float] = None
    fixed_seconds: Optional[float] = None
    speedup: Optional[float] = None


def replay(
    trace: Sequence[EpochRecord],
    config: SchedulerConfig,
    model: Optional[ThroughputModel] = None,
    initial_batch: int = 64,
) -> ReplayResult:
    """Drive the scheduler over a full trace; pure in all its arguments."""
    state = new_state(config, initial_batch)
    schedule: list[tuple[int, int]] = []
    for record in trace:
        outcome = step(state, record, config)
        schedule.append((record.epoch, outcome.batch_before))
    if model is None:
        return ReplayResult(log=list(state.decision_log), schedule=schedule)
    adaptive = estimate_walltime(schedule, model)
    fixed = estimate_walltime([(e, initial_batch) for e, _ in schedule], model)
    speedup = 0.0 if fixed == 0 else (fixed - adaptive) / fixed
    return ReplayResult(
        log=list(state.decision_log),
        schedule=schedule,
        adaptive_seconds=adaptive,
        fixed_seconds=fixed,
        speedup=speedup,
    )
