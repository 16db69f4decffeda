"""Core domain types: epoch observables, derived signals, configuration,
decisions, and the scheduler state they drive.

All types are immutable value objects except :class:`SchedulerState`, which
is single-writer mutable and carries the windows, the previous-epoch
anchors, and the append-only decision log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .errors import (
    DegenerateGradient,
    InitialBatchOutOfBounds,
    InvalidValue,
    NonFiniteValue,
)
from .windows import WindowStats


# --------------------------------------------------------------------------
# raw observables
# --------------------------------------------------------------------------

class RawGradient:
    """Flattened gradient vector (dense, finite, at least two components)."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64).ravel()
        if arr.size < 2:
            raise DegenerateGradient(f"gradient needs >= 2 components, got {arr.size}")
        if not np.isfinite(arr).all():
            raise DegenerateGradient("gradient contains non-finite components")
        self.values = arr

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RawGradient):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"RawGradient(n={self.values.size})"


@dataclass(frozen=True)
class PrecomputedStats:
    """Per-epoch gradient summary supplied by the producer."""

    grad_norm: float
    grad_variance: float

    def __post_init__(self):
        # normalize numpy scalars and ints to plain floats: serialization
        # and comparisons downstream rely on native Python types
        object.__setattr__(self, "grad_norm", float(self.grad_norm))
        object.__setattr__(self, "grad_variance", float(self.grad_variance))
        if not math.isfinite(self.grad_norm):
            raise NonFiniteValue("grad_norm is not finite")
        if not math.isfinite(self.grad_variance):
            raise NonFiniteValue("grad_variance is not finite")
        if self.grad_norm < 0:
            raise InvalidValue("grad_norm", f"must be >= 0, got {self.grad_norm}")
        if self.grad_variance < 0:
            raise InvalidValue("grad_variance", f"must be >= 0, got {self.grad_variance}")


GradStats = Union[RawGradient, PrecomputedStats]


@dataclass(frozen=True)
class EpochRecord:
    """One epoch's raw observables: training loss plus a gradient summary."""

    epoch: int
    loss: float
    grad_stats: GradStats

    def __post_init__(self):
        object.__setattr__(self, "epoch", int(self.epoch))
        object.__setattr__(self, "loss", float(self.loss))
        if self.epoch < 0:
            raise InvalidValue("epoch", f"must be >= 0, got {self.epoch}")
        if not math.isfinite(self.loss):
            raise NonFiniteValue(f"loss at epoch {self.epoch} is not finite")
        if not isinstance(self.grad_stats, (RawGradient, PrecomputedStats)):
            raise InvalidValue("grad_stats", "must be RawGradient or PrecomputedStats")


# --------------------------------------------------------------------------
# derived signals
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SignalFrame:
    """Derived per-epoch signals.

    ``grad_norm_variation`` and ``loss_variation`` are dimensionless
    relative-change ratios against the previous epoch and are defined as 0
    at epoch 0, which has no predecessor. ``confidence`` is the current
    gradient variance normalized by the windowed median.
    """

    epoch: int
    grad_variance: float
    grad_norm: float
    grad_norm_variation: float
    loss_variation: float
    confidence: float
    stable_gradients: bool
    stable_loss: bool

    def __post_init__(self):
        object.__setattr__(self, "epoch", int(self.epoch))
        for name in ("grad_variance", "grad_norm", "grad_norm_variation",
                     "loss_variation", "confidence"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("stable_gradients", "stable_loss"):
            object.__setattr__(self, name, bool(getattr(self, name)))
        if self.grad_norm_variation < 0:
            raise InvalidValue("grad_norm_variation", "must be >= 0")
        if self.loss_variation < 0:
            raise InvalidValue("loss_variation", "must be >= 0")
        if self.confidence < 0:
            raise InvalidValue("confidence", "must be >= 0")

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "grad_variance": self.grad_variance,
            "grad_norm": self.grad_norm,
            "grad_norm_variation": self.grad_norm_variation,
            "loss_variation": self.loss_variation,
            "confidence": self.confidence,
            "stable_gradients": self.stable_gradients,
            "stable_loss": self.stable_loss,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SignalFrame":
        return cls(**data)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

class StatsMode(Enum):
    SLIDING_WINDOW = "sliding_window"
    FULL_HISTORY = "full_history"


@dataclass(frozen=True)
class SchedulerConfig:
    """Thresholds, update factors, bounds, cooldown, and window settings.

    ``theta_stab`` and ``theta_conf`` have no defaults on purpose: they are
    architecture-specific and come from baseline profiling (see the presets
    module for calibrated reference values).
    """

    theta_stab: float
    theta_conf: float
    alpha_grow: float = 1.5
    alpha_roll: float = 0.8
    b_min: int = 16
    b_max: int = 2048
    cooldown_epochs: int = 5
    window_len: int = 15
    stats_mode: StatsMode = StatsMode.SLIDING_WINDOW
    epsilon: float = 1e-8

    def __post_init__(self):
        for name in ("theta_stab", "theta_conf", "alpha_grow", "alpha_roll", "epsilon"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise InvalidValue(name, f"must be a finite real, got {value!r}")
        for name in ("b_min", "b_max", "cooldown_epochs", "window_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise InvalidValue(name, f"must be an integer, got {value!r}")
        if self.theta_stab <= 0:
            raise InvalidValue("theta_stab", f"must be > 0, got {self.theta_stab}")
        if self.theta_conf <= 0:
            raise InvalidValue("theta_conf", f"must be > 0, got {self.theta_conf}")
        if self.alpha_grow <= 1:
            raise InvalidValue("alpha_grow", f"must be > 1, got {self.alpha_grow}")
        if not 0 < self.alpha_roll < 1:
            raise InvalidValue("alpha_roll", f"must be in (0, 1), got {self.alpha_roll}")
        if self.b_min < 1:
            raise InvalidValue("b_min", f"must be >= 1, got {self.b_min}")
        if self.b_max < 1:
            raise InvalidValue("b_max", f"must be >= 1, got {self.b_max}")
        if self.b_min > self.b_max:
            raise InvalidValue("b_min", f"must be <= b_max, got {self.b_min} > {self.b_max}")
        if self.cooldown_epochs < 0:
            raise InvalidValue("cooldown_epochs", f"must be >= 0, got {self.cooldown_epochs}")
        if self.window_len < 2:
            raise InvalidValue("window_len", f"must be >= 2, got {self.window_len}")
        if self.epsilon <= 0:
            raise InvalidValue("epsilon", f"must be > 0, got {self.epsilon}")
        if not isinstance(self.stats_mode, StatsMode):
            raise InvalidValue("stats_mode", f"must be a StatsMode, got {self.stats_mode!r}")

    def window_capacity(self) -> Optional[int]:
        """Window bound implied by the statistics mode (None = unbounded)."""
        if self.stats_mode is StatsMode.SLIDING_WINDOW:
            return self.window_len
        return None


# --------------------------------------------------------------------------
# decisions
# --------------------------------------------------------------------------

class DecisionKind(Enum):
    INCREASE = "increase"
    ROLLBACK = "rollback"
    HOLD = "hold"


class DecisionReason(Enum):
    RULE_INCREASE = "rule_increase"
    RULE_ROLLBACK_CONFIDENCE = "rule_rollback_confidence"
    RULE_ROLLBACK_GRAD_SPIKE = "rule_rollback_grad_spike"
    RULE_HOLD = "rule_hold"
    COOLDOWN_HOLD = "cooldown_hold"
    WARMUP_HOLD = "warmup_hold"


_REASONS_BY_KIND = {
    DecisionKind.INCREASE: {DecisionReason.RULE_INCREASE},
    DecisionKind.ROLLBACK: {
        DecisionReason.RULE_ROLLBACK_CONFIDENCE,
        DecisionReason.RULE_ROLLBACK_GRAD_SPIKE,
    },
    DecisionKind.HOLD: {
        DecisionReason.RULE_HOLD,
        DecisionReason.COOLDOWN_HOLD,
        DecisionReason.WARMUP_HOLD,
    },
}

# Reasons that mark an epoch where the decision rule was actually evaluated
# (holds forced by warmup or cooldown are excluded from aggressiveness).
RULE_EVALUATED_REASONS = frozenset(
    {
        DecisionReason.RULE_INCREASE,
        DecisionReason.RULE_ROLLBACK_CONFIDENCE,
        DecisionReason.RULE_ROLLBACK_GRAD_SPIKE,
        DecisionReason.RULE_HOLD,
    }
)


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    reason: DecisionReason

    def __post_init__(self):
        if self.reason not in _REASONS_BY_KIND[self.kind]:
            raise InvalidValue(
                "reason", f"{self.reason.value} is not a valid reason for {self.kind.value}"
            )

    @property
    def changes_batch(self) -> bool:
        return self.kind is not DecisionKind.HOLD


# --------------------------------------------------------------------------
# scheduler state
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LogEntry:
    """One row of the append-only decision log."""

    epoch: int
    frame: SignalFrame
    decision: Decision
    batch_before: int
    batch_after: int

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "frame": self.frame.to_dict(),
            "decision": self.decision.kind.value,
            "reason": self.decision.reason.value,
            "batch_before": self.batch_before,
            "batch_after": self.batch_after,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LogEntry":
        return cls(
            epoch=data["epoch"],
            frame=SignalFrame.from_dict(data["frame"]),
            decision=Decision(DecisionKind(data["decision"]), DecisionReason(data["reason"])),
            batch_before=data["batch_before"],
            batch_after=data["batch_after"],
        )


@dataclass(eq=True)
class SchedulerState:
    """Mutable scheduler state advanced one epoch at a time.

    Single-writer: only ``decision.step`` (and the signal-frame builder it
    calls) may mutate an instance. Windows are bounded by the configured
    capacity in sliding-window mode and unbounded in full-history mode.
    """

    current_batch: int
    epoch: int = 0
    last_adaptation_epoch: Optional[int] = None
    variance_window: WindowStats = field(default_factory=WindowStats)
    norm_var_window: WindowStats = field(default_factory=WindowStats)
    loss_var_window: WindowStats = field(default_factory=WindowStats)
    prev_loss: Optional[float] = None
    prev_grad_norm: Optional[float] = None
    decision_log: list[LogEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "current_batch": self.current_batch,
            "epoch": self.epoch,
            "last_adaptation_epoch": self.last_adaptation_epoch,
            "variance_window": self.variance_window.to_dict(),
            "norm_var_window": self.norm_var_window.to_dict(),
            "loss_var_window": self.loss_var_window.to_dict(),
            "prev_loss": self.prev_loss,
            "prev_grad_norm": self.prev_grad_norm,
            "decision_log": [entry.to_dict() for entry in self.decision_log],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SchedulerState":
        return cls(
            current_batch=data["current_batch"],
            epoch=data["epoch"],
            last_adaptation_epoch=data["last_adaptation_epoch"],
            variance_window=WindowStats.from_dict(data["variance_window"]),
            norm_var_window=WindowStats.from_dict(data["norm_var_window"]),
            loss_var_window=WindowStats.from_dict(data["loss_var_window"]),
            prev_loss=data["prev_loss"],
            prev_grad_norm=data["prev_grad_norm"],
            decision_log=[LogEntry.from_dict(e) for e in data["decision_log"]],
        )


def new_state(config: SchedulerConfig, initial_batch: int) -> SchedulerState:
    """Fresh state at epoch 0 with empty windows and an empty decision log.

    Raises:
        InitialBatchOutOfBounds: if ``initial_batch`` is outside
            ``[config.b_min, config.b_max]``.
    """
    if not isinstance(initial_batch, int) or isinstance(initial_batch, bool):
        raise InitialBatchOutOfBounds(f"initial batch must be an integer, got {initial_batch!r}")
    if not config.b_min <= initial_batch <= config.b_max:
        raise InitialBatchOutOfBounds(
            f"initial batch {initial_batch} outside [{config.b_min}, {config.b_max}]"
        )
    capacity = config.window_capacity()
    return SchedulerState(
        current_batch=initial_batch,
        variance_window=WindowStats(capacity),
        norm_var_window=WindowStats(capacity),
        loss_var_window=WindowStats(capacity),
    )
