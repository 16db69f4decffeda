"""Batch-size decision rule, multiplicative update, and cooldown gating.

The rule reads one signal frame:

* increase  — confidence at or below the threshold AND both stability
  flags set; the batch can grow without losing useful gradient noise.
* rollback  — confidence above the threshold OR a gradient-norm spike
  beyond three times the stability threshold; shrink the batch to restore
  beneficial noise.
* hold      — anything in between.

The two rule branches are mutually exclusive by construction: increase
needs a norm variation under the stability threshold, a spike needs three
times it, and the confidence comparisons are complementary.

After any increase or rollback at epoch ``t_last`` the scheduler holds
until ``t > t_last + cooldown_epochs``; signal frames are still computed
and logged during the cooldown. A clamped no-op adaptation (already at a
batch bound) still counts as an adaptation and restarts the cooldown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidValue
from .signals import build_signal_frame
from .types import (
    Decision,
    DecisionKind,
    DecisionReason,
    EpochRecord,
    LogEntry,
    SchedulerConfig,
    SchedulerState,
    SignalFrame,
)

__all__ = ["StepOutcome", "classify", "apply_update", "step"]


@dataclass(frozen=True)
class StepOutcome:
    """Result of advancing the scheduler by one epoch."""

    frame: SignalFrame
    decision: Decision
    batch_before: int
    batch_after: int

    def __post_init__(self):
        if not self.decision.changes_batch and self.batch_after != self.batch_before:
            raise InvalidValue("batch_after", "hold must not change the batch size")


def classify(frame: SignalFrame, config: SchedulerConfig) -> Decision:
    """Map a signal frame to increase/rollback/hold (no cooldown here).

    Total over finite frames; when both rollback disjuncts fire, the
    confidence reason wins.
    """
    if (
        frame.confidence <= config.theta_conf
        and frame.stable_gradients
        and frame.stable_loss
    ):
        return Decision(DecisionKind.INCREASE, DecisionReason.RULE_INCREASE)
    if frame.confidence > config.theta_conf:
        return Decision(DecisionKind.ROLLBACK, DecisionReason.RULE_ROLLBACK_CONFIDENCE)
    if frame.grad_norm_variation > 3.0 * config.theta_stab:
        return Decision(DecisionKind.ROLLBACK, DecisionReason.RULE_ROLLBACK_GRAD_SPIKE)
    return Decision(DecisionKind.HOLD, DecisionReason.RULE_HOLD)


def apply_update(batch: int, decision: Decision, config: SchedulerConfig) -> int:
    """Next batch size: grow by alpha_grow, shrink by alpha_roll, clamp to bounds.

    Both factors floor the product, so a rollback at b_min and an increase
    at b_max are no-ops (the decision is still recorded and still restarts
    the cooldown).
    """
    if decision.kind is DecisionKind.INCREASE:
        return min(config.b_max, math.floor(config.alpha_grow * batch))
    if decision.kind is DecisionKind.ROLLBACK:
        return max(config.b_min, math.floor(config.alpha_roll * batch))
    return batch


def step(state: SchedulerState, record: EpochRecord, config: SchedulerConfig) -> StepOutcome:
    """Advance the scheduler one epoch: signals, decision, batch update, log.

    Epoch 0 always holds (warmup: no predecessor signals exist). During a
    cooldown the frame is still computed and logged but the decision is
    forced to hold. Otherwise the rule decides and the update applies.
    Raises EpochMismatch before any mutation if the record is out of order.
    """
    frame = build_signal_frame(record, state, config)

    if state.epoch == 0:
        decision = Decision(DecisionKind.HOLD, DecisionReason.WARMUP_HOLD)
    elif (
        state.last_adaptation_epoch is not None
        and state.epoch <= state.last_adaptation_epoch + config.cooldown_epochs
    ):
        decision = Decision(DecisionKind.HOLD, DecisionReason.COOLDOWN_HOLD)
    else:
        decision = classify(frame, config)

    batch_before = state.current_batch
    batch_after = apply_update(batch_before, decision, config)

    if decision.changes_batch:
        state.last_adaptation_epoch = state.epoch
    state.current_batch = batch_after
    outcome = StepOutcome(
        frame=frame, decision=decision, batch_before=batch_before, batch_after=batch_after
    )
    state.decision_log.append(
        LogEntry(
            epoch=record.epoch,
            frame=frame,
            decision=decision,
            batch_before=batch_before,
            batch_after=batch_after,
        )
    )
    state.prev_loss = record.loss
    state.prev_grad_norm = frame.grad_norm
    state.epoch += 1
    return outcome
