"""Per-epoch signal computation: gradient variance, gradient norm, relative
variations, windowed confidence, and the stability flags derived from them.

Vector statistics run in double precision with a two-pass scheme (mean,
then squared deviations) so results are reproducible and oracle-checkable.
Relative variations compare an epoch against its predecessor and are 0 at
epoch 0, which has none.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DegenerateGradient, EpochMismatch, NonFiniteInput
from .types import (
    EpochRecord,
    PrecomputedStats,
    RawGradient,
    SchedulerConfig,
    SchedulerState,
    SignalFrame,
    new_state,
)
from .windows import WindowStats

__all__ = [
    "WindowStats",
    "gradient_variance",
    "gradient_norm",
    "relative_variation",
    "confidence_score",
    "build_signal_frame",
    "compute_frames",
]


def _as_gradient_array(grad) -> np.ndarray:
    if isinstance(grad, RawGradient):
        return grad.values
    arr = np.asarray(grad, dtype=np.float64).ravel()
    if arr.size < 2:
        raise DegenerateGradient(f"gradient needs >= 2 components, got {arr.size}")
    if not np.isfinite(arr).all():
        raise DegenerateGradient("gradient contains non-finite components")
    return arr


def gradient_variance(grad) -> float:
    """Population variance of the gradient's components.

    Two-pass: subtract the mean, then average the squared deviations.
    O(P) time for P components.
    """
    arr = _as_gradient_array(grad)
    centered = arr - arr.mean()
    return float(centered.dot(centered) / arr.size)


def gradient_norm(grad) -> float:
    """Euclidean norm of the gradient vector."""
    arr = _as_gradient_array(grad)
    return float(math.sqrt(arr.dot(arr)))


def relative_variation(current: float, previous: float, epsilon: float) -> float:
    """|current - previous| / (|previous| + epsilon).

    The epsilon guard keeps the ratio finite when the previous value is 0.
    """
    if not (math.isfinite(current) and math.isfinite(previous)):
        raise NonFiniteInput(f"relative variation of ({current}, {previous})")
    return abs(current - previous) / (abs(previous) + epsilon)


def confidence_score(current_variance: float, variance_window: WindowStats, epsilon: float) -> float:
    """Current gradient variance over the windowed median (plus epsilon).

    The window is expected to already contain the current value; values
    near 1 mean the variance is typical of recent history, values well
    above 1 mean gradients are noisier than usual.
    """
    return current_variance / (variance_window.median() + epsilon)


def build_signal_frame(
    record: EpochRecord, state: SchedulerState, config: SchedulerConfig
) -> SignalFrame:
    """Derive the signal frame for one epoch and push it into the windows.

    Mutates only the state's windows (the single mutation point of this
    module); batch size, epoch counter, and previous-epoch anchors are
    untouched. The variance window is pushed before the median is taken, so
    the confidence denominator includes the current epoch.
    """
    if record.epoch != state.epoch:
        raise EpochMismatch(f"record epoch {record.epoch} != state epoch {state.epoch}")

    if isinstance(record.grad_stats, PrecomputedStats):
        variance = record.grad_stats.grad_variance
        norm = record.grad_stats.grad_norm
    else:
        variance = gradient_variance(record.grad_stats)
        norm = gradient_norm(record.grad_stats)

    if state.prev_grad_norm is None:
        norm_variation = 0.0
    else:
        norm_variation = relative_variation(norm, state.prev_grad_norm, config.epsilon)
    if state.prev_loss is None:
        loss_variation = 0.0
    else:
        loss_variation = relative_variation(record.loss, state.prev_loss, config.epsilon)

    state.variance_window.push(variance)
    state.norm_var_window.push(norm_variation)
    state.loss_var_window.push(loss_variation)

    confidence = confidence_score(variance, state.variance_window, config.epsilon)

    return SignalFrame(
        epoch=record.epoch,
        grad_variance=variance,
        grad_norm=norm,
        grad_norm_variation=norm_variation,
        loss_variation=loss_variation,
        confidence=confidence,
        stable_gradients=norm_variation < config.theta_stab,
        stable_loss=loss_variation < config.theta_stab,
    )


def compute_frames(records: Sequence[EpochRecord], config: SchedulerConfig) -> list[SignalFrame]:
    """Signal frames for a whole trace, without any batch adaptation.

    This is the profiling path: it streams the records through the same
    frame builder the scheduler uses, so profiling and scheduling always
    see identical signal values.
    """
    state = new_state(config, config.b_min)
    frames = []
    for record in records:
        frame = build_signal_frame(record, state, config)
        state.prev_loss = record.loss
        state.prev_grad_norm = frame.grad_norm
        state.epoch += 1
        frames.append(frame)
    return frames
