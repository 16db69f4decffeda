"""Baseline stability profiling: composite stability score, multi-seed
aggregation, taxonomy classification, and automatic threshold calibration.

Profiling consumes fixed-batch runs. The composite score folds the
coefficient of variation of the per-epoch gradient variances together with
the mean gradient-norm and loss variations:

    S = 1 / (1 + CV(variance) + mean(norm variation) + mean(loss variation))

so S is 1 for a perfectly smooth run and decays toward 0 as any of the
three summands grows. Thresholds are calibrated from the same frames: the
stability threshold is the 75th percentile of the observed gradient-norm
variation, the confidence threshold the median of the observed confidence
ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from ._stats import linear_quantile, mean, median, population_std
from .errors import EmptyInput, InsufficientEpochs, InvalidValue
from .types import LogEntry, RULE_EVALUATED_REASONS, DecisionKind, SignalFrame

__all__ = [
    "StabilityProfile",
    "SeedAggregate",
    "CalibratedThresholds",
    "DebaDiagnostics",
    "Taxonomy",
    "stability_score",
    "aggregate_seeds",
    "classify_taxonomy",
    "calibrate_thresholds",
    "deba_diagnostics",
]

# Classification boundaries, from baseline profiling of reference
# architectures: high seed sensitivity dominates; then mean stability
# splits overly stable (> 0.54) from the moderate band [0.45, 0.54] and
# the naturally unstable region (< 0.26). The gap in between is left
# unclassified rather than guessed.
SEED_SENSITIVITY_BOUNDARY = 0.15
OVERLY_STABLE_BOUNDARY = 0.54
MODERATE_LOWER_BOUNDARY = 0.45
UNSTABLE_UPPER_BOUNDARY = 0.26


class Taxonomy(Enum):
    OVERLY_STABLE = "overly_stable"
    MODERATELY_STABLE = "moderately_stable"
    DYNAMICALLY_STABLE = "dynamically_stable"
    NATURALLY_UNSTABLE = "naturally_unstable"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class StabilityProfile:
    """Composite stability summary of one fixed-batch run."""

    cv_grad_variance: float
    mean_grad_norm_variation: float
    mean_loss_variation: float
    n_epochs: int
    stability_score: float = field(init=False)

    def __post_init__(self):
        for name in ("cv_grad_variance", "mean_grad_norm_variation", "mean_loss_variation"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidValue(name, f"must be finite and >= 0, got {value}")
        score = 1.0 / (
            1.0 + self.cv_grad_variance + self.mean_grad_norm_variation + self.mean_loss_variation
        )
        object.__setattr__(self, "stability_score", score)


@dataclass(frozen=True)
class SeedAggregate:
    """Mean and spread of stability scores across seeds, with the class label."""

    mu_s: float
    sigma_s: float
    n_seeds: int
    taxonomy: Taxonomy


@dataclass(frozen=True)
class CalibratedThresholds:
    theta_stab: float
    theta_conf: float

    def __post_init__(self):
        if not math.isfinite(self.theta_stab) or self.theta_stab <= 0:
            raise InvalidValue("theta_stab", f"must be finite and > 0, got {self.theta_stab}")
        if not math.isfinite(self.theta_conf) or self.theta_conf <= 0:
            raise InvalidValue("theta_conf", f"must be finite and > 0, got {self.theta_conf}")


@dataclass(frozen=True)
class DebaDiagnostics:
    """Adaptation-rate and loss-spread metrics of an adaptive run."""

    decision_aggressiveness: float
    convergence_stability: float


def stability_score(frames: Sequence[SignalFrame]) -> StabilityProfile:
    """Fold a run's signal frames into a StabilityProfile.

    CV is population std over mean of the per-epoch gradient variances and
    defined as 0 when the mean is 0 (an all-zero-variance run is perfectly
    stable, not undefined).
    """
    if len(frames) < 2:
        raise InsufficientEpochs(f"stability score needs >= 2 frames, got {len(frames)}")
    variances = [f.grad_variance for f in frames]
    variance_mean = mean(variances)
    cv = 0.0 if variance_mean == 0 else population_std(variances) / variance_mean
    return StabilityProfile(
        cv_grad_variance=cv,
        mean_grad_norm_variation=mean([f.grad_norm_variation for f in frames]),
        mean_loss_variation=mean([f.loss_variation for f in frames]),
        n_epochs=len(frames),
    )


def aggregate_seeds(profiles: Sequence[StabilityProfile]) -> SeedAggregate:
    """Mean and population std of S across seed runs, plus the taxonomy class."""
    if not profiles:
        raise EmptyInput("aggregate_seeds needs at least one profile")
    scores = [p.stability_score for p in profiles]
    mu_s = mean(scores)
    sigma_s = population_std(scores)
    return SeedAggregate(
        mu_s=mu_s,
        sigma_s=sigma_s,
        n_seeds=len(profiles),
        taxonomy=classify_taxonomy(mu_s, sigma_s),
    )


def classify_taxonomy(mu_s: float, sigma_s: float) -> Taxonomy:
    """Assign the stability class for a (mean, seed-spread) pair.

    Seed sensitivity is checked first: a spread above 0.15 is dynamically
    stable regardless of the mean. The band between the naturally unstable
    and moderately stable regions has no observed label and stays
    unclassified.
    """
    if sigma_s > SEED_SENSITIVITY_BOUNDARY:
        return Taxonomy.DYNAMICALLY_STABLE
    if mu_s > OVERLY_STABLE_BOUNDARY:
        return Taxonomy.OVERLY_STABLE
    if mu_s >= MODERATE_LOWER_BOUNDARY:
        return Taxonomy.MODERATELY_STABLE
    if mu_s < UNSTABLE_UPPER_BOUNDARY:
        return Taxonomy.NATURALLY_UNSTABLE
    return Taxonomy.UNCLASSIFIED


def calibrate_thresholds(frames: Sequence[SignalFrame]) -> CalibratedThresholds:
    """Derive thresholds from a fixed-batch run's frames.

    Callers pass the non-warmup frames of the run (epoch 0 carries
    definitional zeros, not measurements). Permutation-invariant: only the
    order statistics of the two signal populations matter.
    """
    if len(frames) < 4:
        raise InsufficientEpochs(f"calibration needs >= 4 frames, got {len(frames)}")
    theta_stab = linear_quantile([f.grad_norm_variation for f in frames], 0.75)
    theta_conf = median([f.confidence for f in frames])
    return CalibratedThresholds(theta_stab=theta_stab, theta_conf=theta_conf)


def deba_diagnostics(log: Sequence[LogEntry], losses: Sequence[float]) -> DebaDiagnostics:
    """Signed adaptation rate plus the loss spread over an adaptive run.

    Aggressiveness is (increases - rollbacks) / rule-evaluated epochs;
    warmup and cooldown holds are not eligible since no decision was made
    there. Negative values mean rollback-dominated behaviour. Defined as 0
    when no epoch was rule-evaluated.
    """
    if not log:
        raise EmptyInput("deba_diagnostics needs a non-empty decision log")
    if not losses:
        raise EmptyInput("deba_diagnostics needs a non-empty loss sequence")
    eligible = [e for e in log if e.decision.reason in RULE_EVALUATED_REASONS]
    increases = sum(1 for e in eligible if e.decision.kind is DecisionKind.INCREASE)
    rollbacks = sum(1 for e in eligible if e.decision.kind is DecisionKind.ROLLBACK)
    aggressiveness = (increases - rollbacks) / len(eligible) if eligible else 0.0
    return DebaDiagnostics(
        decision_aggressiveness=aggressiveness,
        convergence_stability=population_std(losses),
    )
