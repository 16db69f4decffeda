"""Named scheduler presets.

Architecture presets carry thresholds calibrated by baseline profiling of
six reference vision models (fixed-batch runs; stability threshold from
the 75th percentile of gradient-norm variation, confidence threshold from
the median variance ratio). The ``universal`` preset is the deliberately
uncalibrated pair used in the ablations; it degrades models whose gradient
scale does not happen to match it.
"""

from __future__ import annotations

from .sim import ParametricThroughput
from .types import SchedulerConfig, StatsMode

# Cooldown used by the ablation baseline; the shipped default is 5 epochs,
# which is the empirical minimum for batch-norm statistics and momentum to
# re-equilibrate after an adaptation.
ABLATION_BASELINE_COOLDOWN = 10

_ARCHITECTURE_THRESHOLDS: dict[str, tuple[float, float]] = {
    # name: (theta_stab, theta_conf)
    "mobilenet-v3": (0.25, 0.5),
    "efficientnet-b0": (0.60, 0.8),
    "resnet-18": (0.55, 0.6),
    "resnet-50": (12.0, 0.8),
    "densenet-121": (0.55, 0.6),
    "vit-b16": (0.40, 0.7),
    "universal": (0.1, 0.5),
}


def preset_names() -> list[str]:
    return sorted(_ARCHITECTURE_THRESHOLDS)


def scheduler_preset(
    name: str,
    cooldown_epochs: int | None = None,
    stats_mode: StatsMode | None = None,
) -> SchedulerConfig:
    """Config for a named preset, with optional ablation overrides."""
    try:
        theta_stab, theta_conf = _ARCHITECTURE_THRESHOLDS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; valid presets: {', '.join(preset_names())}"
        ) from None
    kwargs: dict = {"theta_stab": theta_stab, "theta_conf": theta_conf}
    if cooldown_epochs is not None:
        kwargs["cooldown_epochs"] = cooldown_epochs
    if stats_mode is not None:
        kwargs["stats_mode"] = stats_mode
    return SchedulerConfig(**kwargs)


# Reference parametric throughput fit: a 100-epoch fixed run at batch 64
# measured 778 s total and the adaptive run 512 s; solving
# t(B) = overhead + amortized/B against those two wall-times over the
# canonical growth schedule (64 -> 2048, one increase per cooldown window)
# gives the constants below. t(64) = 7.78 s/epoch exactly.
REFERENCE_THROUGHPUT = ParametricThroughput(
    overhead_seconds=4.647100843721449,
    amortized_seconds=200.50554600182724,
)

THROUGHPUT_PRESETS = {
    "resnet18-cifar10": REFERENCE_THROUGHPUT,
}
