"""Shared builders for synthetic traces and scheduler fixtures."""

from __future__ import annotations

from pathlib import Path

import pytest

from deba import EpochRecord, PrecomputedStats, SchedulerConfig

GOLDEN_DIR = Path(__file__).parent / "golden"


def make_trace(losses, norms, variances) -> list[EpochRecord]:
    assert len(losses) == len(norms) == len(variances)
    return [
        EpochRecord(
            epoch=i,
            loss=losses[i],
            grad_stats=PrecomputedStats(grad_norm=norms[i], grad_variance=variances[i]),
        )
        for i in range(len(losses))
    ]


def all_stable_trace(n_epochs: int = 100) -> list[EpochRecord]:
    """Constant loss/norm/variance: every rule-evaluated epoch is an increase
    under a confidence threshold of 1.0 (c = v / (v + eps) < 1)."""
    return make_trace([1.0] * n_epochs, [4.0] * n_epochs, [1e-5] * n_epochs)


@pytest.fixture
def all_stable_config() -> SchedulerConfig:
    return SchedulerConfig(theta_stab=0.25, theta_conf=1.0)


@pytest.fixture
def mobilenet_config() -> SchedulerConfig:
    # thresholds from baseline profiling of the lightweight reference model
    return SchedulerConfig(theta_stab=0.25, theta_conf=0.5)
