#!/usr/bin/env python3
"""Regenerate the frozen golden files under tests/golden/.

Run manually, inspect the diff, and commit; the test suite never calls
this. The golden trace is handcrafted (precomputed stats, no RNG) so that
the reference config produces every decision reason at least once:

* variance decays geometrically (confidence < threshold -> increases),
  with an early partial-window rollback at epoch 1
* a gradient-norm spike at epoch 31 (spike rollback)
* a norm-wiggle stretch around epochs 49-60 (rule holds)
* a variance plateau from epoch 80 (confidence rollbacks)
"""

from __future__ import annotations

import io
import sys
from contextlib import redirect_stdout
from pathlib import Path

from deba.cli import main as cli_main
from deba.presets import scheduler_preset
from deba.sim import replay
from deba.trace_io import write_config, write_decision_log, write_trace
from deba.types import EpochRecord, PrecomputedStats

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def golden_records() -> list[EpochRecord]:
    records = []
    # the variance track must stay far above the epsilon guard (1e-8) so the
    # confidence ratio is governed by the windowed median, not the guard
    variance = 1.0
    for epoch in range(100):
        if epoch > 0:
            if epoch <= 44:
                variance *= 0.8
            elif epoch <= 79:
                variance *= 0.9
            # plateau: constant from epoch 80 on (confidence climbs toward 1)

        if epoch <= 30:
            norm = 4.0
        elif epoch <= 48:
            norm = 8.0  # step up at 31: relative jump 1.0 (spike)
        elif epoch <= 59:
            norm = 10.8 if epoch % 2 == 1 else 8.0  # wiggle: variation ~0.26-0.35
        else:
            norm = 8.0

        loss = 2.3 - 0.01 * epoch
        records.append(
            EpochRecord(
                epoch=epoch,
                loss=loss,
                grad_stats=PrecomputedStats(grad_norm=norm, grad_variance=variance),
            )
        )
    return records


def main() -> int:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    records = golden_records()
    write_trace(records, GOLDEN / "golden.trace", producer="handcrafted golden dynamics")

    config = scheduler_preset("mobilenet-v3")
    write_config(config, GOLDEN / "mobilenet_v3.config")

    result = replay(records, config, initial_batch=64)
    write_decision_log(result.log, GOLDEN / "golden.decision_log")

    reasons = {}
    for entry in result.log:
        reasons[entry.decision.reason.value] = reasons.get(entry.decision.reason.value, 0) + 1
    print("decision reasons:", dict(sorted(reasons.items())))
    print("final batch:", result.log[-1].batch_after)
    changes = [(e.epoch, e.decision.kind.value, e.batch_after) for e in result.log if e.decision.changes_batch]
    print("adaptations:", changes)

    # frozen stdout of the simulate subcommand (deterministic given the seed)
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = cli_main(
            [
                "simulate",
                "--seed", "42",
                "--preset", "efficientnet-b0",
                "--out", str(GOLDEN / "simulate_seed42.decision_log"),
                "--throughput-model", "resnet18-cifar10",
            ]
        )
    assert code == 0, code
    (GOLDEN / "simulate_seed42.summary").write_text(buffer.getvalue(), newline="\n")
    print("simulate summary:")
    print(buffer.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
