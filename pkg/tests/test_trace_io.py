"""File format contracts: traces, decision logs, configs, checkpoints."""

from __future__ import annotations

import numpy as np
import pytest

from deba import (
    EpochRecord,
    PrecomputedStats,
    RawGradient,
    SchedulerConfig,
    SchedulerState,
    StatsMode,
    new_state,
    replay,
    step,
)
from deba.errors import (
    InvalidValue,
    IoError,
    NonContiguousEpochs,
    NonFiniteValue,
    ParseError,
    UnknownKey,
    UnknownVersion,
)
from deba.trace_io import (
    load_state,
    read_config,
    read_decision_log,
    read_trace,
    save_state,
    write_config,
    write_decision_log,
    write_trace,
)

from conftest import all_stable_trace, make_trace


MINIMAL_TRACE = """deba-trace v1
producer: unit test
stats: precomputed
epoch\tloss\tgrad_norm\tgrad_variance
0\t2.3\t4.0\t1e-05
1\t2.2\t3.9\t9e-06
2\t2.1\t3.8\t8e-06
"""


# --------------------------------------------------------------------------
# trace files
# --------------------------------------------------------------------------

def test_minimal_trace_parses(tmp_path):
    path = tmp_path / "t.trace"
    path.write_text(MINIMAL_TRACE)
    records = read_trace(path)
    assert len(records) == 3
    assert records[0].loss == 2.3
    assert records[2].grad_stats.grad_variance == 8e-06


def test_trace_epoch_gap_is_rejected(tmp_path):
    path = tmp_path / "t.trace"
    path.write_text(
        "deba-trace v1\nproducer: x\nstats: precomputed\n"
        "epoch\tloss\tgrad_norm\tgrad_variance\n"
        "0\t1.0\t1.0\t1e-06\n2\t1.0\t1.0\t1e-06\n"
    )
    with pytest.raises(NonContiguousEpochs):
        read_trace(path)


def test_trace_nan_loss_names_the_epoch(tmp_path):
    path = tmp_path / "t.trace"
    path.write_text(
        "deba-trace v1\nproducer: x\nstats: precomputed\n"
        "epoch\tloss\tgrad_norm\tgrad_variance\n"
        "0\t1.0\t1.0\t1e-06\n1\tnan\t1.0\t1e-06\n"
    )
    with pytest.raises(NonFiniteValue, match="epoch 1"):
        read_trace(path)


def test_trace_unknown_version(tmp_path):
    path = tmp_path / "t.trace"
    path.write_text(MINIMAL_TRACE.replace("deba-trace v1", "deba-trace v9"))
    with pytest.raises(UnknownVersion):
        read_trace(path)


def test_trace_bad_field_reports_line_and_column(tmp_path):
    path = tmp_path / "t.trace"
    path.write_text(
        "deba-trace v1\nproducer: x\nstats: precomputed\n"
        "epoch\tloss\tgrad_norm\tgrad_variance\n"
        "0\t1.0\toops\t1e-06\n"
    )
    with pytest.raises(ParseError) as exc_info:
        read_trace(path)
    assert exc_info.value.line == 5
    assert exc_info.value.column == 7  # field starts after "0\t1.0\t"


def test_trace_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        read_trace(tmp_path / "absent.trace")


def test_trace_unknown_header_key(tmp_path):
    path = tmp_path / "t.trace"
    path.write_text(
        "deba-trace v1\nflavour: spicy\nstats: precomputed\n"
        "epoch\tloss\tgrad_norm\tgrad_variance\n0\t1.0\t1.0\t1e-06\n"
    )
    with pytest.raises(ParseError, match="flavour"):
        read_trace(path)


def test_precomputed_trace_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    n = 30
    records = make_trace(
        rng.uniform(0.1, 3.0, size=n).tolist(),
        rng.uniform(0.1, 9.0, size=n).tolist(),
        rng.uniform(1e-8, 1e-3, size=n).tolist(),
    )
    path = tmp_path / "t.trace"
    write_trace(records, path, producer="round trip")
    back = read_trace(path)
    assert back == records
    # writing again reproduces the bytes exactly
    path2 = tmp_path / "t2.trace"
    write_trace(back, path2, producer="round trip")
    assert path.read_bytes() == path2.read_bytes()


def test_raw_inline_trace_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    records = [
        EpochRecord(epoch=t, loss=float(rng.uniform(0.5, 2)), grad_stats=RawGradient(rng.normal(size=8)))
        for t in range(5)
    ]
    path = tmp_path / "raw.trace"
    write_trace(records, path, producer="inline")
    back = read_trace(path)
    assert back == records


def test_raw_sidecar_trace_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    records = [
        EpochRecord(epoch=t, loss=1.0 + t, grad_stats=RawGradient(rng.normal(size=100)))
        for t in range(4)
    ]
    path = tmp_path / "raw.trace"
    write_trace(records, path, producer="sidecar", sidecar="raw.grad")
    assert (tmp_path / "raw.grad").exists()
    back = read_trace(path)
    assert back == records


def test_raw_sidecar_count_mismatch(tmp_path):
    records = [
        EpochRecord(epoch=t, loss=1.0, grad_stats=RawGradient([1.0, 2.0])) for t in range(3)
    ]
    write_trace(records, tmp_path / "raw.trace", sidecar="raw.grad")
    # drop a row from the text trace: sidecar now has an extra vector
    lines = (tmp_path / "raw.trace").read_text().splitlines()
    (tmp_path / "short.trace").write_text("\n".join(lines[:-1]) + "\n")
    (tmp_path / "raw.grad").rename(tmp_path / "raw.grad.keep")
    (tmp_path / "raw.grad.keep").rename(tmp_path / "raw.grad")
    with pytest.raises(ParseError, match="sidecar"):
        read_trace(tmp_path / "short.trace")


def test_mixed_record_kinds_rejected(tmp_path):
    records = [
        EpochRecord(epoch=0, loss=1.0, grad_stats=PrecomputedStats(1.0, 1e-6)),
        EpochRecord(epoch=1, loss=1.0, grad_stats=RawGradient([1.0, 2.0])),
    ]
    with pytest.raises(InvalidValue):
        write_trace(records, tmp_path / "bad.trace")


# --------------------------------------------------------------------------
# decision logs
# --------------------------------------------------------------------------

def test_empty_log_writes_header_only(tmp_path):
    path = tmp_path / "log"
    write_decision_log([], path)
    text = path.read_text()
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0] == "deba-decision-log v1"
    assert lines[1].startswith("epoch\t")
    assert text.endswith("\n")
    assert read_decision_log(path) == []


def test_replay_log_has_one_row_per_epoch(tmp_path, all_stable_config):
    trace = all_stable_trace(100)
    result = replay(trace, all_stable_config, initial_batch=64)
    path = tmp_path / "log"
    write_decision_log(result.log, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 102  # version + columns + 100 rows


def test_decision_log_round_trip(tmp_path, all_stable_config):
    trace = all_stable_trace(50)
    result = replay(trace, all_stable_config, initial_batch=64)
    path = tmp_path / "log"
    write_decision_log(result.log, path)
    back = read_decision_log(path)
    assert back == result.log
    # and writing the parsed log reproduces the bytes
    path2 = tmp_path / "log2"
    write_decision_log(back, path2)
    assert path.read_bytes() == path2.read_bytes()


# --------------------------------------------------------------------------
# configs
# --------------------------------------------------------------------------

def test_config_round_trip(tmp_path):
    config = SchedulerConfig(theta_stab=0.25, theta_conf=0.5)
    path = tmp_path / "c.config"
    write_config(config, path)
    assert read_config(path) == config


def test_config_accepts_deep_net_thresholds(tmp_path):
    path = tmp_path / "c.config"
    path.write_text("deba-config v1\ntheta_stab = 12.0\ntheta_conf = 0.8\n")
    config = read_config(path)
    assert config.theta_stab == 12.0
    assert config.theta_conf == 0.8
    assert config.cooldown_epochs == 5  # defaults fill the gaps


def test_config_rejects_invalid_rollback_factor(tmp_path):
    path = tmp_path / "c.config"
    path.write_text(
        "deba-config v1\ntheta_stab = 0.25\ntheta_conf = 0.5\nalpha_roll = 1.2\n"
    )
    with pytest.raises(InvalidValue) as exc_info:
        read_config(path)
    assert exc_info.value.field == "alpha_roll"


def test_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "c.config"
    path.write_text("deba-config v1\ntheta_stab = 0.25\ntheta_conf = 0.5\nmomentum = 0.9\n")
    with pytest.raises(UnknownKey):
        read_config(path)


def test_config_missing_required_threshold(tmp_path):
    path = tmp_path / "c.config"
    path.write_text("deba-config v1\ntheta_stab = 0.25\n")
    with pytest.raises(InvalidValue) as exc_info:
        read_config(path)
    assert exc_info.value.field == "theta_conf"


def test_config_tolerates_comments_and_blank_lines(tmp_path):
    path = tmp_path / "c.config"
    path.write_text(
        "deba-config v1\n\n# calibrated on the small residual net\n"
        "theta_stab = 0.55\ntheta_conf = 0.6\n\nstats_mode = full_history\n"
    )
    config = read_config(path)
    assert config.stats_mode is StatsMode.FULL_HISTORY


def test_config_duplicate_key_is_parse_error(tmp_path):
    path = tmp_path / "c.config"
    path.write_text("deba-config v1\ntheta_stab = 0.25\ntheta_stab = 0.3\ntheta_conf = 0.5\n")
    with pytest.raises(ParseError):
        read_config(path)


def test_config_wrong_magic(tmp_path):
    path = tmp_path / "c.config"
    path.write_text("deba-trace v1\ntheta_stab = 0.25\ntheta_conf = 0.5\n")
    with pytest.raises(ParseError):
        read_config(path)


# --------------------------------------------------------------------------
# state checkpoints
# --------------------------------------------------------------------------

def test_state_checkpoint_round_trip(tmp_path, mobilenet_config):
    rng = np.random.default_rng(17)
    n = 40
    trace = make_trace(
        rng.uniform(0.5, 2.5, size=n).tolist(),
        rng.uniform(0.5, 6.0, size=n).tolist(),
        rng.uniform(1e-7, 1e-4, size=n).tolist(),
    )
    state = new_state(mobilenet_config, 64)
    for record in trace:
        step(state, record, mobilenet_config)
    path = tmp_path / "state.json"
    save_state(state, path)
    restored = load_state(path)
    assert restored == state
    assert isinstance(restored, SchedulerState)
