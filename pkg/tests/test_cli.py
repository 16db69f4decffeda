"""Subcommand behaviour, exit-code partition, and golden-file determinism."""

from __future__ import annotations

import subprocess
import sys

from deba import SchedulerConfig, compute_frames, stability_score
from deba.cli import EXIT_BAD_ARGS, EXIT_IO, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, main
from deba.trace_io import read_config, read_decision_log, read_trace, write_trace

from conftest import GOLDEN_DIR, make_trace


GOLDEN_TRACE = GOLDEN_DIR / "golden.trace"
GOLDEN_CONFIG = GOLDEN_DIR / "mobilenet_v3.config"
GOLDEN_LOG = GOLDEN_DIR / "golden.decision_log"
GOLDEN_SUMMARY = GOLDEN_DIR / "simulate_seed42.summary"


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def test_run_reproduces_golden_log_byte_for_byte(tmp_path, capsys):
    out = tmp_path / "log"
    code = main(
        ["run", "--trace", str(GOLDEN_TRACE), "--config", str(GOLDEN_CONFIG), "--out", str(out)]
    )
    assert code == EXIT_OK
    assert out.read_bytes() == GOLDEN_LOG.read_bytes()
    summary = capsys.readouterr().out
    assert "final batch: 1048" in summary
    assert "decisions: increase=10 rollback=5 hold=85" in summary


def test_run_via_preset_matches_config_file(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--trace", str(GOLDEN_TRACE), "--config", str(GOLDEN_CONFIG), "--out", str(a), "--quiet"]) == EXIT_OK
    assert main(["run", "--trace", str(GOLDEN_TRACE), "--preset", "mobilenet-v3", "--out", str(b), "--quiet"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_run_twice_is_deterministic(tmp_path, capsys):
    outputs = []
    for name in ("x", "y"):
        out = tmp_path / name
        assert main(["run", "--trace", str(GOLDEN_TRACE), "--config", str(GOLDEN_CONFIG), "--out", str(out)]) == EXIT_OK
        outputs.append((out.read_bytes(), capsys.readouterr().out))
    assert outputs[0] == outputs[1]


def test_run_without_config_or_preset_is_bad_arguments(tmp_path, capsys):
    code = main(["run", "--trace", str(GOLDEN_TRACE), "--out", str(tmp_path / "log")])
    assert code == EXIT_BAD_ARGS
    assert "exactly one of --config or --preset" in capsys.readouterr().err


def test_run_with_malformed_trace_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.trace"
    bad.write_text(
        "deba-trace v1\nproducer: x\nstats: precomputed\n"
        "epoch\tloss\tgrad_norm\tgrad_variance\n0\t1.0\toops\t1e-06\n"
    )
    code = main(["run", "--trace", str(bad), "--config", str(GOLDEN_CONFIG), "--out", str(tmp_path / "log")])
    assert code == EXIT_PARSE
    err = capsys.readouterr().err
    assert "line 5" in err and err.count("\n") == 1  # single-line diagnostic


def test_run_with_invalid_config_value_is_validation_error(tmp_path, capsys):
    bad = tmp_path / "bad.config"
    bad.write_text("deba-config v1\ntheta_stab = 0.25\ntheta_conf = 0.5\nalpha_roll = 1.2\n")
    code = main(["run", "--trace", str(GOLDEN_TRACE), "--config", str(bad), "--out", str(tmp_path / "log")])
    assert code == EXIT_VALIDATION
    assert "alpha_roll" in capsys.readouterr().err


def test_run_with_missing_trace_file_is_io_error(tmp_path, capsys):
    code = main(["run", "--trace", str(tmp_path / "absent"), "--config", str(GOLDEN_CONFIG), "--out", str(tmp_path / "log")])
    assert code == EXIT_IO


def test_run_with_unknown_flag_is_bad_arguments(capsys):
    assert main(["run", "--nonsense"]) == EXIT_BAD_ARGS


def test_run_cooldown_and_stats_mode_overrides(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main([
        "run", "--trace", str(GOLDEN_TRACE), "--config", str(GOLDEN_CONFIG),
        "--out", str(out_a), "--cooldown", "10", "--quiet",
    ]) == EXIT_OK
    assert main([
        "run", "--trace", str(GOLDEN_TRACE), "--config", str(GOLDEN_CONFIG),
        "--out", str(out_b), "--quiet",
    ]) == EXIT_OK
    log_a = read_decision_log(out_a)
    log_b = read_decision_log(out_b)
    changes = lambda log: sum(1 for e in log if e.decision.changes_batch)  # noqa: E731
    assert changes(log_a) < changes(log_b)

    out_c = tmp_path / "c"
    assert main([
        "run", "--trace", str(GOLDEN_TRACE), "--config", str(GOLDEN_CONFIG),
        "--out", str(out_c), "--stats-mode", "full_history", "--quiet",
    ]) == EXIT_OK
    # unbounded windows change the confidence history, hence the decisions
    assert out_c.read_bytes() != out_b.read_bytes()


def test_run_with_throughput_model_prints_speedup(tmp_path, capsys):
    out = tmp_path / "log"
    code = main([
        "run", "--trace", str(GOLDEN_TRACE), "--config", str(GOLDEN_CONFIG),
        "--out", str(out), "--throughput-model", "parametric:4.647100843721449,200.50554600182724",
    ])
    assert code == EXIT_OK
    assert "speedup vs fixed batch:" in capsys.readouterr().out


# --------------------------------------------------------------------------
# profile
# --------------------------------------------------------------------------

def _write_seed_trace(path, seed):
    import numpy as np

    rng = np.random.default_rng(seed)
    n = 50
    records = make_trace(
        rng.uniform(1.0, 2.0, size=n).tolist(),
        rng.uniform(2.0, 4.0, size=n).tolist(),
        rng.uniform(1e-6, 1e-5, size=n).tolist(),
    )
    write_trace(records, path, producer=f"seed {seed}")
    return records


def test_profile_three_seeds_matches_profiler_oracle(tmp_path, capsys):
    paths, records = [], []
    for seed in (2, 42, 199):
        path = tmp_path / f"s{seed}.trace"
        records.append(_write_seed_trace(path, seed))
        paths.append(path)
    out = tmp_path / "report"
    argv = ["profile", "--out", str(out)]
    for path in paths:
        argv += ["--trace", str(path)]
    assert main(argv) == EXIT_OK

    config = SchedulerConfig(theta_stab=1.0, theta_conf=1.0)
    scores = [stability_score(compute_frames(r, config)[1:]).stability_score for r in records]
    mu = sum(scores) / 3
    stdout = capsys.readouterr().out
    assert f"mu_s={mu:.6g}" in stdout
    report = out.read_text()
    assert "n_seeds = 3" in report
    assert "taxonomy =" in report


def test_profile_single_trace_reports_zero_spread(tmp_path, capsys):
    path = tmp_path / "s.trace"
    _write_seed_trace(path, 7)
    out = tmp_path / "report"
    assert main(["profile", "--trace", str(path), "--out", str(out)]) == EXIT_OK
    assert "sigma_s=0" in capsys.readouterr().out
    assert "n_seeds = 1" in out.read_text()


def test_profile_without_traces_is_bad_arguments(tmp_path, capsys):
    assert main(["profile", "--out", str(tmp_path / "report")]) == EXIT_BAD_ARGS


# --------------------------------------------------------------------------
# calibrate
# --------------------------------------------------------------------------

def test_calibrate_then_run_pipeline(tmp_path, capsys):
    trace_path = tmp_path / "fixed.trace"
    _write_seed_trace(trace_path, 11)
    config_path = tmp_path / "calibrated.config"
    assert main(["calibrate", "--trace", str(trace_path), "--out", str(config_path)]) == EXIT_OK
    config = read_config(config_path)
    assert config.theta_stab > 0 and config.theta_conf > 0
    # calibrated config is directly consumable by run
    out = tmp_path / "log"
    assert main(["run", "--trace", str(trace_path), "--config", str(config_path), "--out", str(out), "--quiet"]) == EXIT_OK
    assert len(read_decision_log(out)) == len(read_trace(trace_path))


def test_calibrate_quantile_against_uniform_oracle(tmp_path, capsys):
    import numpy as np

    rng = np.random.default_rng(3)
    n = 2000
    samples = rng.uniform(0, 1, size=n - 1)
    # bounded multiplicative walk whose step-wise relative variation is
    # exactly the drawn sample: walk down when above 1, up when below
    norms = [1.0]
    for u in samples:
        ratio = (1.0 - u) if norms[-1] > 1.0 else (1.0 + u)
        norms.append(norms[-1] * max(ratio, 1e-12))
    records = make_trace([1.0] * n, norms, [1e-6] * n)
    trace_path = tmp_path / "u.trace"
    write_trace(records, trace_path)
    config_path = tmp_path / "c.config"
    assert main(["calibrate", "--trace", str(trace_path), "--out", str(config_path)]) == EXIT_OK
    config = read_config(config_path)
    assert abs(config.theta_stab - 0.75) < 0.03


def test_calibrate_too_short_trace(tmp_path, capsys):
    records = make_trace([1.0] * 3, [1.0] * 3, [1e-6] * 3)
    path = tmp_path / "short.trace"
    write_trace(records, path)
    code = main(["calibrate", "--trace", str(path), "--out", str(tmp_path / "c")])
    assert code == EXIT_VALIDATION
    assert "InsufficientEpochs" in capsys.readouterr().err


# --------------------------------------------------------------------------
# simulate
# --------------------------------------------------------------------------

def test_simulate_reproduces_golden_summary(tmp_path, capsys):
    code = main([
        "simulate", "--seed", "42", "--preset", "efficientnet-b0",
        "--out", str(tmp_path / "log"), "--throughput-model", "resnet18-cifar10",
    ])
    assert code == EXIT_OK
    assert capsys.readouterr().out == GOLDEN_SUMMARY.read_text()
    assert (tmp_path / "log").read_bytes() == (GOLDEN_DIR / "simulate_seed42.decision_log").read_bytes()


def test_simulate_requires_seed(tmp_path, capsys):
    code = main(["simulate", "--preset", "efficientnet-b0", "--out", str(tmp_path / "log")])
    assert code == EXIT_BAD_ARGS


def test_simulate_unknown_preset_lists_valid_names(tmp_path, capsys):
    code = main(["simulate", "--seed", "1", "--preset", "alexnet", "--out", str(tmp_path / "log")])
    assert code == EXIT_BAD_ARGS
    err = capsys.readouterr().err
    assert "mobilenet-v3" in err and "universal" in err


def test_simulate_cooldown_ablation_changes_adaptation_count(tmp_path):
    logs = {}
    for cooldown in (2, 10):
        out = tmp_path / f"log{cooldown}"
        assert main([
            "simulate", "--seed", "42", "--preset", "efficientnet-b0",
            "--out", str(out), "--cooldown", str(cooldown), "--quiet",
        ]) == EXIT_OK
        logs[cooldown] = read_decision_log(out)
    n2 = sum(1 for e in logs[2] if e.decision.changes_batch)
    n10 = sum(1 for e in logs[10] if e.decision.changes_batch)
    assert n2 > n10


def test_simulate_writes_trace_when_asked(tmp_path):
    trace_out = tmp_path / "synthetic.trace"
    assert main([
        "simulate", "--seed", "9", "--preset", "universal",
        "--out", str(tmp_path / "log"), "--out-trace", str(trace_out), "--quiet",
    ]) == EXIT_OK
    records = read_trace(trace_out)
    assert len(records) == 100


# --------------------------------------------------------------------------
# console entry point (one subprocess sanity check)
# --------------------------------------------------------------------------

def test_module_invocation_matches_in_process(tmp_path):
    out = tmp_path / "log"
    proc = subprocess.run(
        [sys.executable, "-m", "deba", "run",
         "--trace", str(GOLDEN_TRACE), "--config", str(GOLDEN_CONFIG), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_bytes() == GOLDEN_LOG.read_bytes()
    assert "final batch: 1048" in proc.stdout


def test_help_exits_zero(capsys):
    assert main(["--help"]) == EXIT_OK
