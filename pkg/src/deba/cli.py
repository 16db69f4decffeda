"""Command-line front end: run, profile, calibrate, and simulate.

Exit codes partition failures by kind so scripts can dispatch on them:

* 0 — success
* 2 — bad arguments (missing/unknown flags, unknown preset, no traces)
* 3 — file parse failures (malformed trace/config/log, unknown version or key)
* 4 — validation failures (non-finite values, broken invariants, bad ranges)
* 5 — I/O failures

Summaries go to stdout; every file is written only to an explicitly given
path. All output is deterministic for identical inputs and seed.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import __version__
from .errors import DebaError, FileFormatError, IoError, ValidationError
from .profiler import (
    aggregate_seeds,
    calibrate_thresholds,
    deba_diagnostics,
    stability_score,
)
from .presets import THROUGHPUT_PRESETS, preset_names, scheduler_preset
from .signals import compute_frames
from .sim import (
    DynamicsSpec,
    ParametricThroughput,
    ReplayResult,
    ThroughputModel,
    generate_trace,
    read_throughput_table,
    replay,
)
from .trace_io import read_config, read_trace, write_config, write_decision_log, write_trace
from .types import DecisionKind, SchedulerConfig, StatsMode

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_IO = 5

# Profiling and calibration never read the decision thresholds, but frame
# construction requires a config; these placeholders are documented as inert.
_PROFILING_THETA = 1.0


class _CliArgumentError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deba",
        description="Adaptive batch-size scheduling over epoch traces: "
        "replay decisions, profile stability, calibrate thresholds, simulate schedules.",
    )
    parser.add_argument("--version", action="version", version=f"deba {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay a trace through the scheduler")
    run.add_argument("--trace", required=True, help="epoch trace file")
    run.add_argument("--config", help="scheduler config file")
    run.add_argument("--preset", help=f"named preset ({', '.join(preset_names())})")
    run.add_argument("--out", required=True, help="decision log output path")
    run.add_argument("--initial-batch", type=int, default=64)
    run.add_argument("--throughput-model", help="parametric:C1,C2 | table:FILE | named preset")
    run.add_argument("--cooldown", type=int, help="override cooldown epochs")
    run.add_argument("--stats-mode", choices=[m.value for m in StatsMode])
    run.add_argument("--quiet", action="store_true", help="suppress the stdout summary")

    profile = sub.add_parser("profile", help="stability-profile fixed-batch traces")
    profile.add_argument(
        "--trace", action="append", default=[], help="trace file (repeat per seed)"
    )
    profile.add_argument("--out", required=True, help="profile report output path")
    profile.add_argument("--window-len", type=int, default=15)
    profile.add_argument("--stats-mode", choices=[m.value for m in StatsMode])
    profile.add_argument("--quiet", action="store_true")

    calibrate = sub.add_parser("calibrate", help="derive thresholds from a fixed-batch trace")
    calibrate.add_argument("--trace", required=True)
    calibrate.add_argument("--out", required=True, help="scheduler config output path")
    calibrate.add_argument("--window-len", type=int, default=15)
    calibrate.add_argument("--quiet", action="store_true")

    simulate = sub.add_parser("simulate", help="generate a synthetic trace and replay it")
    simulate.add_argument("--seed", type=int, required=True, help="generator seed (mandatory)")
    simulate.add_argument("--config", help="scheduler config file")
    simulate.add_argument("--preset", help=f"named preset ({', '.join(preset_names())})")
    simulate.add_argument("--out", required=True, help="decision log output path")
    simulate.add_argument("--epochs", type=int, default=100)
    simulate.add_argument("--out-trace", help="also write the generated trace here")
    simulate.add_argument("--initial-batch", type=int, default=64)
    simulate.add_argument("--throughput-model", help="parametric:C1,C2 | table:FILE | named preset")
    simulate.add_argument("--cooldown", type=int, help="override cooldown epochs")
    simulate.add_argument("--stats-mode", choices=[m.value for m in StatsMode])
    simulate.add_argument("--quiet", action="store_true")
    return parser


def _resolve_config(args: argparse.Namespace) -> SchedulerConfig:
    if bool(args.config) == bool(args.preset):
        raise _CliArgumentError("exactly one of --config or --preset is required")
    if args.config:
        config = read_config(args.config)
    else:
        try:
            config = scheduler_preset(args.preset)
        except KeyError as exc:
            raise _CliArgumentError(str(exc.args[0])) from None
    overrides = {}
    if args.cooldown is not None:
        overrides["cooldown_epochs"] = args.cooldown
    if args.stats_mode is not None:
        overrides["stats_mode"] = StatsMode(args.stats_mode)
    if overrides:
        config = SchedulerConfig(
            **{**{f: getattr(config, f) for f in config.__dataclass_fields__}, **overrides}
        )
    return config


def _resolve_throughput(spec: Optional[str]) -> Optional[ThroughputModel]:
    if spec is None:
        return None
    if spec in THROUGHPUT_PRESETS:
        return THROUGHPUT_PRESETS[spec]
    if spec.startswith("parametric:"):
        parts = spec[len("parametric:"):].split(",")
        if len(parts) != 2:
            raise _CliArgumentError("parametric throughput needs 'parametric:C1,C2'")
        try:
            c1, c2 = float(parts[0]), float(parts[1])
        except ValueError:
            raise _CliArgumentError(f"bad parametric constants in {spec!r}") from None
        return ParametricThroughput(overhead_seconds=c1, amortized_seconds=c2)
    if spec.startswith("table:"):
        return read_throughput_table(spec[len("table:"):])
    raise _CliArgumentError(
        f"unknown throughput model {spec!r}; use parametric:C1,C2, table:FILE, "
        f"or one of: {', '.join(sorted(THROUGHPUT_PRESETS))}"
    )


def _profiling_config(window_len: int, stats_mode: Optional[str]) -> SchedulerConfig:
    return SchedulerConfig(
        theta_stab=_PROFILING_THETA,
        theta_conf=_PROFILING_THETA,
        window_len=window_len,
        stats_mode=StatsMode(stats_mode) if stats_mode else StatsMode.SLIDING_WINDOW,
    )


def _print_summary(result: ReplayResult, losses: Sequence[float]) -> None:
    counts = {kind: 0 for kind in DecisionKind}
    for entry in result.log:
        counts[entry.decision.kind] += 1
    print(f"epochs: {len(result.log)}")
    print(
        "decisions: "
        f"increase={counts[DecisionKind.INCREASE]} "
        f"rollback={counts[DecisionKind.ROLLBACK]} "
        f"hold={counts[DecisionKind.HOLD]}"
    )
    changes = [e for e in result.log if e.decision.changes_batch]
    print(f"adaptation events: {len(changes)}")
    for entry in changes:
        print(
            f"  epoch {entry.epoch}: {entry.decision.kind.value} "
            f"{entry.batch_before} -> {entry.batch_after}"
        )
    segments: list[tuple[int, int]] = []  # (batch, run length) over the schedule
    for _, batch in result.schedule:
        if segments and segments[-1][0] == batch:
            segments[-1] = (batch, segments[-1][1] + 1)
        else:
            segments.append((batch, 1))
    if segments:
        print("schedule: " + " | ".join(f"{batch} x{n}" for batch, n in segments))
    final_batch = result.log[-1].batch_after if result.log else None
    print(f"final batch: {final_batch if final_batch is not None else 'n/a'}")
    if result.log:
        diag = deba_diagnostics(result.log, losses)
        print(f"decision aggressiveness: {diag.decision_aggressiveness:.6g}")
        print(f"convergence stability: {diag.convergence_stability:.6g}")
    if result.speedup is not None:
        print(f"adaptive seconds: {result.adaptive_seconds:.2f}")
        print(f"fixed seconds: {result.fixed_seconds:.2f}")
        print(f"speedup vs fixed batch: {100.0 * result.speedup:.2f}%")


def _cmd_run(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    model = _resolve_throughput(args.throughput_model)
    trace = read_trace(args.trace)
    result = replay(trace, config, model=model, initial_batch=args.initial_batch)
    write_decision_log(result.log, args.out)
    if not args.quiet:
        _print_summary(result, [r.loss for r in trace])
    return EXIT_OK


def _cmd_profile(args: argparse.Namespace) -> int:
    if not args.trace:
        raise _CliArgumentError("profile needs at least one --trace")
    config = _profiling_config(args.window_len, args.stats_mode)
    profiles = []
    for path in args.trace:
        records = read_trace(path)
        frames = compute_frames(records, config)
        profiles.append(stability_score(frames[1:]))  # epoch 0 carries no variations
    aggregate = aggregate_seeds(profiles)

    lines = [f"deba-profile v{1}", f"n_seeds = {aggregate.n_seeds}"]
    lines.append(f"mu_s = {aggregate.mu_s!r}")
    lines.append(f"sigma_s = {aggregate.sigma_s!r}")
    lines.append(f"taxonomy = {aggregate.taxonomy.value}")
    for i, profile in enumerate(profiles):
        prefix = f"trace_{i}"
        lines.append(f"{prefix}.n_epochs = {profile.n_epochs}")
        lines.append(f"{prefix}.stability_score = {profile.stability_score!r}")
        lines.append(f"{prefix}.cv_grad_variance = {profile.cv_grad_variance!r}")
        lines.append(f"{prefix}.mean_grad_norm_variation = {profile.mean_grad_norm_variation!r}")
        lines.append(f"{prefix}.mean_loss_variation = {profile.mean_loss_variation!r}")
    try:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {args.out}: {exc}") from exc

    if not args.quiet:
        for i, profile in enumerate(profiles):
            print(
                f"trace {i}: S={profile.stability_score:.6g} "
                f"cv={profile.cv_grad_variance:.6g} "
                f"gnv={profile.mean_grad_norm_variation:.6g} "
                f"lv={profile.mean_loss_variation:.6g} "
                f"epochs={profile.n_epochs}"
            )
        print(
            f"aggregate: mu_s={aggregate.mu_s:.6g} sigma_s={aggregate.sigma_s:.6g} "
            f"n_seeds={aggregate.n_seeds} taxonomy={aggregate.taxonomy.value}"
        )
    return EXIT_OK


def _cmd_calibrate(args: argparse.Namespace) -> int:
    records = read_trace(args.trace)
    config = _profiling_config(args.window_len, None)
    frames = compute_frames(records, config)
    thresholds = calibrate_thresholds(frames[1:])  # drop the warmup epoch
    calibrated = SchedulerConfig(
        theta_stab=thresholds.theta_stab,
        theta_conf=thresholds.theta_conf,
        window_len=args.window_len,
    )
    write_config(calibrated, args.out)
    if not args.quiet:
        print(f"theta_stab: {thresholds.theta_stab!r}")
        print(f"theta_conf: {thresholds.theta_conf!r}")
        print(f"config written: {args.out}")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    model = _resolve_throughput(args.throughput_model)
    spec = DynamicsSpec(seed=args.seed, n_epochs=args.epochs)
    trace = generate_trace(spec)
    if args.out_trace:
        write_trace(trace, args.out_trace, producer=f"deba simulate seed={args.seed}")
    result = replay(trace, config, model=model, initial_batch=args.initial_batch)
    write_decision_log(result.log, args.out)
    if not args.quiet:
        _print_summary(result, [r.loss for r in trace])
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "profile": _cmd_profile,
    "calibrate": _cmd_calibrate,
    "simulate": _cmd_simulate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed the diagnostic; normalize its code
        return EXIT_BAD_ARGS if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except _CliArgumentError as exc:
        print(f"deba: error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except FileFormatError as exc:
        print(f"deba: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"deba: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IoError as exc:
        print(f"deba: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    except DebaError as exc:  # any future error kind: treat as validation
        print(f"deba: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
