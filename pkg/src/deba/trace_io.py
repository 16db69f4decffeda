"""On-disk formats: epoch traces, decision logs, config files, and state
checkpoints.

All three text formats are line-delimited, tab- or key-value-structured,
and locale-independent. Reals are written with ``repr`` (shortest decimal
that round-trips the double), so re-reading a file reproduces the exact
values and logs diff cleanly across platforms. Every writer ends the file
with a trailing newline and uses ``\\n`` regardless of platform.

Trace files start with ``deba-trace v1`` followed by header keys
(``producer``, ``stats``, and ``gradients`` for raw traces), a column
header, and one row per epoch. Raw gradient vectors live either inline
(comma-separated) or in a binary sidecar of length-prefixed little-endian
doubles referenced from the header.
"""

from __future__ import annotations

import json
import math
import re
import struct
from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import (
    InvalidValue,
    IoError,
    NonContiguousEpochs,
    NonFiniteValue,
    ParseError,
    UnknownKey,
    UnknownVersion,
)
from .types import (
    Decision,
    DecisionKind,
    DecisionReason,
    EpochRecord,
    LogEntry,
    PrecomputedStats,
    RawGradient,
    SchedulerConfig,
    SchedulerState,
    SignalFrame,
    StatsMode,
)

TRACE_MAGIC = "deba-trace"
LOG_MAGIC = "deba-decision-log"
CONFIG_MAGIC = "deba-config"
FORMAT_VERSION = 1

PRECOMPUTED_COLUMNS = ("epoch", "loss", "grad_norm", "grad_variance")
RAW_INLINE_COLUMNS = ("epoch", "loss", "gradient")
RAW_SIDECAR_COLUMNS = ("epoch", "loss")
LOG_COLUMNS = (
    "epoch",
    "grad_variance",
    "grad_norm",
    "grad_norm_variation",
    "loss_variation",
    "confidence",
    "stable_gradients",
    "stable_loss",
    "decision",
    "reason",
    "batch_before",
    "batch_after",
)

_INT_RE = re.compile(r"^\d+$")


# --------------------------------------------------------------------------
# low-level helpers
# --------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _read_text(path: Union[str, Path]) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_text(path: Union[str, Path], content: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _field_column(line: str, index: int) -> int:
    """1-based character offset where the index-th tab-separated field starts."""
    offset = 0
    for _ in range(index):
        offset = line.index("\t", offset) + 1
    return offset + 1


def _parse_int(text: str, line_no: int, line: str, index: int) -> int:
    if not _INT_RE.match(text):
        raise ParseError(line_no, _field_column(line, index), f"expected an integer, got {text!r}")
    return int(text)


def _parse_float(text: str, line_no: int, line: str, index: int) -> float:
    if "_" in text or not text:
        raise ParseError(line_no, _field_column(line, index), f"expected a real number, got {text!r}")
    try:
        return float(text)
    except ValueError:
        raise ParseError(
            line_no, _field_column(line, index), f"expected a real number, got {text!r}"
        ) from None


def _parse_bool(text: str, line_no: int, line: str, index: int) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ParseError(line_no, _field_column(line, index), f"expected true/false, got {text!r}")


def _check_version(first_line: str, magic: str) -> None:
    parts = first_line.split(" ")
    if len(parts) != 2 or parts[0] != magic or not parts[1].startswith("v"):
        raise ParseError(1, 1, f"expected header {magic!r} v<version>, got {first_line!r}")
    version = parts[1][1:]
    if not _INT_RE.match(version) or int(version) != FORMAT_VERSION:
        raise UnknownVersion(f"unsupported {magic} version {parts[1]!r}")


def _split_fields(line: str, line_no: int, expected: int) -> list[str]:
    fields = line.split("\t")
    if len(fields) != expected:
        raise ParseError(line_no, 1, f"expected {expected} fields, got {len(fields)}")
    return fields


# --------------------------------------------------------------------------
# trace files
# --------------------------------------------------------------------------

def read_trace(path: Union[str, Path]) -> list[EpochRecord]:
    """Parse a trace file into validated epoch records.

    Epochs must be contiguous from 0. Non-finite values name the offending
    epoch; structural problems carry a line and column.
    """
    path = Path(path)
    text = _read_text(path)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(1, 1, "empty trace file")
    _check_version(lines[0], TRACE_MAGIC)

    headers: dict[str, str] = {}
    row_start = None
    for i, line in enumerate(lines[1:], start=2):
        if line.startswith("epoch\t") or line == "epoch":
            row_start = i
            break
        if ": " not in line:
            raise ParseError(i, 1, f"expected 'key: value' header or column header, got {line!r}")
        key, value = line.split(": ", 1)
        if key not in ("producer", "stats", "gradients"):
            raise ParseError(i, 1, f"unknown trace header key {key!r}")
        if key in headers:
            raise ParseError(i, 1, f"duplicate header key {key!r}")
        headers[key] = value
    if row_start is None:
        raise ParseError(len(lines), 1, "missing column header line")

    stats = headers.get("stats")
    if stats not in ("precomputed", "raw"):
        raise ParseError(1, 1, f"stats convention must be 'precomputed' or 'raw', got {stats!r}")

    sidecar_vectors: Optional[list] = None
    if stats == "precomputed":
        if "gradients" in headers:
            raise ParseError(1, 1, "'gradients' header is only valid for raw traces")
        columns = PRECOMPUTED_COLUMNS
    else:
        gradients = headers.get("gradients")
        if gradients == "inline":
            columns = RAW_INLINE_COLUMNS
        elif gradients is not None and gradients.startswith("sidecar "):
            columns = RAW_SIDECAR_COLUMNS
            sidecar_vectors = _read_sidecar(path.parent / gradients[len("sidecar "):])
        else:
            raise ParseError(
                1, 1, f"raw trace needs 'gradients: inline' or 'gradients: sidecar <file>', got {gradients!r}"
            )

    expected_header = "\t".join(columns)
    if lines[row_start - 1] != expected_header:
        raise ParseError(row_start, 1, f"column header must be {expected_header!r}")

    records: list[EpochRecord] = []
    for line_no, line in enumerate(lines[row_start:], start=row_start + 1):
        fields = _split_fields(line, line_no, len(columns))
        epoch = _parse_int(fields[0], line_no, line, 0)
        if epoch != len(records):
            raise NonContiguousEpochs(
                f"expected epoch {len(records)}, got {epoch} (line {line_no})"
            )
        loss = _parse_float(fields[1], line_no, line, 1)
        if not math.isfinite(loss):
            raise NonFiniteValue(f"loss at epoch {epoch} is not finite")

        if stats == "precomputed":
            norm = _parse_float(fields[2], line_no, line, 2)
            variance = _parse_float(fields[3], line_no, line, 3)
            for name, value in (("grad_norm", norm), ("grad_variance", variance)):
                if not math.isfinite(value):
                    raise NonFiniteValue(f"{name} at epoch {epoch} is not finite")
            grad_stats: Union[PrecomputedStats, RawGradient] = PrecomputedStats(
                grad_norm=norm, grad_variance=variance
            )
        elif sidecar_vectors is not None:
            if epoch >= len(sidecar_vectors):
                raise ParseError(line_no, 1, f"sidecar has no gradient for epoch {epoch}")
            grad_stats = RawGradient(sidecar_vectors[epoch])
        else:
            parts = fields[2].split(",")
            values = [_parse_float(p, line_no, line, 2) for p in parts]
            grad_stats = RawGradient(values)
        records.append(EpochRecord(epoch=epoch, loss=loss, grad_stats=grad_stats))

    if sidecar_vectors is not None and len(sidecar_vectors) != len(records):
        raise ParseError(
            len(lines), 1,
            f"sidecar holds {len(sidecar_vectors)} gradients for {len(records)} epochs",
        )
    return records


def write_trace(
    records: Sequence[EpochRecord],
    path: Union[str, Path],
    producer: str = "",
    sidecar: Optional[str] = None,
) -> None:
    """Write records in the trace format; the mode follows the record kind.

    ``sidecar`` names a binary file (relative to the trace) for raw
    gradient vectors; raw records without a sidecar are written inline.
    """
    path = Path(path)
    kinds = {type(r.grad_stats) for r in records}
    if len(kinds) > 1:
        raise InvalidValue("records", "cannot mix raw and precomputed records in one trace")
    raw = kinds == {RawGradient}

    out = [f"{TRACE_MAGIC} v{FORMAT_VERSION}", f"producer: {producer}"]
    if raw:
        out.append("stats: raw")
        if sidecar is not None:
            out.append(f"gradients: sidecar {sidecar}")
            out.append("\t".join(RAW_SIDECAR_COLUMNS))
            _write_sidecar(path.parent / sidecar, [r.grad_stats.values for r in records])
            for r in records:
                out.append(f"{r.epoch}\t{_fmt(r.loss)}")
        else:
            out.append("gradients: inline")
            out.append("\t".join(RAW_INLINE_COLUMNS))
            for r in records:
                joined = ",".join(_fmt(v) for v in r.grad_stats.values.tolist())
                out.append(f"{r.epoch}\t{_fmt(r.loss)}\t{joined}")
    else:
        out.append("stats: precomputed")
        out.append("\t".join(PRECOMPUTED_COLUMNS))
        for r in records:
            out.append(
                f"{r.epoch}\t{_fmt(r.loss)}\t{_fmt(r.grad_stats.grad_norm)}"
                f"\t{_fmt(r.grad_stats.grad_variance)}"
            )
    _write_text(path, "\n".join(out) + "\n")


def _read_sidecar(path: Path) -> list[list[float]]:
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read gradient sidecar {path}: {exc}") from exc
    vectors: list[list[float]] = []
    offset = 0
    while offset < len(blob):
        if offset + 8 > len(blob):
            raise ParseError(len(vectors) + 1, 1, "sidecar: truncated length prefix")
        (count,) = struct.unpack_from("<Q", blob, offset)
        offset += 8
        end = offset + 8 * count
        if end > len(blob):
            raise ParseError(len(vectors) + 1, 1, "sidecar: truncated gradient payload")
        vectors.append(list(struct.unpack_from(f"<{count}d", blob, offset)))
        offset = end
    return vectors


def _write_sidecar(path: Path, vectors: Sequence) -> None:
    try:
        with open(path, "wb") as fh:
            for vec in vectors:
                values = list(vec)
                fh.write(struct.pack("<Q", len(values)))
                fh.write(struct.pack(f"<{len(values)}d", *values))
    except OSError as exc:
        raise IoError(f"cannot write gradient sidecar {path}: {exc}") from exc


# --------------------------------------------------------------------------
# decision logs
# --------------------------------------------------------------------------

def write_decision_log(log: Sequence[LogEntry], path: Union[str, Path]) -> None:
    """One row per epoch with every signal field plus the decision taken."""
    out = [f"{LOG_MAGIC} v{FORMAT_VERSION}", "\t".join(LOG_COLUMNS)]
    for entry in log:
        f = entry.frame
        out.append(
            "\t".join(
                (
                    str(entry.epoch),
                    _fmt(f.grad_variance),
                    _fmt(f.grad_norm),
                    _fmt(f.grad_norm_variation),
                    _fmt(f.loss_variation),
                    _fmt(f.confidence),
                    _fmt(f.stable_gradients),
                    _fmt(f.stable_loss),
                    entry.decision.kind.value,
                    entry.decision.reason.value,
                    str(entry.batch_before),
                    str(entry.batch_after),
                )
            )
        )
    _write_text(path, "\n".join(out) + "\n")


def read_decision_log(path: Union[str, Path]) -> list[LogEntry]:
    lines = _read_text(path).split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(1, 1, "empty decision log")
    _check_version(lines[0], LOG_MAGIC)
    if len(lines) < 2 or lines[1] != "\t".join(LOG_COLUMNS):
        raise ParseError(2, 1, "missing or wrong column header")
    entries: list[LogEntry] = []
    for line_no, line in enumerate(lines[2:], start=3):
        fields = _split_fields(line, line_no, len(LOG_COLUMNS))
        epoch = _parse_int(fields[0], line_no, line, 0)
        frame = SignalFrame(
            epoch=epoch,
            grad_variance=_parse_float(fields[1], line_no, line, 1),
            grad_norm=_parse_float(fields[2], line_no, line, 2),
            grad_norm_variation=_parse_float(fields[3], line_no, line, 3),
            loss_variation=_parse_float(fields[4], line_no, line, 4),
            confidence=_parse_float(fields[5], line_no, line, 5),
            stable_gradients=_parse_bool(fields[6], line_no, line, 6),
            stable_loss=_parse_bool(fields[7], line_no, line, 7),
        )
        try:
            decision = Decision(DecisionKind(fields[8]), DecisionReason(fields[9]))
        except ValueError:
            raise ParseError(
                line_no, _field_column(line, 8), f"unknown decision {fields[8]!r}/{fields[9]!r}"
            ) from None
        entries.append(
            LogEntry(
                epoch=epoch,
                frame=frame,
                decision=decision,
                batch_before=_parse_int(fields[10], line_no, line, 10),
                batch_after=_parse_int(fields[11], line_no, line, 11),
            )
        )
    return entries


# --------------------------------------------------------------------------
# config files
# --------------------------------------------------------------------------

_CONFIG_KEYS = (
    "theta_stab",
    "theta_conf",
    "alpha_grow",
    "alpha_roll",
    "b_min",
    "b_max",
    "cooldown_epochs",
    "window_len",
    "stats_mode",
    "epsilon",
)
_INT_KEYS = {"b_min", "b_max", "cooldown_epochs", "window_len"}
_REQUIRED_KEYS = ("theta_stab", "theta_conf")


def write_config(config: SchedulerConfig, path: Union[str, Path]) -> None:
    """Write every field in canonical order as ``key = value`` lines."""
    out = [f"{CONFIG_MAGIC} v{FORMAT_VERSION}"]
    for key in _CONFIG_KEYS:
        value = getattr(config, key)
        if key == "stats_mode":
            out.append(f"{key} = {value.value}")
        else:
            out.append(f"{key} = {_fmt(value)}")
    _write_text(path, "\n".join(out) + "\n")


def read_config(path: Union[str, Path]) -> SchedulerConfig:
    """Parse a config file; unknown keys are rejected, absent optional keys
    take their defaults, and the two thresholds are required."""
    lines = _read_text(path).split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(1, 1, "empty config file")
    _check_version(lines[0], CONFIG_MAGIC)

    seen: dict[str, str] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(line_no, 1, f"expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise UnknownKey(key, line_no)
        if key in seen:
            raise ParseError(line_no, 1, f"duplicate key {key!r}")
        seen[key] = value

    for key in _REQUIRED_KEYS:
        if key not in seen:
            raise InvalidValue(key, "missing required key")

    kwargs: dict = {}
    for key, raw in seen.items():
        if key == "stats_mode":
            try:
                kwargs[key] = StatsMode(raw)
            except ValueError:
                raise InvalidValue(
                    key, f"must be 'sliding_window' or 'full_history', got {raw!r}"
                ) from None
        elif key in _INT_KEYS:
            if not _INT_RE.match(raw):
                raise InvalidValue(key, f"must be a non-negative integer, got {raw!r}")
            kwargs[key] = int(raw)
        else:
            if "_" in raw or not raw:
                raise InvalidValue(key, f"must be a real number, got {raw!r}")
            try:
                kwargs[key] = float(raw)
            except ValueError:
                raise InvalidValue(key, f"must be a real number, got {raw!r}") from None
    return SchedulerConfig(**kwargs)


# --------------------------------------------------------------------------
# state checkpoints
# --------------------------------------------------------------------------

def save_state(state: SchedulerState, path: Union[str, Path]) -> None:
    """Checkpoint the full scheduler state as JSON (lossless round trip)."""
    _write_text(path, json.dumps(state.to_dict(), indent=2) + "\n")


def load_state(path: Union[str, Path]) -> SchedulerState:
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.colno, f"invalid state checkpoint: {exc.msg}") from None
    return SchedulerState.from_dict(data)
