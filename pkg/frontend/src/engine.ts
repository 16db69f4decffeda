/**
 * EngineHandle: drive the batch-size engine from Node, one epoch at a time.
 *
 * The handle never links against the engine's internals. It accumulates the
 * epoch observations it is given, serializes them in the engine's trace
 * format, and invokes the `deba` CLI (`run`, `calibrate`, `profile`) on the
 * files; results come back through the decision-log and config formats. The
 * engine is deterministic, so replaying the accumulated trace after each
 * step yields exactly the decision sequence an in-process scheduler would
 * have produced. One subprocess per epoch is the cost; against an epoch of
 * actual training it is noise.
 *
 * A handle owns one scheduler (one config, one trace, one mode: summary
 * stats or raw gradients). Calls on a single handle must not be issued
 * concurrently; separate handles are fully independent.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import {
  ClosedHandleError,
  DegenerateGradientError,
  EngineError,
  EpochMismatchError,
  ModeMismatchError,
  NonFiniteValueError,
  cliErrorFromExit,
} from "./errors.js";
import {
  DecisionRow,
  PrecomputedRow,
  ProfileReport,
  RawRow,
  SchedulerOptions,
  parseConfig,
  parseDecisionLog,
  parseProfileReport,
  serializeConfig,
  serializePrecomputedTrace,
  serializeRawTrace,
} from "./formats.js";

export interface EngineOptions {
  /** Python interpreter used to launch the engine CLI. */
  python?: string;
  /** Scratch directory; a fresh temp dir is created when omitted. */
  workdir?: string;
  /** Batch size before the first adaptation. */
  initialBatch?: number;
}

export interface StepResult {
  decision: "increase" | "rollback" | "hold";
  reason: string;
  /** Batch size to use for the next epoch. */
  batch: number;
}

export interface CalibrationResult {
  thetaStab: number;
  thetaConf: number;
}

const SIDECAR_THRESHOLD = 4096; // components; larger gradients go binary

export class EngineHandle {
  private readonly python: string;
  private readonly dir: string;
  private readonly ownsDir: boolean;
  private readonly initialBatch: number;
  private readonly producer = "deba-node engine handle";

  private closed = false;
  private mode: "precomputed" | "raw" | null = null;
  private precomputedRows: PrecomputedRow[] = [];
  private rawRows: RawRow[] = [];
  private lastLog: DecisionRow[] = [];
  private lastLogBytes: Buffer | null = null;

  constructor(options: SchedulerOptions, engine: EngineOptions = {}) {
    this.python = engine.python ?? process.env["DEBA_PYTHON"] ?? "python3";
    this.ownsDir = engine.workdir === undefined;
    this.dir = engine.workdir ?? mkdtempSync(join(tmpdir(), "deba-node-"));
    this.initialBatch = engine.initialBatch ?? 64;
    writeFileSync(this.configPath, serializeConfig(options));
  }

  private get configPath(): string {
    return join(this.dir, "scheduler.config");
  }

  private get tracePath(): string {
    return join(this.dir, "epochs.trace");
  }

  private get logPath(): string {
    return join(this.dir, "decisions.log");
  }

  private assertOpen(): void {
    if (this.closed) throw new ClosedHandleError("handle is closed");
  }

  private get nextEpoch(): number {
    return this.mode === "raw" ? this.rawRows.length : this.precomputedRows.length;
  }

  private checkStepPreconditions(epoch: number, loss: number, mode: "precomputed" | "raw"): void {
    this.assertOpen();
    if (this.mode !== null && this.mode !== mode) {
      throw new ModeMismatchError(
        `handle already carries ${this.mode} observations; cannot mix in ${mode}`,
      );
    }
    if (!Number.isInteger(epoch) || epoch !== this.nextEpoch) {
      throw new EpochMismatchError(`expected epoch ${this.nextEpoch}, got ${epoch}`);
    }
    if (!Number.isFinite(loss)) {
      throw new NonFiniteValueError(`loss at epoch ${epoch} is not finite`);
    }
  }

  private runCli(args: string[]): string {
    const argv = ["-m", "deba", ...args];
    const proc = spawnSync(this.python, argv, { encoding: "utf-8" });
    if (proc.error) {
      throw new EngineError(`failed to launch ${this.python}: ${proc.error.message}`);
    }
    if (proc.status !== 0) {
      throw cliErrorFromExit(`deba ${args[0]}`, proc.status ?? -1, proc.stderr ?? "");
    }
    return proc.stdout ?? "";
  }

  private writeTrace(): void {
    if (this.mode === "raw") {
      const { text, sidecar } = serializeRawTrace(this.rawRows, this.producer, "gradients.bin");
      writeFileSync(join(this.dir, "gradients.bin"), sidecar);
      writeFileSync(this.tracePath, text);
    } else {
      writeFileSync(this.tracePath, serializePrecomputedTrace(this.precomputedRows, this.producer));
    }
  }

  private replayAndTail(): StepResult {
    this.writeTrace();
    this.runCli([
      "run",
      "--trace", this.tracePath,
      "--config", this.configPath,
      "--out", this.logPath,
      "--initial-batch", String(this.initialBatch),
      "--quiet",
    ]);
    this.lastLogBytes = readFileSync(this.logPath);
    this.lastLog = parseDecisionLog(this.lastLogBytes.toString("utf-8"));
    const tail = this.lastLog.at(-1);
    if (!tail) throw new EngineError("engine produced an empty decision log");
    return { decision: tail.decision, reason: tail.reason, batch: tail.batchAfter };
  }

  /** Advance one epoch with host-computed gradient summaries. */
  step(epoch: number, loss: number, gradNorm: number, gradVariance: number): StepResult {
    this.checkStepPreconditions(epoch, loss, "precomputed");
    if (!Number.isFinite(gradNorm) || !Number.isFinite(gradVariance)) {
      throw new NonFiniteValueError(`gradient stats at epoch ${epoch} are not finite`);
    }
    if (gradNorm < 0 || gradVariance < 0) {
      throw new NonFiniteValueError(`gradient stats at epoch ${epoch} must be >= 0`);
    }
    this.mode = "precomputed";
    this.precomputedRows.push({ epoch, loss, gradNorm, gradVariance });
    try {
      return this.replayAndTail();
    } catch (error) {
      this.precomputedRows.pop(); // state unchanged on failure
      throw error;
    }
  }

  /** Advance one epoch with a flattened gradient; the engine computes the stats. */
  stepRaw(epoch: number, loss: number, gradient: Float64Array | number[]): StepResult {
    this.checkStepPreconditions(epoch, loss, "raw");
    const buffer = gradient instanceof Float64Array ? gradient : Float64Array.from(gradient);
    if (buffer.length < 2) {
      throw new DegenerateGradientError(`gradient needs >= 2 components, got ${buffer.length}`);
    }
    for (const value of buffer) {
      if (!Number.isFinite(value)) {
        throw new DegenerateGradientError("gradient contains non-finite components");
      }
    }
    this.mode = "raw";
    this.rawRows.push({ epoch, loss, gradient: buffer });
    try {
      return this.replayAndTail();
    } catch (error) {
      this.rawRows.pop();
      throw error;
    }
  }

  /** Thresholds derived from the epochs observed so far (fixed-batch runs). */
  calibrate(): CalibrationResult {
    this.assertOpen();
    this.writeTrace();
    const outPath = join(this.dir, "calibrated.config");
    this.runCli(["calibrate", "--trace", this.tracePath, "--out", outPath, "--quiet"]);
    const entries = parseConfig(readFileSync(outPath, "utf-8"));
    return {
      thetaStab: Number(entries["theta_stab"]),
      thetaConf: Number(entries["theta_conf"]),
    };
  }

  /** Stability profile of the epochs observed so far. */
  profile(): ProfileReport {
    this.assertOpen();
    this.writeTrace();
    const outPath = join(this.dir, "stability.report");
    this.runCli(["profile", "--trace", this.tracePath, "--out", outPath, "--quiet"]);
    return parseProfileReport(readFileSync(outPath, "utf-8"));
  }

  /** Full decision log after the most recent step, one row per epoch. */
  decisionLog(): DecisionRow[] {
    this.assertOpen();
    return [...this.lastLog];
  }

  /** Exact bytes of the engine-written decision log from the last step. */
  decisionLogBytes(): Buffer {
    this.assertOpen();
    if (!this.lastLogBytes) throw new EngineError("no step has completed yet");
    return Buffer.from(this.lastLogBytes);
  }

  /** Engine version string, for compatibility checks. */
  version(): string {
    this.assertOpen();
    return this.runCli(["--version"]).trim().replace(/^deba\s+/, "");
  }

  close(): void {
    if (this.closed) return;
    this.closed = true;
    if (this.ownsDir) {
      rmSync(this.dir, { recursive: true, force: true });
    }
  }
}
