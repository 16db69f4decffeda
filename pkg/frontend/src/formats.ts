/**
 * Readers and writers for the engine's text formats (trace, config,
 * decision log, profile report).
 *
 * Numbers are serialized with `String(x)`: the shortest decimal that
 * round-trips the IEEE double, so values survive the file boundary
 * bit-exactly in both directions.
 */

import { EngineError } from "./errors.js";

export type DecisionKind = "increase" | "rollback" | "hold";
export type DecisionReason =
  | "rule_increase"
  | "rule_rollback_confidence"
  | "rule_rollback_grad_spike"
  | "rule_hold"
  | "cooldown_hold"
  | "warmup_hold";

export interface DecisionRow {
  epoch: number;
  gradVariance: number;
  gradNorm: number;
  gradNormVariation: number;
  lossVariation: number;
  confidence: number;
  stableGradients: boolean;
  stableLoss: boolean;
  decision: DecisionKind;
  reason: DecisionReason;
  batchBefore: number;
  batchAfter: number;
}

export interface SchedulerOptions {
  thetaStab: number;
  thetaConf: number;
  alphaGrow?: number;
  alphaRoll?: number;
  bMin?: number;
  bMax?: number;
  cooldownEpochs?: number;
  windowLen?: number;
  statsMode?: "sliding_window" | "full_history";
  epsilon?: number;
}

export interface PrecomputedRow {
  epoch: number;
  loss: number;
  gradNorm: number;
  gradVariance: number;
}

export interface RawRow {
  epoch: number;
  loss: number;
  gradient: Float64Array;
}

const CONFIG_KEYS: Array<[keyof SchedulerOptions, string]> = [
  ["thetaStab", "theta_stab"],
  ["thetaConf", "theta_conf"],
  ["alphaGrow", "alpha_grow"],
  ["alphaRoll", "alpha_roll"],
  ["bMin", "b_min"],
  ["bMax", "b_max"],
  ["cooldownEpochs", "cooldown_epochs"],
  ["windowLen", "window_len"],
  ["statsMode", "stats_mode"],
  ["epsilon", "epsilon"],
];

export function serializeConfig(options: SchedulerOptions): string {
  const lines = ["deba-config v1"];
  for (const [field, key] of CONFIG_KEYS) {
    const value = options[field];
    if (value === undefined) continue;
    lines.push(`${key} = ${typeof value === "number" ? String(value) : value}`);
  }
  return lines.join("\n") + "\n";
}

export function parseConfig(text: string): Record<string, string> {
  const lines = text.split("\n");
  if (lines[0] !== "deba-config v1") {
    throw new EngineError(`unexpected config header: ${lines[0]}`);
  }
  const entries: Record<string, string> = {};
  for (const line of lines.slice(1)) {
    const stripped = line.trim();
    if (!stripped || stripped.startsWith("#")) continue;
    const eq = stripped.indexOf("=");
    if (eq < 0) throw new EngineError(`bad config line: ${line}`);
    entries[stripped.slice(0, eq).trim()] = stripped.slice(eq + 1).trim();
  }
  return entries;
}

export function serializePrecomputedTrace(rows: PrecomputedRow[], producer: string): string {
  const lines = [
    "deba-trace v1",
    `producer: ${producer}`,
    "stats: precomputed",
    "epoch\tloss\tgrad_norm\tgrad_variance",
  ];
  for (const row of rows) {
    lines.push(
      `${row.epoch}\t${String(row.loss)}\t${String(row.gradNorm)}\t${String(row.gradVariance)}`,
    );
  }
  return lines.join("\n") + "\n";
}

/** Raw-mode trace text; gradients go to a binary sidecar (see sidecarBytes). */
export function serializeRawTrace(
  rows: RawRow[],
  producer: string,
  sidecarName: string,
): { text: string; sidecar: Buffer } {
  const lines = [
    "deba-trace v1",
    `producer: ${producer}`,
    "stats: raw",
    `gradients: sidecar ${sidecarName}`,
    "epoch\tloss",
  ];
  let total = 0;
  for (const row of rows) total += 8 + 8 * row.gradient.length;
  const sidecar = Buffer.alloc(total);
  let offset = 0;
  for (const row of rows) {
    lines.push(`${row.epoch}\t${String(row.loss)}`);
    sidecar.writeBigUInt64LE(BigInt(row.gradient.length), offset);
    offset += 8;
    for (const value of row.gradient) {
      sidecar.writeDoubleLE(value, offset);
      offset += 8;
    }
  }
  return { text: lines.join("\n") + "\n", sidecar };
}

function parseNumber(field: string, context: string): number {
  const value = Number(field);
  if (field.trim() === "" || Number.isNaN(value)) {
    throw new EngineError(`bad number ${JSON.stringify(field)} in ${context}`);
  }
  return value;
}

function parseBool(field: string, context: string): boolean {
  if (field === "true") return true;
  if (field === "false") return false;
  throw new EngineError(`bad boolean ${JSON.stringify(field)} in ${context}`);
}

export function parsePrecomputedTrace(text: string): { producer: string; rows: PrecomputedRow[] } {
  const lines = text.split("\n");
  if (lines.at(-1) === "") lines.pop();
  if (lines[0] !== "deba-trace v1") {
    throw new EngineError(`unexpected trace header: ${lines[0]}`);
  }
  let producer = "";
  let start = 1;
  for (; start < lines.length; start++) {
    const line = lines[start]!;
    if (line.startsWith("epoch")) break;
    if (line.startsWith("producer: ")) producer = line.slice("producer: ".length);
    else if (line === "stats: precomputed") continue;
    else if (line.startsWith("stats: ")) {
      throw new EngineError("only precomputed traces can be parsed here");
    }
  }
  const rows: PrecomputedRow[] = [];
  for (const line of lines.slice(start + 1)) {
    const fields = line.split("\t");
    if (fields.length !== 4) throw new EngineError(`bad trace row: ${line}`);
    rows.push({
      epoch: parseNumber(fields[0]!, "trace"),
      loss: parseNumber(fields[1]!, "trace"),
      gradNorm: parseNumber(fields[2]!, "trace"),
      gradVariance: parseNumber(fields[3]!, "trace"),
    });
  }
  return { producer, rows };
}

export function parseDecisionLog(text: string): DecisionRow[] {
  const lines = text.split("\n");
  if (lines.at(-1) === "") lines.pop();
  if (lines[0] !== "deba-decision-log v1") {
    throw new EngineError(`unexpected decision log header: ${lines[0]}`);
  }
  const rows: DecisionRow[] = [];
  for (const line of lines.slice(2)) {
    const f = line.split("\t");
    if (f.length !== 12) throw new EngineError(`bad decision log row: ${line}`);
    rows.push({
      epoch: parseNumber(f[0]!, "log"),
      gradVariance: parseNumber(f[1]!, "log"),
      gradNorm: parseNumber(f[2]!, "log"),
      gradNormVariation: parseNumber(f[3]!, "log"),
      lossVariation: parseNumber(f[4]!, "log"),
      confidence: parseNumber(f[5]!, "log"),
      stableGradients: parseBool(f[6]!, "log"),
      stableLoss: parseBool(f[7]!, "log"),
      decision: f[8] as DecisionKind,
      reason: f[9] as DecisionReason,
      batchBefore: parseNumber(f[10]!, "log"),
      batchAfter: parseNumber(f[11]!, "log"),
    });
  }
  return rows;
}

export interface ProfileReport {
  nSeeds: number;
  muS: number;
  sigmaS: number;
  taxonomy: string;
  traces: Array<{
    nEpochs: number;
    stabilityScore: number;
    cvGradVariance: number;
    meanGradNormVariation: number;
    meanLossVariation: number;
  }>;
}

export function parseProfileReport(text: string): ProfileReport {
  const lines = text.split("\n");
  if (lines[0] !== "deba-profile v1") {
    throw new EngineError(`unexpected profile header: ${lines[0]}`);
  }
  const flat: Record<string, string> = {};
  for (const line of lines.slice(1)) {
    if (!line.trim()) continue;
    const eq = line.indexOf(" = ");
    if (eq < 0) throw new EngineError(`bad profile line: ${line}`);
    flat[line.slice(0, eq)] = line.slice(eq + 3);
  }
  const nSeeds = parseNumber(flat["n_seeds"] ?? "", "profile");
  const traces = [];
  for (let i = 0; i < nSeeds; i++) {
    traces.push({
      nEpochs: parseNumber(flat[`trace_${i}.n_epochs`] ?? "", "profile"),
      stabilityScore: parseNumber(flat[`trace_${i}.stability_score`] ?? "", "profile"),
      cvGradVariance: parseNumber(flat[`trace_${i}.cv_grad_variance`] ?? "", "profile"),
      meanGradNormVariation: parseNumber(
        flat[`trace_${i}.mean_grad_norm_variation`] ?? "",
        "profile",
      ),
      meanLossVariation: parseNumber(flat[`trace_${i}.mean_loss_variation`] ?? "", "profile"),
    });
  }
  return {
    nSeeds,
    muS: parseNumber(flat["mu_s"] ?? "", "profile"),
    sigmaS: parseNumber(flat["sigma_s"] ?? "", "profile"),
    taxonomy: flat["taxonomy"] ?? "",
    traces,
  };
}
