export { EngineHandle } from "./engine.js";
export type { CalibrationResult, EngineOptions, StepResult } from "./engine.js";
export {
  parseConfig,
  parseDecisionLog,
  parsePrecomputedTrace,
  parseProfileReport,
  serializeConfig,
  serializePrecomputedTrace,
  serializeRawTrace,
} from "./formats.js";
export type {
  DecisionKind,
  DecisionReason,
  DecisionRow,
  PrecomputedRow,
  ProfileReport,
  RawRow,
  SchedulerOptions,
} from "./formats.js";
export {
  BadArgumentsError,
  ClosedHandleError,
  CliError,
  DegenerateGradientError,
  EngineError,
  EpochMismatchError,
  FileFormatError,
  IoError,
  ModeMismatchError,
  NonFiniteValueError,
  ValidationError,
} from "./errors.js";
