/** Error types surfaced by the engine handle. */

export class EngineError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** The handle was closed; no further operations are allowed. */
export class ClosedHandleError extends EngineError {}

/** A step arrived with an epoch other than the engine's expected next one. */
export class EpochMismatchError extends EngineError {}

/** A loss or gradient statistic is NaN or infinite. */
export class NonFiniteValueError extends EngineError {}

/** Gradient buffer too short or containing non-finite components. */
export class DegenerateGradientError extends EngineError {}

/** step() and stepRaw() cannot be mixed on one handle (one trace, one format). */
export class ModeMismatchError extends EngineError {}

/** The CLI rejected the invocation or its inputs. */
export class CliError extends EngineError {
  constructor(
    message: string,
    public readonly exitCode: number,
    public readonly stderr: string,
  ) {
    super(stderr.trim() ? `${message}: ${stderr.trim()}` : message);
  }
}

export class BadArgumentsError extends CliError {}
export class FileFormatError extends CliError {}
export class ValidationError extends CliError {}
export class IoError extends CliError {}

export function cliErrorFromExit(command: string, exitCode: number, stderr: string): CliError {
  const message = `${command} exited with code ${exitCode}`;
  switch (exitCode) {
    case 2:
      return new BadArgumentsError(message, exitCode, stderr);
    case 3:
      return new FileFormatError(message, exitCode, stderr);
    case 4:
      return new ValidationError(message, exitCode, stderr);
    case 5:
      return new IoError(message, exitCode, stderr);
    default:
      return new CliError(message, exitCode, stderr);
  }
}
