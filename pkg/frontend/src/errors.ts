/**
 * Error bridge: every failure carries the primary component's error code
 * (e.g. "ShapeMismatch") plus a human-readable message, as a standard
 * JavaScript Error subclass.
 */

export class CrgDistillError extends Error {
  constructor(readonly code: string, message: string) {
    super(message);
    this.name = `CrgDistillError(${code})`;
  }
}

export class MalformedHeaderError extends CrgDistillError {
  constructor(message: string) {
    super("MalformedHeader", message);
  }
}

export class UnsupportedDtypeError extends CrgDistillError {
  constructor(message: string) {
    super("UnsupportedDtype", message);
  }
}

export class RankError extends CrgDistillError {
  constructor(message: string) {
    super("RankError", message);
  }
}

export class PayloadLengthError extends CrgDistillError {
  constructor(message: string) {
    super("PayloadLengthError", message);
  }
}

export class NonFiniteDataError extends CrgDistillError {
  constructor(readonly flatIndex: number) {
    super("NonFiniteData", `non-finite value at flat index ${flatIndex}`);
  }
}

export class ShapeMismatchError extends CrgDistillError {
  constructor(message: string) {
    super("ShapeMismatch", message);
  }
}

export class DimensionMismatchError extends CrgDistillError {
  constructor(message: string) {
    super("DimensionMismatch", message);
  }
}

export class NonPositiveDegreeError extends CrgDistillError {
  constructor(message: string) {
    super("NonPositiveDegree", message);
  }
}

export class BadNError extends CrgDistillError {
  constructor(message: string) {
    super("BadN", message);
  }
}

export class DegenerateChannelError extends CrgDistillError {
  constructor(message: string) {
    super("DegenerateChannel", message);
  }
}

export class DegenerateSpectrumError extends CrgDistillError {
  constructor(message: string) {
    super("DegenerateSpectrum", message);
  }
}

export class ConvergenceFailureError extends CrgDistillError {
  constructor(message: string) {
    super("ConvergenceFailure", message);
  }
}
