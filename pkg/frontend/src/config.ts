/**
 * Binding run options, mirroring the primary component's configuration
 * surface.  ``n`` is an absolute eigenvector count (integer >= 1) or a
 * fraction of the channel count (0 < n < 1, floored to at least 1).
 */

import { BadNError } from "./errors";
import { RelationSoftmax } from "./attention";
import { EigenSelection } from "./spectral";

export type SpectralVariant = "vector" | "value";

export interface RunOptions {
  alpha: number;
  beta: number;
  gamma: number;
  n: number;
  useSpatialMask: boolean;
  useChannelMask: boolean;
  useRelationMask: boolean;
  useVertex: boolean;
  useEdge: boolean;
  useSpectral: boolean;
  relationSoftmax: RelationSoftmax;
  eigenSelection: EigenSelection;
  spectralVariant: SpectralVariant;
}

export const DEFAULT_OPTIONS: RunOptions = {
  alpha: 1.0,
  beta: 1.0,
  gamma: 1.0,
  n: 0.5,
  useSpatialMask: true,
  useChannelMask: true,
  useRelationMask: true,
  useVertex: true,
  useEdge: true,
  useSpectral: true,
  relationSoftmax: "global",
  eigenSelection: "largest",
  spectralVariant: "vector",
};

export function withDefaults(options?: Partial<RunOptions>): RunOptions {
  return { ...DEFAULT_OPTIONS, ...(options ?? {}) };
}

export function resolveN(n: number, channels: number): number {
  if (Number.isInteger(n)) {
    if (n < 1) {
      throw new BadNError(`count n must be >= 1, got ${n}`);
    }
    return n;
  }
  if (!(n > 0 && n < 1)) {
    throw new BadNError(`fractional n must lie in (0, 1), got ${n}`);
  }
  return Math.max(1, Math.floor(n * channels));
}
