/**
 * In-process binding surface for host training loops.
 *
 * Tensors are exchanged as dense row-major float64 buffers in the same
 * (C, H, W) / (B, C, H, W) layout as the NPY file contract; results are
 * numerically equivalent to the primary CLI on the same bytes.  The
 * binding performs no autodiff bridging: it returns explicit gradient
 * buffers that the host applies itself.
 */

import { RunOptions, resolveN, withDefaults } from "./config";
import { buildChannelGraph } from "./graph";
import { MultiLevelResult, multiLevelLoss } from "./losses";
import { spectralEmbedding } from "./spectral";
import { FeatureMapView } from "./tensor";

export const VERSION = "0.1.0";

/** Versioned ABI string, shared with the primary component. */
export function crgDistillVersion(): string {
  return `crg-distill/${VERSION}`;
}

/**
 * Multi-level loss of a teacher/student pair of views.
 * Returns the weighted scalar plus the unweighted per-term triple.
 */
export function boundMultiLevelLoss(
  teacher: FeatureMapView,
  student: FeatureMapView,
  options?: Partial<RunOptions>
): MultiLevelResult {
  return multiLevelLoss(teacher, student, options);
}

export interface SpectrumResult {
  readonly eigenvalues: number[];
  /** C rows of N sign-canonicalized embedding entries. */
  readonly embedding: number[][];
  readonly degeneracyFlag: boolean;
}

/** Ascending Laplacian spectrum and C x N embedding of one view. */
export function boundSpectrum(view: FeatureMapView, options?: Partial<RunOptions>): SpectrumResult {
  const opts = withDefaults(options);
  const n = resolveN(opts.n, view.channels);
  const graph = buildChannelGraph(view);
  const emb = spectralEmbedding(graph.adjacency, view.channels, n, opts.eigenSelection);
  const rows: number[][] = [];
  for (let i = 0; i < view.channels; i++) {
    const row: number[] = [];
    for (let j = 0; j < n; j++) {
      row.push(emb.embedding[i * n + j]);
    }
    rows.push(row);
  }
  return {
    eigenvalues: Array.from(emb.eigenvalues),
    embedding: rows,
    degeneracyFlag: emb.degenerate,
  };
}

export * from "./attention";
export * from "./config";
export * from "./errors";
export * from "./eigen";
export * from "./graph";
export * from "./gradients";
export * from "./losses";
export * from "./npy";
export * from "./spectral";
export * from "./tensor";
