/**
 * Channel relational graph: each channel of a feature map is a vertex,
 * and the edge weight between two channels is the cosine similarity of
 * their flattened activations.  The adjacency is computed once per
 * unordered pair (upper triangle, mirrored), with a unit diagonal; a
 * zero-norm channel keeps its unit self-loop and zero edges elsewhere.
 */

import { FeatureMapView } from "./tensor";

export const ZERO_NORM_THRESHOLD = 1e-12;

export interface ChannelGraph {
  readonly channels: number;
  readonly dim: number; // H*W
  /** Row-normalized channel vectors (zero rows for zero-norm channels). */
  readonly unit: Float64Array;
  readonly norms: Float64Array;
  /** Symmetric C x C cosine adjacency, row-major. */
  readonly adjacency: Float64Array;
}

function dot(a: Float64Array, aOff: number, b: Float64Array, bOff: number, n: number): number {
  let acc = 0;
  for (let i = 0; i < n; i++) {
    acc += a[aOff + i] * b[bOff + i];
  }
  return acc;
}

export function buildChannelGraph(view: FeatureMapView): ChannelGraph {
  const c = view.channels;
  const dim = view.height * view.width;
  const norms = new Float64Array(c);
  const unit = new Float64Array(c * dim);
  for (let k = 0; k < c; k++) {
    const norm = Math.sqrt(dot(view.data, k * dim, view.data, k * dim, dim));
    norms[k] = norm;
    if (norm >= ZERO_NORM_THRESHOLD) {
      for (let i = 0; i < dim; i++) {
        unit[k * dim + i] = view.data[k * dim + i] / norm;
      }
    }
  }
  const adjacency = new Float64Array(c * c);
  for (let i = 0; i < c; i++) {
    adjacency[i * c + i] = 1.0;
    for (let j = i + 1; j < c; j++) {
      const value = dot(unit, i * dim, unit, j * dim, dim);
      adjacency[i * c + j] = value;
      adjacency[j * c + i] = value;
    }
  }
  return { channels: c, dim, unit, norms, adjacency };
}
