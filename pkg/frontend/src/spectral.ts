/**
 * Degree matrix, symmetric normalized Laplacian L = I - D^{-1/2} A D^{-1/2},
 * and the sign-canonicalized spectral embedding of the N selected
 * eigenvectors ("largest" selection by default, "smallest" for ablation).
 * Ordering, tie-breaks, and the sign rule (largest-|entry| positive, ties
 * to the lowest row index) mirror the primary component exactly.
 */

import { BadNError, NonPositiveDegreeError } from "./errors";
import { EigenDecomposition, symmetricEigen } from "./eigen";

export type EigenSelection = "largest" | "smallest";

export const DEGREE_THRESHOLD = 1e-12;
export const DEGENERACY_GAP = 1e-6;

export interface LaplacianPair {
  readonly degree: Float64Array;
  readonly laplacian: Float64Array; // row-major C x C
}

export interface SpectralEmbedding {
  readonly eigenvalues: Float64Array; // ascending
  readonly basis: Float64Array; // row-major C x C, columns = eigenvectors
  readonly embedding: Float64Array; // row-major C x N
  readonly nSelected: number;
  readonly degenerate: boolean;
  readonly selectedIndices: number[];
  readonly columnSigns: number[];
}

export function degreeAndLaplacian(adjacency: Float64Array, c: number): LaplacianPair {
  const degree = new Float64Array(c);
  for (let i = 0; i < c; i++) {
    let acc = 0;
    for (let j = 0; j < c; j++) {
      acc += adjacency[i * c + j];
    }
    degree[i] = acc;
  }
  for (let i = 0; i < c; i++) {
    if (degree[i] <= DEGREE_THRESHOLD) {
      throw new NonPositiveDegreeError(`row ${i} has degree ${degree[i].toExponential(3)}`);
    }
  }
  const invSqrt = new Float64Array(c);
  for (let i = 0; i < c; i++) {
    invSqrt[i] = 1 / Math.sqrt(degree[i]);
  }
  const laplacian = new Float64Array(c * c);
  for (let i = 0; i < c; i++) {
    for (let j = 0; j < c; j++) {
      const scaled = adjacency[i * c + j] * (invSqrt[i] * invSqrt[j]);
      laplacian[i * c + j] = (i === j ? 1 : 0) - scaled;
    }
  }
  return { degree, laplacian };
}

export function selectIndices(values: Float64Array, n: number, selection: EigenSelection): number[] {
  const c = values.length;
  if (!(n >= 1 && n <= c)) {
    throw new BadNError(`n must be in [1, ${c}], got ${n}`);
  }
  const order = Array.from({ length: c }, (_, i) => i);
  if (selection === "largest") {
    order.sort((a, b) => values[b] - values[a] || a - b);
  } else {
    order.sort((a, b) => values[a] - values[b] || a - b);
  }
  return order.slice(0, n);
}

export function canonicalSign(basis: Float64Array, c: number, column: number): number {
  let pivot = 0;
  let best = -1;
  for (let i = 0; i < c; i++) {
    const mag = Math.abs(basis[i * c + column]);
    if (mag > best) {
      best = mag;
      pivot = i;
    }
  }
  return basis[pivot * c + column] < 0 ? -1 : 1;
}

export function embed(
  decomposition: EigenDecomposition,
  n: number,
  selection: EigenSelection = "largest"
): SpectralEmbedding {
  const { values, vectors } = decomposition;
  const c = values.length;
  const idx = selectIndices(values, n, selection);
  const signs = idx.map((i) => canonicalSign(vectors, c, i));
  const embedding = new Float64Array(c * n);
  for (let j = 0; j < n; j++) {
    for (let i = 0; i < c; i++) {
      embedding[i * n + j] = signs[j] * vectors[i * c + idx[j]];
    }
  }
  let degenerate = false;
  if (n < c) {
    const order = selectIndices(values, c, selection);
    degenerate = Math.abs(values[order[n - 1]] - values[order[n]]) < DEGENERACY_GAP;
  }
  return {
    eigenvalues: values,
    basis: vectors,
    embedding,
    nSelected: n,
    degenerate,
    selectedIndices: idx,
    columnSigns: signs,
  };
}

export function spectralEmbedding(
  adjacency: Float64Array,
  c: number,
  n: number,
  selection: EigenSelection = "largest"
): SpectralEmbedding {
  const pair = degreeAndLaplacian(adjacency, c);
  return embed(symmetricEigen(pair.laplacian, c), n, selection);
}

export function defaultN(channels: number): number {
  return Math.max(Math.floor(channels / 2), 1);
}
