/**
 * Analytic gradients of the three losses with respect to the student
 * feature map, mirroring the primary component's derivations:
 *
 *  - vertex: elementwise, masks are teacher constants;
 *  - edge/spectral: chained through the cosine-similarity Jacobian
 *      dL/dv_k = sum_{j!=k} (Abar_kj + Abar_jk)(u_j - A_kj u_k) / ||v_k||;
 *  - spectral additionally backpropagates through the simple-spectrum
 *    eigenvector perturbation Z = U (F o (U^T Ubar)) U^T with
 *    F[b][a] = 1/(lambda_a - lambda_b), and through the Laplacian's
 *    degree dependence.  A selected eigenvalue closer than GAP_THRESHOLD
 *    to any other eigenvalue raises DegenerateSpectrum.
 */

import { RunOptions, resolveN, withDefaults } from "./config";
import {
  DegenerateChannelError,
  DegenerateSpectrumError,
  ShapeMismatchError,
} from "./errors";
import { attentionMasks } from "./attention";
import { ChannelGraph, ZERO_NORM_THRESHOLD, buildChannelGraph } from "./graph";
import {
  SpectralEmbedding,
  degreeAndLaplacian,
  embed,
  spectralEmbedding,
} from "./spectral";
import { symmetricEigen } from "./eigen";
import { FeatureMapView } from "./tensor";

export const GAP_THRESHOLD = 1e-6;

export interface BoundGradients {
  readonly shape: [number, number, number];
  readonly vertex: Float64Array;
  readonly edge: Float64Array;
  /** Null when the student spectrum is degenerate and the term is omitted. */
  readonly spectral: Float64Array | null;
  /** alpha*vertex + beta*edge + gamma*spectral (omitted term contributes 0). */
  readonly combined: Float64Array;
  readonly warning: string | null;
}

function requireSameShape(teacher: FeatureMapView, student: FeatureMapView): void {
  if (!teacher.sameShape(student)) {
    throw new ShapeMismatchError(
      `teacher (${teacher.shape.join(", ")}) vs student (${student.shape.join(", ")})`
    );
  }
}

function requireNonDegenerateChannels(graph: ChannelGraph): void {
  for (let k = 0; k < graph.channels; k++) {
    if (graph.norms[k] < ZERO_NORM_THRESHOLD) {
      throw new DegenerateChannelError(
        `student channel ${k} has norm ${graph.norms[k].toExponential(3)}`
      );
    }
  }
}

/** Chain an adjacency cotangent through the cosine Jacobian to dL/dF. */
function adjacencyCotangentToFeatures(cotangent: Float64Array, graph: ChannelGraph): Float64Array {
  const c = graph.channels;
  const dim = graph.dim;
  const s = new Float64Array(c * c);
  for (let i = 0; i < c; i++) {
    for (let j = 0; j < c; j++) {
      s[i * c + j] = i === j ? 0 : cotangent[i * c + j] + cotangent[j * c + i];
    }
  }
  const out = new Float64Array(c * dim);
  for (let k = 0; k < c; k++) {
    let coeff = 0;
    for (let j = 0; j < c; j++) {
      coeff += s[k * c + j] * graph.adjacency[k * c + j];
    }
    for (let p = 0; p < dim; p++) {
      let acc = 0;
      for (let j = 0; j < c; j++) {
        acc += s[k * c + j] * graph.unit[j * dim + p];
      }
      out[k * dim + p] = (acc - coeff * graph.unit[k * dim + p]) / graph.norms[k];
    }
  }
  return out;
}

export function gradVertex(
  teacher: FeatureMapView,
  student: FeatureMapView,
  spatial: Float64Array,
  channel: Float64Array,
  useSpatial: boolean,
  useChannel: boolean
): Float64Array {
  requireSameShape(teacher, student);
  const c = teacher.channels;
  const hw = teacher.height * teacher.width;
  const out = new Float64Array(c * hw);
  const scale = -2.0 / (c * hw);
  for (let k = 0; k < c; k++) {
    const wc = useChannel ? channel[k] : 1.0;
    for (let p = 0; p < hw; p++) {
      const ws = useSpatial ? spatial[p] : 1.0;
      out[k * hw + p] = scale * (teacher.data[k * hw + p] - student.data[k * hw + p]) * ws * wc;
    }
  }
  return out;
}

export function gradEdge(
  teacherAdj: Float64Array,
  student: FeatureMapView,
  relation: Float64Array,
  useRelation: boolean
): Float64Array {
  const graph = buildChannelGraph(student);
  requireNonDegenerateChannels(graph);
  const c = graph.channels;
  if (teacherAdj.length !== c * c) {
    throw new ShapeMismatchError(`teacher adjacency length ${teacherAdj.length}, expected ${c * c}`);
  }
  const cotangent = new Float64Array(c * c);
  const scale = 2.0 / (c * c);
  for (let i = 0; i < c * c; i++) {
    cotangent[i] = scale * (graph.adjacency[i] - teacherAdj[i]) * (useRelation ? relation[i] : 1.0);
  }
  return adjacencyCotangentToFeatures(cotangent, graph);
}

function checkSelectedGaps(values: Float64Array, selected: number[], threshold: number): void {
  for (const a of selected) {
    let gap = Infinity;
    for (let b = 0; b < values.length; b++) {
      if (b !== a) {
        gap = Math.min(gap, Math.abs(values[a] - values[b]));
      }
    }
    if (gap <= threshold) {
      throw new DegenerateSpectrumError(
        `eigenvalue ${values[a]} (index ${a}) has gap ${gap.toExponential(3)} <= ${threshold}`
      );
    }
  }
}

export function gradSpectral(
  teacherEmb: SpectralEmbedding,
  student: FeatureMapView,
  n: number,
  eigenSelection: "largest" | "smallest" = "largest",
  gapThreshold: number = GAP_THRESHOLD
): Float64Array {
  const graph = buildChannelGraph(student);
  requireNonDegenerateChannels(graph);
  const c = graph.channels;
  const pair = degreeAndLaplacian(graph.adjacency, c);
  const decomp = symmetricEigen(pair.laplacian, c);
  const embS = embed(decomp, n, eigenSelection);
  if (teacherEmb.eigenvalues.length !== c || teacherEmb.nSelected !== n) {
    throw new ShapeMismatchError("teacher embedding does not match the student's (C, N)");
  }
  checkSelectedGaps(embS.eigenvalues, embS.selectedIndices, gapThreshold);

  // dL/dE, routed back through sign canonicalization onto raw basis columns
  const basisCot = new Float64Array(c * c);
  const embScale = 2.0 / (c * n);
  for (let j = 0; j < n; j++) {
    const col = embS.selectedIndices[j];
    const sign = embS.columnSigns[j];
    for (let i = 0; i < c; i++) {
      basisCot[i * c + col] =
        sign * embScale * (embS.embedding[i * n + j] - teacherEmb.embedding[i * n + j]);
    }
  }

  // Z = U (F o (U^T Ubar)) U^T, columns restricted to the selected set
  const u = embS.basis;
  const k = new Float64Array(c * c);
  for (let b = 0; b < c; b++) {
    for (let a = 0; a < c; a++) {
      let acc = 0;
      for (let i = 0; i < c; i++) {
        acc += u[i * c + b] * basisCot[i * c + a];
      }
      k[b * c + a] = acc;
    }
  }
  const fk = new Float64Array(c * c);
  for (const a of embS.selectedIndices) {
    for (let b = 0; b < c; b++) {
      if (b !== a) {
        fk[b * c + a] = k[b * c + a] / (embS.eigenvalues[a] - embS.eigenvalues[b]);
      }
    }
  }
  const z = new Float64Array(c * c);
  {
    const tmp = new Float64Array(c * c); // U @ FK
    for (let i = 0; i < c; i++) {
      for (let a = 0; a < c; a++) {
        let acc = 0;
        for (let b = 0; b < c; b++) {
          acc += u[i * c + b] * fk[b * c + a];
        }
        tmp[i * c + a] = acc;
      }
    }
    for (let i = 0; i < c; i++) {
      for (let j = 0; j < c; j++) {
        let acc = 0;
        for (let a = 0; a < c; a++) {
          acc += tmp[i * c + a] * u[j * c + a];
        }
        z[i * c + j] = acc;
      }
    }
  }
  const adjCot = laplacianCotangentToAdjacency(z, graph.adjacency, pair.degree, c);
  return adjacencyCotangentToFeatures(adjCot, graph);
}

/**
 * dL/dA for L = I - D^{-1/2} A D^{-1/2} with D the row sums of A; the
 * degree dependence contributes a row-constant correction.
 */
function laplacianCotangentToAdjacency(
  z: Float64Array,
  adjacency: Float64Array,
  degree: Float64Array,
  c: number
): Float64Array {
  const s = new Float64Array(c);
  for (let i = 0; i < c; i++) {
    s[i] = 1 / Math.sqrt(degree[i]);
  }
  const out = new Float64Array(c * c);
  const r = new Float64Array(c);
  const col = new Float64Array(c);
  for (let i = 0; i < c; i++) {
    for (let j = 0; j < c; j++) {
      const zij = z[i * c + j];
      r[i] += zij * (adjacency[i * c + j] * s[j]);
      col[j] += zij * (s[i] * adjacency[i * c + j]);
    }
  }
  for (let i = 0; i < c; i++) {
    const correction = 0.5 * Math.pow(degree[i], -1.5) * (r[i] + col[i]);
    for (let j = 0; j < c; j++) {
      out[i * c + j] = -z[i * c + j] * (s[i] * s[j]) + correction;
    }
  }
  return out;
}

export function gradSpectralValues(teacherVals: Float64Array, student: FeatureMapView): Float64Array {
  const graph = buildChannelGraph(student);
  requireNonDegenerateChannels(graph);
  const c = graph.channels;
  const pair = degreeAndLaplacian(graph.adjacency, c);
  const decomp = symmetricEigen(pair.laplacian, c);
  if (teacherVals.length !== c) {
    throw new ShapeMismatchError(`teacher spectrum length ${teacherVals.length}, expected ${c}`);
  }
  const t = Float64Array.from(teacherVals).sort();
  const u = decomp.vectors;
  const z = new Float64Array(c * c);
  for (let a = 0; a < c; a++) {
    const cot = (2.0 / c) * (decomp.values[a] - t[a]);
    for (let i = 0; i < c; i++) {
      for (let j = 0; j < c; j++) {
        z[i * c + j] += cot * u[i * c + a] * u[j * c + a];
      }
    }
  }
  const adjCot = laplacianCotangentToAdjacency(z, graph.adjacency, pair.degree, c);
  return adjacencyCotangentToFeatures(adjCot, graph);
}

/** Weighted per-term gradient buffers for a host training loop. */
export function boundGradients(
  teacher: FeatureMapView,
  student: FeatureMapView,
  options?: Partial<RunOptions>
): BoundGradients {
  const opts = withDefaults(options);
  requireSameShape(teacher, student);
  const size = student.data.length;
  const teacherGraph = buildChannelGraph(teacher);
  const masks = attentionMasks(teacher, teacherGraph.adjacency, opts.relationSoftmax);

  const zero = () => new Float64Array(size);
  let vertex = zero();
  let edge = zero();
  let spectral: Float64Array | null = zero();
  let warning: string | null = null;

  if (opts.useVertex) {
    const g = gradVertex(teacher, student, masks.spatial, masks.channel, opts.useSpatialMask, opts.useChannelMask);
    for (let i = 0; i < size; i++) vertex[i] = opts.alpha * g[i];
  }
  if (opts.useEdge) {
    const g = gradEdge(teacherGraph.adjacency, student, masks.relation, opts.useRelationMask);
    for (let i = 0; i < size; i++) edge[i] = opts.beta * g[i];
  }
  if (opts.useSpectral) {
    try {
      let g: Float64Array;
      if (opts.spectralVariant === "vector") {
        const n = resolveN(opts.n, teacher.channels);
        const embT = spectralEmbedding(teacherGraph.adjacency, teacher.channels, n, opts.eigenSelection);
        g = gradSpectral(embT, student, n, opts.eigenSelection);
      } else {
        const valsT = symmetricEigen(
          degreeAndLaplacian(teacherGraph.adjacency, teacher.channels).laplacian,
          teacher.channels
        ).values;
        g = gradSpectralValues(valsT, student);
      }
      const weighted = zero();
      for (let i = 0; i < size; i++) weighted[i] = opts.gamma * g[i];
      spectral = weighted;
    } catch (err) {
      if (err instanceof DegenerateSpectrumError) {
        spectral = null;
        warning = err.message;
      } else {
        throw err;
      }
    }
  }

  const combined = zero();
  for (let i = 0; i < size; i++) {
    combined[i] = vertex[i] + edge[i] + (spectral ? spectral[i] : 0);
  }
  return { shape: student.shape, vertex, edge, spectral, combined, warning };
}
