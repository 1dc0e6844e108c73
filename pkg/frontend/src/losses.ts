/**
 * The three alignment losses and their weighted combination:
 *
 *   vertex    1/(CHW) sum (F_T - F_S)^2 * M^s * M^c
 *   edge      1/C^2   sum (A_T - A_S)^2 * M^r
 *   spectral  1/(CN)  sum (E_T - E_S)^2     (or eigenvalue MSE variant)
 *
 * Disabled terms report 0 and are skipped; disabled masks are replaced by
 * all-ones.  Masks always derive from the teacher.
 */

import { attentionMasks, channelMask, relationMask, spatialMask } from "./attention";
import { RunOptions, resolveN, withDefaults } from "./config";
import { ShapeMismatchError } from "./errors";
import { ChannelGraph, buildChannelGraph } from "./graph";
import {
  SpectralEmbedding,
  degreeAndLaplacian,
  embed,
  spectralEmbedding,
} from "./spectral";
import { symmetricEigen } from "./eigen";
import { FeatureMapView } from "./tensor";

export interface LossTerms {
  vertex: number;
  edge: number;
  spectral: number;
}

export interface MultiLevelResult {
  /** alpha*vertex + beta*edge + gamma*spectral */
  loss: number;
  terms: LossTerms;
}

export function vertexLoss(
  teacher: FeatureMapView,
  student: FeatureMapView,
  spatial: Float64Array,
  channel: Float64Array,
  useSpatial: boolean,
  useChannel: boolean
): number {
  if (!teacher.sameShape(student)) {
    throw new ShapeMismatchError(
      `teacher (${teacher.shape.join(", ")}) vs student (${student.shape.join(", ")})`
    );
  }
  const c = teacher.channels;
  const hw = teacher.height * teacher.width;
  let acc = 0;
  for (let k = 0; k < c; k++) {
    const wc = useChannel ? channel[k] : 1.0;
    for (let p = 0; p < hw; p++) {
      const d = teacher.data[k * hw + p] - student.data[k * hw + p];
      const ws = useSpatial ? spatial[p] : 1.0;
      acc += d * d * ws * wc;
    }
  }
  return acc / (c * hw);
}

export function edgeLoss(
  teacherAdj: Float64Array,
  studentAdj: Float64Array,
  relation: Float64Array,
  c: number,
  useRelation: boolean
): number {
  if (teacherAdj.length !== c * c || studentAdj.length !== c * c || relation.length !== c * c) {
    throw new ShapeMismatchError(`adjacencies/mask must all be ${c} x ${c}`);
  }
  let acc = 0;
  for (let i = 0; i < c * c; i++) {
    const d = teacherAdj[i] - studentAdj[i];
    acc += d * d * (useRelation ? relation[i] : 1.0);
  }
  return acc / (c * c);
}

export function spectralLoss(teacherEmb: SpectralEmbedding, studentEmb: SpectralEmbedding): number {
  const c = teacherEmb.eigenvalues.length;
  const n = teacherEmb.nSelected;
  if (studentEmb.eigenvalues.length !== c || studentEmb.nSelected !== n) {
    throw new ShapeMismatchError("embeddings differ in shape");
  }
  let acc = 0;
  for (let i = 0; i < c * n; i++) {
    const d = teacherEmb.embedding[i] - studentEmb.embedding[i];
    acc += d * d;
  }
  return acc / (c * n);
}

export function spectralValueLoss(teacherVals: Float64Array, studentVals: Float64Array): number {
  if (teacherVals.length !== studentVals.length) {
    throw new ShapeMismatchError(
      `eigenvalue vectors differ in length: ${teacherVals.length} vs ${studentVals.length}`
    );
  }
  const t = Float64Array.from(teacherVals).sort();
  const s = Float64Array.from(studentVals).sort();
  let acc = 0;
  for (let i = 0; i < t.length; i++) {
    const d = t[i] - s[i];
    acc += d * d;
  }
  return acc / t.length;
}

/** Full pipeline for one aligned teacher/student pair. */
export function multiLevelLoss(
  teacher: FeatureMapView,
  student: FeatureMapView,
  options?: Partial<RunOptions>
): MultiLevelResult {
  const opts = withDefaults(options);
  if (!teacher.sameShape(student)) {
    throw new ShapeMismatchError(
      `teacher (${teacher.shape.join(", ")}) vs student (${student.shape.join(", ")})`
    );
  }
  let vertex = 0;
  let edge = 0;
  let spectral = 0;
  let teacherGraph: ChannelGraph | null = null;
  let studentGraph: ChannelGraph | null = null;
  if (opts.useEdge || opts.useSpectral) {
    teacherGraph = buildChannelGraph(teacher);
    studentGraph = buildChannelGraph(student);
  }
  if (opts.useVertex) {
    vertex = vertexLoss(
      teacher,
      student,
      spatialMask(teacher),
      channelMask(teacher),
      opts.useSpatialMask,
      opts.useChannelMask
    );
  }
  if (opts.useEdge && teacherGraph && studentGraph) {
    const mask = relationMask(teacherGraph.adjacency, teacher.channels, opts.relationSoftmax);
    edge = edgeLoss(
      teacherGraph.adjacency,
      studentGraph.adjacency,
      mask,
      teacher.channels,
      opts.useRelationMask
    );
  }
  if (opts.useSpectral && teacherGraph && studentGraph) {
    if (opts.spectralVariant === "vector") {
      const n = resolveN(opts.n, teacher.channels);
      const embT = spectralEmbedding(teacherGraph.adjacency, teacher.channels, n, opts.eigenSelection);
      const embS = spectralEmbedding(studentGraph.adjacency, student.channels, n, opts.eigenSelection);
      spectral = spectralLoss(embT, embS);
    } else {
      const valsT = symmetricEigen(
        degreeAndLaplacian(teacherGraph.adjacency, teacher.channels).laplacian,
        teacher.channels
      ).values;
      const valsS = symmetricEigen(
        degreeAndLaplacian(studentGraph.adjacency, student.channels).laplacian,
        student.channels
      ).values;
      spectral = spectralValueLoss(valsT, valsS);
    }
  }
  return {
    loss: opts.alpha * vertex + opts.beta * edge + opts.gamma * spectral,
    terms: { vertex, edge, spectral },
  };
}
