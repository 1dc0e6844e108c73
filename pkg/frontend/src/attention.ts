/**
 * Teacher-derived attention masks (max-subtracted softmaxes):
 *   spatial  (H*W): H*W * softmax over positions of the channel mean of |F|
 *   channel  (C):   C   * softmax over channels of the spatial mean of |F|
 *   relation (C*C): softmax of |A|, jointly over all entries ("global")
 *                   or per row ("row").
 */

import { DimensionMismatchError } from "./errors";
import { FeatureMapView } from "./tensor";

export type RelationSoftmax = "global" | "row";

export interface AttentionMasks {
  readonly spatial: Float64Array; // length H*W
  readonly channel: Float64Array; // length C
  readonly relation: Float64Array; // length C*C
}

export function softmaxFlat(scores: Float64Array): Float64Array {
  let max = -Infinity;
  for (let i = 0; i < scores.length; i++) {
    if (scores[i] > max) max = scores[i];
  }
  const out = new Float64Array(scores.length);
  let sum = 0;
  for (let i = 0; i < scores.length; i++) {
    out[i] = Math.exp(scores[i] - max);
    sum += out[i];
  }
  for (let i = 0; i < scores.length; i++) {
    out[i] /= sum;
  }
  return out;
}

export function spatialMask(teacher: FeatureMapView): Float64Array {
  const hw = teacher.height * teacher.width;
  const scores = new Float64Array(hw);
  for (let k = 0; k < teacher.channels; k++) {
    for (let p = 0; p < hw; p++) {
      scores[p] += Math.abs(teacher.data[k * hw + p]);
    }
  }
  for (let p = 0; p < hw; p++) {
    scores[p] /= teacher.channels;
  }
  const mask = softmaxFlat(scores);
  for (let p = 0; p < hw; p++) {
    mask[p] *= hw;
  }
  return mask;
}

export function channelMask(teacher: FeatureMapView): Float64Array {
  const c = teacher.channels;
  const hw = teacher.height * teacher.width;
  const scores = new Float64Array(c);
  for (let k = 0; k < c; k++) {
    let acc = 0;
    for (let p = 0; p < hw; p++) {
      acc += Math.abs(teacher.data[k * hw + p]);
    }
    scores[k] = acc / hw;
  }
  const mask = softmaxFlat(scores);
  for (let k = 0; k < c; k++) {
    mask[k] *= c;
  }
  return mask;
}

export function relationMask(
  adjacency: Float64Array,
  channels: number,
  axis: RelationSoftmax = "global"
): Float64Array {
  if (adjacency.length !== channels * channels) {
    throw new DimensionMismatchError(
      `relation mask needs a square C x C matrix, got length ${adjacency.length} for C=${channels}`
    );
  }
  const scores = new Float64Array(adjacency.length);
  for (let i = 0; i < adjacency.length; i++) {
    scores[i] = Math.abs(adjacency[i]);
  }
  if (axis === "global") {
    return softmaxFlat(scores);
  }
  const out = new Float64Array(scores.length);
  for (let i = 0; i < channels; i++) {
    const row = softmaxFlat(scores.subarray(i * channels, (i + 1) * channels));
    out.set(row, i * channels);
  }
  return out;
}

export function attentionMasks(
  teacher: FeatureMapView,
  teacherAdjacency: Float64Array,
  relationSoftmax: RelationSoftmax = "global"
): AttentionMasks {
  return {
    spatial: spatialMask(teacher),
    channel: channelMask(teacher),
    relation: relationMask(teacherAdjacency, teacher.channels, relationSoftmax),
  };
}
