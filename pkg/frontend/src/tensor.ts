/**
 * Dense row-major tensor views over (C, H, W) feature maps, matching the
 * NPY contract byte for byte.  A view never owns a copy beyond what the
 * NPY parser documents; slicing a batch hands out subarray views.
 */

import { NonFiniteDataError, RankError } from "./errors";
import { NpyArray } from "./npy";

export class FeatureMapView {
  readonly channels: number;
  readonly height: number;
  readonly width: number;
  /** Row-major (C, H, W) float64 buffer of length C*H*W. */
  readonly data: Float64Array;

  constructor(shape: readonly number[], data: Float64Array) {
    if (shape.length !== 3) {
      throw new RankError(`feature map must be rank 3 (C, H, W), got rank ${shape.length}`);
    }
    const [c, h, w] = shape;
    if (c < 1 || h < 1 || w < 1) {
      throw new RankError(`feature map dimensions must be >= 1, got (${shape.join(", ")})`);
    }
    if (data.length !== c * h * w) {
      throw new RankError(`buffer length ${data.length} does not match shape (${shape.join(", ")})`);
    }
    for (let i = 0; i < data.length; i++) {
      if (!Number.isFinite(data[i])) {
        throw new NonFiniteDataError(i);
      }
    }
    this.channels = c;
    this.height = h;
    this.width = w;
    this.data = data;
  }

  get shape(): [number, number, number] {
    return [this.channels, this.height, this.width];
  }

  /** Flattened channel k as a zero-copy subarray of length H*W. */
  channel(k: number): Float64Array {
    const hw = this.height * this.width;
    return this.data.subarray(k * hw, (k + 1) * hw);
  }

  sameShape(other: FeatureMapView): boolean {
    return (
      this.channels === other.channels &&
      this.height === other.height &&
      this.width === other.width
    );
  }
}

/** A parsed NPY array as a batch of feature-map views (rank 3 -> one). */
export function viewsFromNpy(array: NpyArray): FeatureMapView[] {
  if (array.shape.length === 3) {
    return [new FeatureMapView(array.shape, array.data)];
  }
  if (array.shape.length === 4) {
    const [b, c, h, w] = array.shape;
    const size = c * h * w;
    const views: FeatureMapView[] = [];
    for (let i = 0; i < b; i++) {
      views.push(new FeatureMapView([c, h, w], array.data.subarray(i * size, (i + 1) * size)));
    }
    return views;
  }
  throw new RankError(`expected rank 3 or 4, got rank ${array.shape.length}`);
}
