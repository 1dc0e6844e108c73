import { describe, expect, it } from "vitest";

import {
  FeatureMapView,
  ShapeMismatchError,
  boundGradients,
  boundMultiLevelLoss,
  boundSpectrum,
  buildChannelGraph,
  channelMask,
  crgDistillVersion,
  degreeAndLaplacian,
  encodeNpy,
  parseNpy,
  spatialMask,
  symmetricEigen,
  viewsFromNpy,
} from "../src/index";
import { MalformedHeaderError, NonFiniteDataError, PayloadLengthError } from "../src/errors";

function view(shape: [number, number, number], values: number[]): FeatureMapView {
  return new FeatureMapView(shape, Float64Array.from(values));
}

describe("npy", () => {
  it("round-trips float64 rank-3 arrays", () => {
    const data = Float64Array.from([1.5, -2.25, 3.0, 0.125, 7.0, -0.5]);
    const bytes = encodeNpy([1, 2, 3], data, "float64");
    const parsed = parseNpy(bytes);
    expect(parsed.shape).toEqual([1, 2, 3]);
    expect(Array.from(parsed.data)).toEqual(Array.from(data));
    expect(parsed.precision).toBe("float64");
  });

  it("round-trips float32 at stored precision", () => {
    const data = Float64Array.from([0.1, 0.2, 0.3, 0.4]);
    const parsed = parseNpy(encodeNpy([1, 2, 2], data, "float32"));
    for (let i = 0; i < data.length; i++) {
      expect(parsed.data[i]).toBe(Math.fround(data[i]));
    }
  });

  it("rejects bad magic, payload mismatch, and non-finite data", () => {
    expect(() => parseNpy(Uint8Array.from([1, 2, 3]))).toThrow(MalformedHeaderError);
    const good = encodeNpy([1, 1, 2], Float64Array.from([1, 2]), "float64");
    expect(() => parseNpy(good.subarray(0, good.length - 8))).toThrow(PayloadLengthError);
    const withNan = encodeNpy([1, 1, 2], Float64Array.from([1, NaN]), "float64");
    expect(() => parseNpy(withNan)).toThrow(NonFiniteDataError);
  });
});

describe("eigen", () => {
  it("solves the hand 2x2 Laplacian", () => {
    const { values, vectors } = symmetricEigen(Float64Array.from([0.5, -0.5, -0.5, 0.5]), 2);
    expect(values[0]).toBeCloseTo(0, 12);
    expect(values[1]).toBeCloseTo(1, 12);
    const inv = 1 / Math.sqrt(2);
    // column 0 ~ [1,1]/sqrt(2) up to sign, column 1 ~ [1,-1]/sqrt(2)
    expect(Math.abs(vectors[0] * inv + vectors[2] * inv)).toBeCloseTo(1, 12);
    expect(Math.abs(vectors[1] * inv - vectors[3] * inv)).toBeCloseTo(1, 12);
  });

  it("reconstructs random symmetric matrices to 1e-12", () => {
    let state = 12345;
    const rand = () => {
      // xorshift, deterministic across runs
      state ^= state << 13;
      state ^= state >>> 17;
      state ^= state << 5;
      return ((state >>> 0) / 0xffffffff) * 2 - 1;
    };
    for (let trial = 0; trial < 20; trial++) {
      const n = 2 + (trial % 7);
      const m = new Float64Array(n * n);
      for (let i = 0; i < n; i++) {
        for (let j = i; j < n; j++) {
          const x = rand();
          m[i * n + j] = x;
          m[j * n + i] = x;
        }
      }
      const { values, vectors } = symmetricEigen(m, n);
      for (let i = 0; i < n; i++) {
        for (let j = 0; j < n; j++) {
          let acc = 0;
          for (let a = 0; a < n; a++) {
            acc += vectors[i * n + a] * values[a] * vectors[j * n + a];
          }
          expect(Math.abs(acc - m[i * n + j])).toBeLessThan(1e-12);
        }
      }
      for (let a = 1; a < n; a++) {
        expect(values[a]).toBeGreaterThanOrEqual(values[a - 1]);
      }
    }
  });
});

describe("hand oracles", () => {
  it("cosine of [1,0] and [1,1] is 0.70711", () => {
    const graph = buildChannelGraph(view([2, 1, 2], [1, 0, 1, 1]));
    expect(graph.adjacency[1]).toBeCloseTo(Math.SQRT1_2, 10);
  });

  it("constant maps give unit attention masks", () => {
    const m = view([2, 2, 2], [3, 3, 3, 3, 3, 3, 3, 3]);
    for (const value of spatialMask(m)) expect(value).toBeCloseTo(1, 12);
    for (const value of channelMask(m)) expect(value).toBeCloseTo(1, 12);
  });

  it("edge loss of the hand pair is 0.125 and spectral is 0.29289", () => {
    const teacher = view([2, 1, 2], [1, 0, 1, 0]);
    const student = view([2, 1, 2], [1, 0, 0, 1]);
    const res = boundMultiLevelLoss(teacher, student);
    expect(res.terms.edge).toBeCloseTo(0.125, 9);
    expect(res.terms.spectral).toBeCloseTo(0.29289, 4);
    expect(res.loss).toBeCloseTo(res.terms.vertex + res.terms.edge + res.terms.spectral, 12);
  });

  it("singleton vertex loss is 4", () => {
    const res = boundMultiLevelLoss(view([1, 1, 1], [2]), view([1, 1, 1], [0]), {
      useEdge: false,
      useSpectral: false,
    });
    expect(res.terms.vertex).toBeCloseTo(4, 12);
  });
});

describe("binding surface", () => {
  it("exposes the versioned ABI string", () => {
    expect(crgDistillVersion()).toBe("crg-distill/0.1.0");
  });

  it("identical views give zero loss and zero gradients", () => {
    const data = [0.9, 0.1, 0.4, 1.2, 0.3, 0.8, 1.1, 0.2, 0.5, 0.6, 1.4, 0.7];
    const a = view([3, 2, 2], data);
    const b = view([3, 2, 2], [...data]);
    const res = boundMultiLevelLoss(a, b);
    expect(res.loss).toBe(0);
    expect(res.terms).toEqual({ vertex: 0, edge: 0, spectral: 0 });
    const grads = boundGradients(a, b);
    expect(grads.shape).toEqual([3, 2, 2]);
    for (const value of grads.combined) expect(Math.abs(value)).toBeLessThanOrEqual(1e-10);
  });

  it("mismatched shapes raise a typed shape error", () => {
    const a = view([1, 1, 2], [1, 2]);
    const b = view([2, 1, 1], [1, 2]);
    expect(() => boundMultiLevelLoss(a, b)).toThrow(ShapeMismatchError);
  });

  it("gradient buffers match the student shape", () => {
    const a = view([3, 1, 2], [1, 0.5, 0.2, 1.1, 0.7, 0.9]);
    const b = view([3, 1, 2], [0.8, 0.6, 0.3, 1.0, 0.5, 1.2]);
    const grads = boundGradients(a, b);
    expect(grads.vertex.length).toBe(6);
    expect(grads.edge.length).toBe(6);
    expect(grads.combined.length).toBe(6);
  });

  it("degenerate student spectrum omits the spectral term with a warning", () => {
    const teacher = view([3, 1, 2], [1, 0.2, 0.4, 1.3, 0.9, 0.1]);
    const student = view([3, 1, 2], [1, 2, 1, 2, 1, 2]); // identical channels
    const grads = boundGradients(teacher, student);
    expect(grads.spectral).toBeNull();
    expect(grads.warning).toMatch(/gap/);
  });

  it("spectrum of identical channels is {0, 1, 1} and flagged degenerate", () => {
    const m = view([3, 1, 2], [1, 2, 1, 2, 1, 2]);
    const spec = boundSpectrum(m, { n: 1 });
    expect(spec.eigenvalues[0]).toBeCloseTo(0, 8);
    expect(spec.eigenvalues[1]).toBeCloseTo(1, 8);
    expect(spec.eigenvalues[2]).toBeCloseTo(1, 8);
    expect(spec.degeneracyFlag).toBe(true);
  });
});

describe("laplacian", () => {
  it("matches the 2x2 hand case", () => {
    const pair = degreeAndLaplacian(Float64Array.from([1, 1, 1, 1]), 2);
    expect(Array.from(pair.degree)).toEqual([2, 2]);
    const expected = [0.5, -0.5, -0.5, 0.5];
    for (let i = 0; i < 4; i++) {
      expect(Math.abs(pair.laplacian[i] - expected[i])).toBeLessThan(1e-15);
    }
  });
});

describe("views", () => {
  it("splits rank-4 arrays into per-sample views", () => {
    const data = new Float64Array(2 * 2 * 1 * 2).map((_, i) => i);
    const views = viewsFromNpy({ shape: [2, 2, 1, 2], data, precision: "float64" });
    expect(views.length).toBe(2);
    expect(Array.from(views[1].channel(0))).toEqual([4, 5]);
  });
});
