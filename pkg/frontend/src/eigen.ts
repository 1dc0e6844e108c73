/**
 * Dense symmetric eigendecomposition via cyclic Jacobi rotations.
 *
 * The matrices here are tiny (C <= a few dozen), where Jacobi converges
 * in a handful of sweeps to machine precision and is fully deterministic.
 * Eigenvalues are returned ascending with a stable tie order; ``vectors``
 * is row-major with column j holding the eigenvector of values[j], the
 * same convention as a LAPACK-backed solver.
 */

import { ConvergenceFailureError } from "./errors";

export interface EigenDecomposition {
  readonly values: Float64Array;
  /** Row-major C x C; vectors[i*C + j] is component i of eigenvector j. */
  readonly vectors: Float64Array;
}

const MAX_SWEEPS = 64;

export function symmetricEigen(matrix: Float64Array, n: number): EigenDecomposition {
  const a = new Float64Array(n * n);
  // symmetrize the input so roundoff-level asymmetry is tolerated
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      a[i * n + j] = 0.5 * (matrix[i * n + j] + matrix[j * n + i]);
    }
  }
  const v = new Float64Array(n * n);
  for (let i = 0; i < n; i++) {
    v[i * n + i] = 1.0;
  }
  if (n === 1) {
    return sorted(a, v, 1);
  }

  let scale = 0;
  for (let i = 0; i < n * n; i++) {
    scale = Math.max(scale, Math.abs(a[i]));
  }
  if (scale === 0) {
    return sorted(a, v, n);
  }
  const tol = Number.EPSILON * scale;

  for (let sweep = 0; sweep < MAX_SWEEPS; sweep++) {
    let off = 0;
    for (let p = 0; p < n; p++) {
      for (let q = p + 1; q < n; q++) {
        off = Math.max(off, Math.abs(a[p * n + q]));
      }
    }
    if (off <= tol) {
      return sorted(a, v, n);
    }
    for (let p = 0; p < n - 1; p++) {
      for (let q = p + 1; q < n; q++) {
        const apq = a[p * n + q];
        if (Math.abs(apq) <= tol * 1e-3) {
          continue;
        }
        const app = a[p * n + p];
        const aqq = a[q * n + q];
        const theta = (aqq - app) / (2 * apq);
        const t =
          Math.sign(theta) === 0
            ? 1.0
            : Math.sign(theta) / (Math.abs(theta) + Math.sqrt(theta * theta + 1));
        const c = 1 / Math.sqrt(t * t + 1);
        const s = t * c;
        const tau = s / (1 + c);

        a[p * n + p] = app - t * apq;
        a[q * n + q] = aqq + t * apq;
        a[p * n + q] = 0;
        a[q * n + p] = 0;
        for (let i = 0; i < n; i++) {
          if (i !== p && i !== q) {
            const aip = a[i * n + p];
            const aiq = a[i * n + q];
            a[i * n + p] = aip - s * (aiq + tau * aip);
            a[i * n + q] = aiq + s * (aip - tau * aiq);
            a[p * n + i] = a[i * n + p];
            a[q * n + i] = a[i * n + q];
          }
        }
        for (let i = 0; i < n; i++) {
          const vip = v[i * n + p];
          const viq = v[i * n + q];
          v[i * n + p] = vip - s * (viq + tau * vip);
          v[i * n + q] = viq + s * (vip - tau * viq);
        }
      }
    }
  }
  throw new ConvergenceFailureError(`Jacobi did not converge in ${MAX_SWEEPS} sweeps`);
}

function sorted(a: Float64Array, v: Float64Array, n: number): EigenDecomposition {
  const order = Array.from({ length: n }, (_, i) => i);
  order.sort((x, y) => a[x * n + x] - a[y * n + y] || x - y);
  const values = new Float64Array(n);
  const vectors = new Float64Array(n * n);
  for (let j = 0; j < n; j++) {
    const src = order[j];
    values[j] = a[src * n + src];
    for (let i = 0; i < n; i++) {
      vectors[i * n + j] = v[i * n + src];
    }
  }
  return { values, vectors };
}
