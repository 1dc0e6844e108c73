"""Degree matrix, symmetric normalized Laplacian, and spectral embedding.

L = I - D^{-1/2} A D^{-1/2} with D_ii the i-th row sum of the adjacency.
The embedding keeps the eigenvectors of the N largest eigenvalues (a
``smallest`` selection exists for ablation), ordered by descending
eigenvalue with stable tie-breaks, each column sign-fixed so its
largest-magnitude entry is positive (magnitude ties resolve to the lowest
row index).  The sign convention makes teacher and student embeddings
comparable entrywise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BadN, ConvergenceFailure, NonPositiveDegree

DEGREE_THRESHOLD = 1e-12
DEGENERACY_GAP = 1e-6


@dataclass(frozen=True)
class LaplacianPair:
    degree: np.ndarray
    laplacian: np.ndarray


class EigenDecomposition(NamedTuple):
    values: np.ndarray   # ascending
    vectors: np.ndarray  # orthonormal columns, aligned with values


@dataclass(frozen=True)
class SpectralEmbedding:
    """Eigenvalues (ascending), full basis, and the selected C x N block.

    ``embedding`` columns are sign-canonicalized and ordered by the
    selection rule; ``selected_indices``/``column_signs`` record how they
    were taken from ``basis``.  ``degenerate`` flags a boundary eigenvalue
    gap below DEGENERACY_GAP, in which case the selected subspace is not
    well separated and analytic gradients must be refused downstream.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    embedding: np.ndarray
    n_selected: int
    degenerate: bool
    selected_indices: np.ndarray
    column_signs: np.ndarray


def degree_and_laplacian(adjacency: np.ndarray) -> LaplacianPair:
    """D_ii = sum_j A_ij and L = I - D^{-1/2} A D^{-1/2}.

    Raises NonPositiveDegree when a row sum is <= DEGREE_THRESHOLD, which
    signals a malformed adjacency (the cosine builder guarantees a unit
    diagonal, but external callers may not).
    """
    a = np.asarray(adjacency, dtype=np.float64)
    degree = a.sum(axis=1)
    if degree.min() <= DEGREE_THRESHOLD:
        i = int(np.argmin(degree))
        raise NonPositiveDegree(f"row {i} has degree {degree[i]:.3e}")
    inv_sqrt = 1.0 / np.sqrt(degree)
    laplacian = np.eye(a.shape[0]) - a * np.outer(inv_sqrt, inv_sqrt)
    return LaplacianPair(degree=degree, laplacian=laplacian)


def eigendecompose(laplacian: np.ndarray) -> EigenDecomposition:
    """Full symmetric eigendecomposition, eigenvalues ascending.

    The input is symmetrized as (L + L^T)/2 before factorization, so
    asymmetry up to roundoff is tolerated.
    """
    sym = 0.5 * (laplacian + laplacian.T)
    try:
        values, vectors = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return EigenDecomposition(values=values, vectors=vectors)


def canonical_sign(column: np.ndarray) -> float:
    """+1 or -1 so that the largest-|entry| (lowest index on ties) is positive."""
    pivot = int(np.argmax(np.abs(column)))
    return -1.0 if column[pivot] < 0 else 1.0


def select_indices(values: np.ndarray, n: int, selection: str = "largest") -> np.ndarray:
    """Indices into the ascending spectrum for the N selected eigenpairs."""
    c = values.shape[0]
    if not 1 <= n <= c:
        raise BadN(f"n must be in [1, {c}], got {n}")
    if selection == "largest":
        return np.argsort(-values, kind="stable")[:n]
    if selection == "smallest":
        return np.argsort(values, kind="stable")[:n]
    raise ValueError(f"selection must be 'largest' or 'smallest', got {selection!r}")


def embed(decomposition: EigenDecomposition, n: int, selection: str = "largest") -> SpectralEmbedding:
    """Sign-canonicalized C x N embedding of the N selected eigenvectors."""
    values, vectors = decomposition
    c = values.shape[0]
    idx = select_indices(values, n, selection)
    signs = np.array([canonical_sign(vectors[:, i]) for i in idx])
    embedding = vectors[:, idx] * signs[None, :]
    if n < c:
        order = np.argsort(-values, kind="stable") if selection == "largest" else np.argsort(values, kind="stable")
        boundary_gap = abs(values[order[n - 1]] - values[order[n]])
        degenerate = bool(boundary_gap < DEGENERACY_GAP)
    else:
        degenerate = False
    return SpectralEmbedding(
        eigenvalues=values,
        basis=vectors,
        embedding=embedding,
        n_selected=int(n),
        degenerate=degenerate,
        selected_indices=idx,
        column_signs=signs,
    )


def spectral_embedding(adjacency: np.ndarray, n: int, selection: str = "largest") -> SpectralEmbedding:
    """Degree -> Laplacian -> eigendecomposition -> embedding in one call."""
    pair = degree_and_laplacian(adjacency)
    return embed(eigendecompose(pair.laplacian), n, selection)


def default_n(channels: int) -> int:
    """C // 2, floored to at least 1."""
    return max(channels // 2, 1)
