"""Channel relational graph: vectorized channels and cosine adjacency.

Vertices are a feature map's channels; the weighted edge between channels
i and j is the cosine similarity of the two flattened channel vectors.
The adjacency is built as a single Gram product of row-normalized channel
vectors, then mirrored from the upper triangle so A[i, j] == A[j, i]
bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_io import FeatureMap

ZERO_NORM_THRESHOLD = 1e-12


@dataclass(frozen=True)
class ChannelGraph:
    """Adjacency (C, C) plus the vectorized channel matrix (C, H*W)."""

    channel_vectors: np.ndarray
    adjacency: np.ndarray
    source_shape: tuple[int, int, int]


def vectorize_channels(fmap: FeatureMap) -> np.ndarray:
    """Flatten each channel row-major: row k = channel k, height-major."""
    c, h, w = fmap.shape
    return fmap.data.reshape(c, h * w)


def channel_norms(vectors: np.ndarray) -> np.ndarray:
    return np.linalg.norm(vectors, axis=1)


def normalized_rows(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalize; rows with norm < ZERO_NORM_THRESHOLD become zero rows."""
    norms = channel_norms(vectors)
    safe = np.where(norms < ZERO_NORM_THRESHOLD, 1.0, norms)
    unit = vectors / safe[:, None]
    unit[norms < ZERO_NORM_THRESHOLD] = 0.0
    return unit, norms


def _mirror_upper(gram: np.ndarray) -> np.ndarray:
    # each unordered pair is taken once, from the upper triangle
    return np.triu(gram) + np.triu(gram, 1).T


def build_adjacency(fmap: FeatureMap, unnormalized_gram: bool = False) -> ChannelGraph:
    """Cosine-similarity adjacency of the channel relational graph.

    A[i, j] = <v_i, v_j> / (||v_i|| ||v_j||).  A zero-norm channel i gets
    A[i, i] = 1 and A[i, j] = 0 for j != i, which keeps the diagonal unit
    and the degree matrix invertible.  With ``unnormalized_gram`` the raw
    product V V^T is returned instead (no normalization, no unit diagonal).
    """
    vectors = vectorize_channels(fmap)
    if unnormalized_gram:
        adjacency = _mirror_upper(vectors @ vectors.T)
        return ChannelGraph(vectors, adjacency, fmap.shape)
    unit, _norms = normalized_rows(vectors)
    adjacency = _mirror_upper(unit @ unit.T)
    np.fill_diagonal(adjacency, 1.0)
    return ChannelGraph(vectors, adjacency, fmap.shape)
