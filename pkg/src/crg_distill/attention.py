"""Teacher-derived attention masks for the vertex and edge losses.

All three masks come from teacher tensors only; student tensors never
enter.  Softmaxes are max-subtracted for stability.

  spatial  M^s (H, W): H*W * softmax over positions of the channel mean of |F|
  channel  M^c (C,):   C   * softmax over channels of the spatial mean of |F|
  relation M^r (C, C): softmax of |A|, jointly over all C^2 entries by
                       default; a row-wise variant exists for ablation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .tensor_io import FeatureMap


@dataclass(frozen=True)
class AttentionMasks:
    spatial: np.ndarray
    channel: np.ndarray
    relation: np.ndarray


def softmax_flat(scores: np.ndarray) -> np.ndarray:
    """Stabilized softmax over all entries jointly; preserves shape."""
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def spatial_mask(teacher: FeatureMap) -> np.ndarray:
    scores = np.abs(teacher.data).mean(axis=0)
    h, w = teacher.height, teacher.width
    return h * w * softmax_flat(scores)


def channel_mask(teacher: FeatureMap) -> np.ndarray:
    scores = np.abs(teacher.data).mean(axis=(1, 2))
    return teacher.channels * softmax_flat(scores)


def relation_mask(teacher_adjacency: np.ndarray, axis: str = "global") -> np.ndarray:
    """Softmax of |A|; ``axis`` is "global" (default) or "row"."""
    a = np.asarray(teacher_adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"relation mask needs a square matrix, got {a.shape}")
    scores = np.abs(a)
    if axis == "global":
        return softmax_flat(scores)
    if axis == "row":
        shifted = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)
    raise ValueError(f"axis must be 'global' or 'row', got {axis!r}")


def attention_masks(
    teacher: FeatureMap,
    teacher_adjacency: np.ndarray,
    relation_softmax: str = "global",
) -> AttentionMasks:
    """All three masks from one teacher map and its adjacency."""
    return AttentionMasks(
        spatial=spatial_mask(teacher),
        channel=channel_mask(teacher),
        relation=relation_mask(teacher_adjacency, axis=relation_softmax),
    )
