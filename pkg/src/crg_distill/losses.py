"""The scalar distillation losses and their multi-level combination.

  vertex    L_V = 1/(CHW) sum (F_T - F_S)^2 * M^s * M^c
  edge      L_E = 1/C^2   sum (A_T - A_S)^2 * M^r        (sum over C x C)
  spectral  L_S = 1/(CN)  sum (E_T - E_S)^2

plus the eigenvalue-difference variant of the spectral loss and the 1x1
channel adapter.  The combined objective is

  L_M = alpha * L_V + beta * L_E + gamma * L_S

with per-term toggles (disabled terms are reported as 0 and skipped) and
per-mask toggles (a disabled mask is replaced by all-ones).  Masks always
derive from the teacher, so they are constants with respect to the student.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .attention import AttentionMasks, channel_mask, relation_mask, spatial_mask
from .crg import build_adjacency
from .errors import DegenerateSpectrumWarning, ShapeMismatch
from .spectral import (
    SpectralEmbedding,
    default_n,
    degree_and_laplacian,
    eigendecompose,
    spectral_embedding,
)
from .tensor_io import FeatureMap, FeatureMapBatch


@dataclass(frozen=True)
class LossWeights:
    """Nonnegative weights for the vertex, edge, and spectral terms."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossReport:
    """Unweighted per-term values plus the weighted combination.

    ``multi_level`` is always alpha*vertex + beta*edge + gamma*spectral for
    the weights it was computed with; disabled terms appear as 0.  For a
    batch, the top level holds left-to-right sums over ``layers``.
    """

    vertex: float
    edge: float
    spectral: float
    multi_level: float
    layers: tuple["LossReport", ...] = ()


@dataclass(frozen=True)
class ChannelAdapter:
    """Pointwise channel projection: out_m = sum_k W[m, k] * F[k] + b[m]."""

    weights: np.ndarray
    bias: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeMismatch(f"adapter weights must be rank 2, got {w.shape}")
        b = np.zeros(w.shape[0]) if self.bias is None else np.asarray(self.bias, dtype=np.float64)
        if b.shape != (w.shape[0],):
            raise ShapeMismatch(f"adapter bias must have shape ({w.shape[0]},), got {b.shape}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("adapter parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


def _require_same_shape(a: FeatureMap, b: FeatureMap) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"teacher {a.shape} vs student {b.shape}")


def vertex_loss(
    teacher: FeatureMap,
    student: FeatureMap,
    masks: AttentionMasks,
    use_spatial: bool = True,
    use_channel: bool = True,
) -> float:
    """Masked mean squared error over all C*H*W entries."""
    _require_same_shape(teacher, student)
    c, h, w = teacher.shape
    diff2 = (teacher.data - student.data) ** 2
    if use_spatial:
        diff2 = diff2 * masks.spatial[None, :, :]
    if use_channel:
        diff2 = diff2 * masks.channel[:, None, None]
    return float(diff2.sum() / (c * h * w))


def edge_loss(
    teacher_adj: np.ndarray,
    student_adj: np.ndarray,
    relation_mask: np.ndarray,
    use_relation: bool = True,
) -> float:
    """Masked mean squared error over all C^2 adjacency entries."""
    t = np.asarray(teacher_adj, dtype=np.float64)
    s = np.asarray(student_adj, dtype=np.float64)
    m = np.asarray(relation_mask, dtype=np.float64)
    if not (t.shape == s.shape == m.shape) or t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ShapeMismatch(f"adjacencies/mask must share a square shape: {t.shape}, {s.shape}, {m.shape}")
    c = t.shape[0]
    diff2 = (t - s) ** 2
    if use_relation:
        diff2 = diff2 * m
    return float(diff2.sum() / (c * c))


def spectral_loss(teacher_emb: SpectralEmbedding, student_emb: SpectralEmbedding) -> float:
    """Mean squared entrywise difference of the two C x N embeddings.

    Warns with DegenerateSpectrumWarning when either side was computed
    from a (near-)degenerate spectrum: the compared eigenvectors are then
    not uniquely defined.
    """
    te, se = teacher_emb.embedding, student_emb.embedding
    if te.shape != se.shape:
        raise ShapeMismatch(f"embeddings differ in shape: {te.shape} vs {se.shape}")
    if teacher_emb.degenerate or student_emb.degenerate:
        warnings.warn(
            "spectral loss computed from a degenerate spectrum", DegenerateSpectrumWarning
        )
    c, n = te.shape
    return float(((te - se) ** 2).sum() / (c * n))


def spectral_value_loss_variant(teacher_vals: np.ndarray, student_vals: np.ndarray) -> float:
    """Mean squared difference of the sorted eigenvalue vectors."""
    t = np.sort(np.asarray(teacher_vals, dtype=np.float64))
    s = np.sort(np.asarray(student_vals, dtype=np.float64))
    if t.shape != s.shape or t.ndim != 1:
        raise ShapeMismatch(f"eigenvalue vectors differ in shape: {t.shape} vs {s.shape}")
    return float(((t - s) ** 2).mean())


def apply_adapter(student: FeatureMap, adapter: ChannelAdapter) -> FeatureMap:
    """Project channels: out[m, i, j] = sum_k W[m, k] F[k, i, j] + b[m]."""
    if adapter.weights.shape[1] != student.channels:
        raise ShapeMismatch(
            f"adapter expects {adapter.weights.shape[1]} input channels, map has {student.channels}"
        )
    out = np.tensordot(adapter.weights, student.data, axes=([1], [0]))
    out = out + adapter.bias[:, None, None]
    return FeatureMap(out, student.precision)


def multi_level_loss(
    teacher: FeatureMap,
    student: FeatureMap,
    weights: LossWeights = LossWeights(),
    n: int | None = None,
    *,
    use_vertex: bool = True,
    use_edge: bool = True,
    use_spectral: bool = True,
    use_spatial_mask: bool = True,
    use_channel_mask: bool = True,
    use_relation_mask: bool = True,
    relation_softmax: str = "global",
    eigen_selection: str = "largest",
    spectral_variant: str = "vector",
) -> LossReport:
    """Full pipeline for one teacher/student pair of aligned shape.

    Adjacency and masks are built on demand; the spectral term follows
    ``spectral_variant``: "vector" compares sign-canonicalized embeddings
    (size ``n``, default C // 2), "value" compares eigenvalue vectors.
    """
    _require_same_shape(teacher, student)
    if spectral_variant not in ("vector", "value"):
        raise ValueError(f"spectral_variant must be 'vector' or 'value', got {spectral_variant!r}")
    l_v = l_e = l_s = 0.0
    teacher_graph = student_graph = None
    if use_edge or use_spectral:
        teacher_graph = build_adjacency(teacher)
        student_graph = build_adjacency(student)
    if use_vertex:
        masks = AttentionMasks(
            spatial=spatial_mask(teacher), channel=channel_mask(teacher), relation=np.empty(0)
        )
        l_v = vertex_loss(teacher, student, masks, use_spatial_mask, use_channel_mask)
    if use_edge:
        mask_r = relation_mask(teacher_graph.adjacency, axis=relation_softmax)
        l_e = edge_loss(teacher_graph.adjacency, student_graph.adjacency, mask_r, use_relation_mask)
    if use_spectral:
        if spectral_variant == "vector":
            n_eff = default_n(teacher.channels) if n is None else int(n)
            emb_t = spectral_embedding(teacher_graph.adjacency, n_eff, eigen_selection)
            emb_s = spectral_embedding(student_graph.adjacency, n_eff, eigen_selection)
            l_s = spectral_loss(emb_t, emb_s)
        else:
            vals_t = eigendecompose(degree_and_laplacian(teacher_graph.adjacency).laplacian).values
            vals_s = eigendecompose(degree_and_laplacian(student_graph.adjacency).laplacian).values
            l_s = spectral_value_loss_variant(vals_t, vals_s)
    multi = weights.alpha * l_v + weights.beta * l_e + weights.gamma * l_s
    return LossReport(vertex=l_v, edge=l_e, spectral=l_s, multi_level=multi)


def batch_multi_level_loss(
    teacher_batch: FeatureMapBatch,
    student_batch: FeatureMapBatch,
    weights: LossWeights = LossWeights(),
    n: int | None = None,
    threads: int = 1,
    **options,
) -> LossReport:
    """Per-sample reports plus left-to-right totals.

    With ``threads`` > 1 the samples are evaluated concurrently; the
    reduction order is the batch order either way, so single-threaded runs
    are bit-reproducible.
    """
    if len(teacher_batch) != len(student_batch):
        raise ShapeMismatch(
            f"batch sizes differ: teacher {len(teacher_batch)} vs student {len(student_batch)}"
        )

    def one(pair):
        t, s = pair
        return multi_level_loss(t, s, weights, n, **options)

    pairs = list(zip(teacher_batch, student_batch))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            layers = tuple(pool.map(one, pairs))
    else:
        layers = tuple(one(p) for p in pairs)
    tot_v = tot_e = tot_s = tot_m = 0.0
    for rep in layers:
        tot_v += rep.vertex
        tot_e += rep.edge
        tot_s += rep.spectral
        tot_m += rep.multi_level
    return LossReport(vertex=tot_v, edge=tot_e, spectral=tot_s, multi_level=tot_m, layers=layers)
