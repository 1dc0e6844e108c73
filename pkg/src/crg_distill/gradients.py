"""Analytic gradients of the three losses w.r.t. the student feature map,
and the central-difference oracle that certifies them.

The vertex gradient is elementary.  The edge and spectral gradients chain
through the cosine-similarity Jacobian: with v_k the student channel rows,
u_k = v_k / ||v_k||, and an adjacency cotangent Abar,

  dL/dv_k = sum_{j != k} (Abar_kj + Abar_jk) (u_j - A_kj u_k) / ||v_k||

(the diagonal never contributes because A_kk is identically 1).  The
spectral gradient additionally backpropagates through the eigenvector
perturbation of a simple spectrum,

  Z = U (F o (U^T Ubar)) U^T,   F[b, a] = 1 / (lambda_a - lambda_b),

and through L = I - D^{-1/2} A D^{-1/2} including the degree dependence of
D^{-1/2}.  Sign canonicalization is locally constant off the tie set, so
it passes the cotangent through with its fixed sign.  Repeated eigenvalues
make eigenvectors non-unique; analytic mode is refused (DegenerateSpectrum)
instead of emitting a subspace pseudo-gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .attention import AttentionMasks
from .crg import ZERO_NORM_THRESHOLD, build_adjacency, normalized_rows, vectorize_channels
from .errors import DegenerateChannel, DegenerateSpectrum, ShapeMismatch
from .losses import LossWeights, edge_loss, spectral_value_loss_variant, vertex_loss
from .spectral import (
    SpectralEmbedding,
    default_n,
    degree_and_laplacian,
    eigendecompose,
    embed,
    spectral_embedding,
)
from .tensor_io import FeatureMap

GAP_THRESHOLD = 1e-6
CERTIFICATION_TOLERANCES = {"vertex": 1e-6, "edge": 1e-5, "spectral": 1e-4}


@dataclass(frozen=True)
class GradientField:
    """dLoss/dF_S per entry, same shape as the student map."""

    values: np.ndarray
    loss_at_point: float
    mode: str  # "analytic" | "finite_difference"


@dataclass(frozen=True)
class TermCheck:
    max_rel_error: float | None  # None: term skipped (degenerate spectrum)
    analytic: GradientField | None


@dataclass(frozen=True)
class GradientCheckReport:
    vertex: TermCheck
    edge: TermCheck
    spectral: TermCheck

    def passed(self, tolerances: dict[str, float] = CERTIFICATION_TOLERANCES) -> bool:
        for name in ("vertex", "edge", "spectral"):
            term: TermCheck = getattr(self, name)
            if term.max_rel_error is not None and term.max_rel_error > tolerances[name]:
                return False
        return True


def _student_unit_rows(student: FeatureMap) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    vectors = vectorize_channels(student)
    unit, norms = normalized_rows(vectors)
    if norms.min() < ZERO_NORM_THRESHOLD:
        k = int(np.argmin(norms))
        raise DegenerateChannel(f"student channel {k} has norm {norms[k]:.3e}")
    return vectors, unit, norms


def _adjacency_cotangent_to_features(
    adj_cotangent: np.ndarray,
    unit: np.ndarray,
    norms: np.ndarray,
    adjacency: np.ndarray,
    shape: tuple[int, int, int],
) -> np.ndarray:
    """Chain dL/dA through the cosine Jacobian to dL/dF (C, H, W)."""
    s = adj_cotangent + adj_cotangent.T
    s = s.copy()
    np.fill_diagonal(s, 0.0)
    coeff = np.sum(s * adjacency, axis=1)
    rows = (s @ unit - coeff[:, None] * unit) / norms[:, None]
    return rows.reshape(shape)


def grad_vertex(
    teacher: FeatureMap,
    student: FeatureMap,
    masks: AttentionMasks,
    use_spatial: bool = True,
    use_channel: bool = True,
) -> GradientField:
    """d/dF_S of the vertex loss; masks are teacher-derived constants."""
    if teacher.shape != student.shape:
        raise ShapeMismatch(f"teacher {teacher.shape} vs student {student.shape}")
    c, h, w = teacher.shape
    g = -(2.0 / (c * h * w)) * (teacher.data - student.data)
    if use_spatial:
        g = g * masks.spatial[None, :, :]
    if use_channel:
        g = g * masks.channel[:, None, None]
    loss = vertex_loss(teacher, student, masks, use_spatial, use_channel)
    return GradientField(values=g, loss_at_point=loss, mode="analytic")


def grad_edge(
    teacher_adj: np.ndarray,
    student: FeatureMap,
    relation_mask: np.ndarray,
    use_relation: bool = True,
) -> GradientField:
    """d/dF_S of the edge loss, chained through the cosine adjacency."""
    _vectors, unit, norms = _student_unit_rows(student)
    graph = build_adjacency(student)
    a_s = graph.adjacency
    a_t = np.asarray(teacher_adj, dtype=np.float64)
    if a_t.shape != a_s.shape:
        raise ShapeMismatch(f"teacher adjacency {a_t.shape} vs student {a_s.shape}")
    c = a_s.shape[0]
    mask = np.asarray(relation_mask, dtype=np.float64) if use_relation else np.ones((c, c))
    cotangent = (2.0 / (c * c)) * (a_s - a_t) * mask
    values = _adjacency_cotangent_to_features(cotangent, unit, norms, a_s, student.shape)
    loss = edge_loss(a_t, a_s, mask, use_relation=True)
    return GradientField(values=values, loss_at_point=loss, mode="analytic")


def _check_selected_gaps(values: np.ndarray, selected: np.ndarray, threshold: float) -> None:
    for a in selected:
        others = np.abs(values - values[a])
        others[a] = np.inf
        gap = others.min()
        if gap <= threshold:
            raise DegenerateSpectrum(
                f"eigenvalue {values[a]:.6g} (index {a}) has gap {gap:.3e} <= {threshold:g}"
            )


def _eigenvector_cotangent_to_laplacian(
    basis: np.ndarray,
    values: np.ndarray,
    basis_cotangent: np.ndarray,
    selected: np.ndarray,
) -> np.ndarray:
    """Z = U (F o (U^T Ubar)) U^T with F[b, a] = 1/(lambda_a - lambda_b)."""
    k = basis.T @ basis_cotangent
    f = np.zeros_like(k)
    for a in selected:
        denom = values[a] - values
        denom[a] = 1.0  # diagonal excluded below
        f[:, a] = 1.0 / denom
        f[a, a] = 0.0
    return basis @ (f * k) @ basis.T


def _laplacian_cotangent_to_adjacency(
    z: np.ndarray, adjacency: np.ndarray, degree: np.ndarray
) -> np.ndarray:
    """dL/dA for L = I - D^{-1/2} A D^{-1/2}, D_ii = row sum of A.

    The D^{-1/2} factors depend on every entry of row i of A, which adds a
    row-constant correction on top of the direct -D^{-1/2} Z D^{-1/2} term.
    """
    s = 1.0 / np.sqrt(degree)
    direct = -z * np.outer(s, s)
    r = np.sum(z * (adjacency * s[None, :]), axis=1)
    c = np.sum(z * (adjacency * s[:, None]), axis=0)
    correction = 0.5 * (degree ** -1.5) * (r + c)
    return direct + correction[:, None]


def grad_spectral(
    teacher_emb: SpectralEmbedding,
    student: FeatureMap,
    n: int,
    eigen_selection: str = "largest",
    gap_threshold: float = GAP_THRESHOLD,
) -> GradientField:
    """d/dF_S of the spectral embedding loss.

    Requires every selected student eigenvalue to be separated from all
    other eigenvalues by more than ``gap_threshold``; otherwise raises
    DegenerateSpectrum and the caller must fall back to finite differences
    or drop the term.
    """
    _vectors, unit, norms = _student_unit_rows(student)
    graph = build_adjacency(student)
    pair = degree_and_laplacian(graph.adjacency)
    decomp = eigendecompose(pair.laplacian)
    emb_s = embed(decomp, n, eigen_selection)
    if teacher_emb.embedding.shape != emb_s.embedding.shape:
        raise ShapeMismatch(
            f"teacher embedding {teacher_emb.embedding.shape} vs student {emb_s.embedding.shape}"
        )
    _check_selected_gaps(emb_s.eigenvalues, emb_s.selected_indices, gap_threshold)
    c = student.channels
    emb_cot = (2.0 / (c * n)) * (emb_s.embedding - teacher_emb.embedding)
    basis_cot = np.zeros_like(emb_s.basis)
    for j, idx in enumerate(emb_s.selected_indices):
        basis_cot[:, idx] = emb_s.column_signs[j] * emb_cot[:, j]
    z = _eigenvector_cotangent_to_laplacian(
        emb_s.basis, emb_s.eigenvalues, basis_cot, emb_s.selected_indices
    )
    adj_cot = _laplacian_cotangent_to_adjacency(z, graph.adjacency, pair.degree)
    values = _adjacency_cotangent_to_features(adj_cot, unit, norms, graph.adjacency, student.shape)
    loss = float(((emb_s.embedding - teacher_emb.embedding) ** 2).sum() / (c * n))
    return GradientField(values=values, loss_at_point=loss, mode="analytic")


def grad_spectral_values(teacher_vals: np.ndarray, student: FeatureMap) -> GradientField:
    """d/dF_S of the eigenvalue-difference spectral variant.

    Uses d lambda_a = u_a^T dL u_a, which needs no eigenvalue gaps; the
    two spectra are paired by ascending rank.
    """
    _vectors, unit, norms = _student_unit_rows(student)
    graph = build_adjacency(student)
    pair = degree_and_laplacian(graph.adjacency)
    decomp = eigendecompose(pair.laplacian)
    t = np.sort(np.asarray(teacher_vals, dtype=np.float64))
    if t.shape != decomp.values.shape:
        raise ShapeMismatch(f"teacher spectrum {t.shape} vs student {decomp.values.shape}")
    c = t.shape[0]
    val_cot = (2.0 / c) * (decomp.values - t)
    z = (decomp.vectors * val_cot[None, :]) @ decomp.vectors.T
    adj_cot = _laplacian_cotangent_to_adjacency(z, graph.adjacency, pair.degree)
    values = _adjacency_cotangent_to_features(adj_cot, unit, norms, graph.adjacency, student.shape)
    loss = spectral_value_loss_variant(t, decomp.values)
    return GradientField(values=values, loss_at_point=loss, mode="analytic")


def fd_gradient(
    loss_evaluator: Callable[[FeatureMap], float],
    student: FeatureMap,
    step: float = 1e-6,
) -> GradientField:
    """Central differences, per-entry step h = step * max(1, |x|)."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    x = student.data.ravel()
    g = np.zeros_like(x)
    for e in range(x.size):
        h = step * max(1.0, abs(x[e]))
        plus = x.copy()
        plus[e] += h
        minus = x.copy()
        minus[e] -= h
        f_plus = loss_evaluator(FeatureMap(plus.reshape(student.shape), student.precision))
        f_minus = loss_evaluator(FeatureMap(minus.reshape(student.shape), student.precision))
        g[e] = (f_plus - f_minus) / (2.0 * h)
    return GradientField(
        values=g.reshape(student.shape),
        loss_at_point=float(loss_evaluator(student)),
        mode="finite_difference",
    )


FD_RESOLUTION = 1e-9


def _max_rel_error(analytic: np.ndarray, fd: np.ndarray) -> float:
    """||g_a - g_fd||_inf / max(||g_fd||_inf, 1e-12).

    Central differences carry O(h^2) truncation plus rounding noise, so at
    stationary points (teacher == student, or a cosine maximum) the oracle
    returns ~1e-11 junk where the true gradient is exactly zero.  An
    absolute discrepancy at or below FD_RESOLUTION is indistinguishable
    from agreement at oracle resolution and reports as 0; every tolerance
    in the certification concerns discrepancies orders of magnitude above
    this floor.
    """
    diff = float(np.abs(analytic - fd).max())
    if diff <= FD_RESOLUTION:
        return 0.0
    return diff / max(float(np.abs(fd).max()), 1e-12)


def check_gradients(
    teacher: FeatureMap,
    student: FeatureMap,
    weights: LossWeights = LossWeights(),
    n: int | None = None,
    corrupt_term: str | None = None,
) -> GradientCheckReport:
    """All three analytic gradients against the central-difference oracle.

    Relative error per term is ||g_a - g_fd||_inf / max(||g_fd||_inf, 1e-12).
    A degenerate student spectrum skips the spectral term (max_rel_error
    None) rather than failing.  ``corrupt_term`` deliberately perturbs one
    analytic gradient before the comparison; it exists only to exercise
    the failure path of the certification.
    """
    from .attention import attention_masks

    def maybe_corrupt(field: GradientField, name: str) -> GradientField:
        if corrupt_term != name:
            return field
        return GradientField(field.values + 1e-3, field.loss_at_point, field.mode)

    teacher_graph = build_adjacency(teacher)
    masks = attention_masks(teacher, teacher_graph.adjacency)
    n_eff = default_n(teacher.channels) if n is None else int(n)
    emb_t = spectral_embedding(teacher_graph.adjacency, n_eff)

    a_v = grad_vertex(teacher, student, masks)
    fd_v = fd_gradient(lambda s: weights.alpha * vertex_loss(teacher, s, masks), student)
    a_v = GradientField(weights.alpha * a_v.values, weights.alpha * a_v.loss_at_point, "analytic")
    a_v = maybe_corrupt(a_v, "vertex")
    vertex = TermCheck(_max_rel_error(a_v.values, fd_v.values), a_v)

    a_e = grad_edge(teacher_graph.adjacency, student, masks.relation)
    fd_e = fd_gradient(
        lambda s: weights.beta
        * edge_loss(teacher_graph.adjacency, build_adjacency(s).adjacency, masks.relation),
        student,
    )
    a_e = GradientField(weights.beta * a_e.values, weights.beta * a_e.loss_at_point, "analytic")
    a_e = maybe_corrupt(a_e, "edge")
    edge = TermCheck(_max_rel_error(a_e.values, fd_e.values), a_e)

    try:
        a_s = grad_spectral(emb_t, student, n_eff)
    except DegenerateSpectrum:
        spectral = TermCheck(None, None)
    else:
        c = teacher.channels

        def spectral_value(s: FeatureMap) -> float:
            emb = spectral_embedding(build_adjacency(s).adjacency, n_eff)
            return weights.gamma * float(
                ((emb.embedding - emb_t.embedding) ** 2).sum() / (c * n_eff)
            )

        fd_s = fd_gradient(spectral_value, student)
        a_s = GradientField(weights.gamma * a_s.values, weights.gamma * a_s.loss_at_point, "analytic")
        a_s = maybe_corrupt(a_s, "spectral")
        spectral = TermCheck(_max_rel_error(a_s.values, fd_s.values), a_s)

    return GradientCheckReport(vertex=vertex, edge=edge, spectral=spectral)
