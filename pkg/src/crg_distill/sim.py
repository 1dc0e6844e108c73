"""Desk-scale distillation simulation: plain gradient descent on a raw
student tensor against a fixed teacher.

This isolates the loss/gradient machinery from any training framework.
The student starts as unit-normal noise seeded from the config; each step
applies  F_S <- F_S - lr * dL_M/dF_S  with the weighted sum of the enabled
term gradients.  When the student spectrum is degenerate the spectral term
falls back to the finite-difference oracle for that step.  A non-finite
objective, or a student that escapes the Laplacian's domain (non-positive
degree), raises Divergence, which the CLI maps to exit code 3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import AttentionMasks, channel_mask, relation_mask, spatial_mask
from .config import RunConfig
from .crg import build_adjacency
from .errors import (
    DegenerateChannel,
    DegenerateSpectrum,
    Divergence,
    NonFiniteData,
    NonPositiveDegree,
)
from .gradients import (
    fd_gradient,
    grad_edge,
    grad_spectral,
    grad_spectral_values,
    grad_vertex,
)
from .losses import LossReport, multi_level_loss
from .spectral import degree_and_laplacian, eigendecompose, spectral_embedding
from .tensor_io import FeatureMap


@dataclass(frozen=True)
class SimResult:
    trajectory: list[float]  # L_M before each step plus the final value
    initial: LossReport
    final: LossReport
    student: FeatureMap
    spectral_fd_steps: int  # steps where the spectral term used the FD fallback


def _spectral_fd_term(emb_t, student: FeatureMap, config: RunConfig, n_eff: int):
    """Finite-difference gradient of just the (vector) spectral term."""

    def value(s: FeatureMap) -> float:
        emb = spectral_embedding(build_adjacency(s).adjacency, n_eff, config.eigen_selection)
        return float(((emb.embedding - emb_t.embedding) ** 2).sum() / (s.channels * n_eff))

    return fd_gradient(value, student)


def run_distill_sim(teacher: FeatureMap, config: RunConfig, steps: int, lr: float) -> SimResult:
    """Gradient descent on the multi-level objective; see module docstring."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    rng = np.random.default_rng(config.seed)
    student_data = rng.standard_normal(teacher.shape)
    weights = config.weights
    n_eff = config.resolve_n(teacher.channels)
    options = config.loss_options()

    teacher_graph = build_adjacency(teacher)
    masks = AttentionMasks(
        spatial=spatial_mask(teacher),
        channel=channel_mask(teacher),
        relation=relation_mask(teacher_graph.adjacency, axis=config.relation_softmax),
    )
    teacher_spectral = None
    if config.use_spectral:
        if config.spectral_variant == "vector":
            teacher_spectral = spectral_embedding(
                teacher_graph.adjacency, n_eff, config.eigen_selection
            )
        else:
            teacher_spectral = eigendecompose(
                degree_and_laplacian(teacher_graph.adjacency).laplacian
            ).values

    def evaluate(student: FeatureMap) -> LossReport:
        return multi_level_loss(teacher, student, weights, n_eff, **options)

    def gradient(student: FeatureMap) -> tuple[np.ndarray, int]:
        g = np.zeros(teacher.shape)
        fd_used = 0
        if config.use_vertex and weights.alpha != 0.0:
            g += weights.alpha * grad_vertex(
                teacher, student, masks, config.use_spatial_mask, config.use_channel_mask
            ).values
        if config.use_edge and weights.beta != 0.0:
            g += weights.beta * grad_edge(
                teacher_graph.adjacency, student, masks.relation, config.use_relation_mask
            ).values
        if config.use_spectral and weights.gamma != 0.0:
            if config.spectral_variant == "vector":
                try:
                    term = grad_spectral(
                        teacher_spectral, student, n_eff, config.eigen_selection
                    ).values
                except DegenerateSpectrum:
                    term = _spectral_fd_term(teacher_spectral, student, config, n_eff).values
                    fd_used = 1
            else:
                term = grad_spectral_values(teacher_spectral, student).values
            g += weights.gamma * term
        return g, fd_used

    trajectory: list[float] = []
    fd_steps = 0
    student = FeatureMap(student_data)
    try:
        initial = evaluate(student)
    except (NonPositiveDegree, DegenerateChannel) as exc:
        raise Divergence(f"initial student is outside the objective's domain: {exc}") from exc
    trajectory.append(initial.multi_level)
    if not np.isfinite(initial.multi_level):
        raise Divergence("objective non-finite at initialization")
    report = initial
    for step in range(steps):
        try:
            g, fd_used = gradient(student)
        except (NonPositiveDegree, DegenerateChannel) as exc:
            raise Divergence(f"student left the objective's domain at step {step}: {exc}") from exc
        fd_steps += fd_used
        student_data = student.data - lr * g
        try:
            student = FeatureMap(student_data)
            report = evaluate(student)
        except NonFiniteData as exc:
            raise Divergence(f"student non-finite at step {step + 1}") from exc
        except (NonPositiveDegree, DegenerateChannel) as exc:
            raise Divergence(f"student left the objective's domain at step {step + 1}: {exc}") from exc
        if not np.isfinite(report.multi_level):
            raise Divergence(f"objective non-finite at step {step + 1}")
        trajectory.append(report.multi_level)
    return SimResult(
        trajectory=trajectory,
        initial=initial,
        final=report,
        student=student,
        spectral_fd_steps=fd_steps,
    )
