import numpy as np
import pytest

from crg_distill import FeatureMap, build_adjacency
from crg_distill.errors import NonPositiveDegree
from crg_distill.spectral import default_n, degree_and_laplacian, eigendecompose, select_indices


def random_map(rng, c, h, w, scale=1.0) -> FeatureMap:
    return FeatureMap(scale * rng.standard_normal((c, h, w)))


def nonneg_map(rng, c, h, w) -> FeatureMap:
    """Nonnegative activations; the cosine graph then has nonnegative weights."""
    return FeatureMap(np.abs(rng.standard_normal((c, h, w))) + 0.05)


def spectrum_is_clean(fmap: FeatureMap, n: int | None = None, gap: float = 1e-3,
                      pivot_margin: float = 1e-3) -> bool:
    """True when degrees are positive, every selected eigenvalue is separated
    from all others by more than ``gap``, and no selected eigenvector has a
    near-tie for its largest-|entry| pivot (which would make the sign
    convention unstable under perturbation)."""
    try:
        pair = degree_and_laplacian(build_adjacency(fmap).adjacency)
    except NonPositiveDegree:
        return False
    values, vectors = eigendecompose(pair.laplacian)
    n_eff = default_n(fmap.channels) if n is None else n
    idx = select_indices(values, n_eff)
    for a in idx:
        others = np.abs(values - values[a])
        others[a] = np.inf
        if others.min() <= gap:
            return False
        mags = np.sort(np.abs(vectors[:, a]))[::-1]
        if len(mags) > 1 and mags[0] - mags[1] <= pivot_margin:
            return False
    return True


def graph_pair_ok(teacher: FeatureMap, student: FeatureMap) -> bool:
    try:
        degree_and_laplacian(build_adjacency(teacher).adjacency)
        degree_and_laplacian(build_adjacency(student).adjacency)
    except NonPositiveDegree:
        return False
    return True


def valid_gradient_pair(rng, c, h, w, n: int | None = None):
    """Teacher/student pair on which all three losses and their analytic
    gradients are defined and finite-difference checks are stable."""
    while True:
        t = random_map(rng, c, h, w)
        s = random_map(rng, c, h, w)
        if graph_pair_ok(t, s) and spectrum_is_clean(s, n):
            return t, s


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)
