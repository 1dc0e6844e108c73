import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crg_distill import FeatureMap, attention_masks, channel_mask, relation_mask, spatial_mask
from crg_distill.attention import softmax_flat
from crg_distill.errors import DimensionMismatch


def test_constant_map_gives_unit_masks():
    m = FeatureMap(np.full((3, 2, 4), 1.7))
    np.testing.assert_allclose(spatial_mask(m), np.ones((2, 4)), atol=1e-12)
    np.testing.assert_allclose(channel_mask(m), np.ones(3), atol=1e-12)


def test_spatial_hand_softmax():
    """scores [0, ln 3] -> softmax [0.25, 0.75] -> scaled by H*W=2."""
    m = FeatureMap(np.array([0.0, np.log(3.0)]).reshape(1, 1, 2))
    np.testing.assert_allclose(spatial_mask(m), [[0.5, 1.5]], atol=1e-12)


def test_channel_hand_softmax():
    m = FeatureMap(np.stack([np.zeros((1, 2)), np.full((1, 2), np.log(3.0))]))
    np.testing.assert_allclose(channel_mask(m), [0.5, 1.5], atol=1e-12)


@given(c=st.integers(1, 8), h=st.integers(1, 5), w=st.integers(1, 5), seed=st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_mask_normalizations(c, h, w, seed):
    """sum M^s = H*W, sum M^c = C, sum M^r = 1."""
    rng = np.random.default_rng(seed)
    m = FeatureMap(rng.standard_normal((c, h, w)) * 5)
    a = np.random.default_rng(seed + 1).uniform(-1, 1, size=(c, c))
    a = (a + a.T) / 2
    assert abs(spatial_mask(m).sum() - h * w) < 1e-9
    assert abs(channel_mask(m).sum() - c) < 1e-9
    assert abs(relation_mask(a).sum() - 1.0) < 1e-9


def test_masks_strictly_positive(rng):
    m = FeatureMap(rng.standard_normal((4, 3, 3)) * 20)
    masks = attention_masks(m, np.eye(4))
    assert masks.spatial.min() > 0
    assert masks.channel.min() > 0
    assert masks.relation.min() > 0


def test_relation_uniform_cases():
    np.testing.assert_allclose(relation_mask(np.ones((2, 2))), np.full((2, 2), 0.25), atol=1e-15)
    np.testing.assert_allclose(relation_mask(np.array([[1.0]])), [[1.0]], atol=1e-15)
    np.testing.assert_allclose(relation_mask(np.full((3, 3), -0.3)), np.full((3, 3), 1 / 9), atol=1e-15)


def test_relation_symmetric_output(rng):
    a = rng.uniform(-1, 1, size=(5, 5))
    a = (a + a.T) / 2
    r = relation_mask(a)
    np.testing.assert_array_equal(r, r.T)


def test_relation_rejects_non_square():
    with pytest.raises(DimensionMismatch):
        relation_mask(np.ones((2, 3)))


def test_relation_row_softmax_rows_sum_to_one(rng):
    a = rng.uniform(-1, 1, size=(4, 4))
    r = relation_mask((a + a.T) / 2, axis="row")
    np.testing.assert_allclose(r.sum(axis=1), np.ones(4), atol=1e-12)


@given(seed=st.integers(0, 2**31), shift=st.floats(-50, 50))
@settings(max_examples=40, deadline=None)
def test_softmax_shift_invariance(seed, shift):
    """Adding a constant at the softmax input leaves the output unchanged."""
    scores = np.random.default_rng(seed).standard_normal((3, 4)) * 10
    base = softmax_flat(scores)
    shifted = softmax_flat(scores + shift)
    assert np.abs(base - shifted).max() < 1e-9


def test_softmax_stable_for_large_magnitudes():
    out = softmax_flat(np.array([1e6, 1e6 - 1.0]))
    assert np.isfinite(out).all()
    assert abs(out.sum() - 1.0) < 1e-12
