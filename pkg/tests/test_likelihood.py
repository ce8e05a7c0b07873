import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from binexperts.compose import DELTA
from binexperts.likelihood import log_likelihood, mix_uniform, pixel_likelihood, truncate_template


def test_examples():
    assert log_likelihood([1], [0.5]) == pytest.approx(math.log(0.5))
    assert log_likelihood([1, 0], [0.7, 0.7]) == pytest.approx(math.log(0.7) + math.log(0.3))
    x = np.array([1, 0, 1, 1, 0])
    mu = np.where(x == 1, 1 - DELTA, DELTA)
    assert log_likelihood(x, mu) == pytest.approx(0.0, abs=1e-5)


def test_clipping_keeps_values_finite():
    assert log_likelihood([1, 0], [0.0, 1.0]) == pytest.approx(2 * math.log(DELTA))


def test_batched_templates():
    x = np.array([1, 0, 1])
    mus = np.array([[0.9, 0.1, 0.8], [0.5, 0.5, 0.5]])
    out = log_likelihood(x, mus)
    assert out.shape == (2,)
    assert out[1] == pytest.approx(3 * math.log(0.5))


def test_errors():
    with pytest.raises(ValueError, match="dimension"):
        log_likelihood([1, 0], [0.5])
    with pytest.raises(ValueError, match="binary"):
        log_likelihood([2, 0], [0.5, 0.5])
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            mix_uniform([0.2], bad)


def test_truncate_examples():
    np.testing.assert_array_equal(truncate_template([0.9, 0.2, 0.5]), [0.9, 0.5, 0.5])
    np.testing.assert_array_equal(truncate_template([0.5, 0.5]), [0.5, 0.5])
    mu = truncate_template([0.9, 0.2])
    expected = math.log(0.9) + math.log(0.5)
    assert log_likelihood([1, 0], mu) == pytest.approx(expected)
    assert log_likelihood([1, 1], mu) == pytest.approx(expected)


def test_mix_uniform_examples():
    np.testing.assert_allclose(mix_uniform([1.0, 0.0], 0.5), [0.75, 0.25])
    np.testing.assert_allclose(mix_uniform([0.5] * 4, 0.3), [0.5] * 4)
    np.testing.assert_allclose(mix_uniform([0.9, 0.1], 1 - 1e-12), [0.9, 0.1], atol=1e-11)


def test_pixel_likelihood():
    np.testing.assert_allclose(pixel_likelihood([1, 0], [0.8, 0.8]), [0.8, 0.2])


templates = arrays(np.float64, 12, elements=st.floats(0.0, 1.0))
bits = arrays(np.uint8, 12, elements=st.integers(0, 1))


@settings(max_examples=200, deadline=None)
@given(bits, templates, st.integers(0, 11))
def test_truncation_ignores_background(x, mu, d):
    if mu[d] > 0.5:
        return
    flipped = x.copy()
    flipped[d] ^= 1
    t = truncate_template(mu)
    assert log_likelihood(flipped, t) == log_likelihood(x, t)


@settings(max_examples=200, deadline=None)
@given(bits, templates, st.integers(1, 11))
def test_additive_over_blocks(x, mu, cut):
    whole = log_likelihood(x, mu)
    parts = log_likelihood(x[:cut], mu[:cut]) + log_likelihood(x[cut:], mu[cut:])
    assert whole == pytest.approx(parts, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.01, 0.99), st.integers(0, 1))
def test_mixing_preserves_single_dimension_order(a, b, alpha, bit):
    la, lb = log_likelihood([bit], [a]), log_likelihood([bit], [b])
    ma, mb = log_likelihood([bit], mix_uniform([a], alpha)), log_likelihood([bit], mix_uniform([b], alpha))
    if la < lb - 1e-9:
        assert ma <= mb
    elif lb < la - 1e-9:
        assert mb <= ma
