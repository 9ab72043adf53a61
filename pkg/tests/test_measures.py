import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wassflow.errors import ConfigError, LengthMismatch, NonpositiveReference, ShapeMismatch
from wassflow.measures import (as_measure, kl_divergence, negative_entropy, transport_cost,
                               tv_distance)


def test_as_measure_rejects_off_simplex_without_renormalizing():
    with pytest.raises(ConfigError, match="simplex violation"):
        as_measure([0.5, 0.4])
    with pytest.raises(ConfigError, match="simplex violation"):
        as_measure([1.2, -0.2])
    with pytest.raises(ConfigError, match="length"):
        as_measure([0.5, 0.5], n=3)
    v = as_measure([0.25, 0.75], n=2)
    assert not v.flags.writeable


def test_tv_examples():
    assert tv_distance([1, 0], [0, 1]) == 1.0
    assert tv_distance([0.5, 0.5, 0], [0.5, 0.25, 0.25]) == pytest.approx(0.25)
    with pytest.raises(LengthMismatch):
        tv_distance([1.0], [0.5, 0.5])


def test_kl_known_values():
    # [DERIVED] sum p ln(p/q) - p + q by hand
    p = np.array([[0.5, 0.0], [0.25, 0.25]])
    q = np.array([[0.25, 0.25], [0.25, 0.25]])
    expected = 0.5 * math.log(2) - 1.0 + 1.0
    assert kl_divergence(p, q) == pytest.approx(expected)
    assert kl_divergence(q, q) == 0.0
    with pytest.raises(NonpositiveReference):
        kl_divergence(p, p)
    with pytest.raises(ShapeMismatch):
        kl_divergence(p, np.ones(3))


@given(arrays(np.float64, 6, elements=st.floats(0, 3)), arrays(np.float64, 6, elements=st.floats(0.01, 3)))
def test_kl_nonnegative(p, q):
    assert kl_divergence(p, q) >= -1e-12


def test_entropy_and_cost():
    pi = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert negative_entropy(pi) == pytest.approx(math.log(0.5) - 1.0)
    cost = np.array([[0.0, np.inf], [np.inf, 0.0]])
    # infinite costs on empty entries do not poison the sum
    assert transport_cost(pi, cost) == 0.0
