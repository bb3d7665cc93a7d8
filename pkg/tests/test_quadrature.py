from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualfield.quadrature import segment_rule, tet_rule, triangle_rule

RULES = {1: segment_rule, 2: triangle_rule, 3: tet_rule}


def barycentric_moment(alpha):
    """Average of prod(lambda_i^alpha_i) over a d-simplex: alpha! d! / (|alpha| + d)!."""
    d = len(alpha) - 1
    num = np.prod([factorial(a) for a in alpha]) * factorial(d)
    return num / factorial(sum(alpha) + d)


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("degree", [1, 2, 3, 5, 6, 10])
def test_weights_normalized_and_points_inside(dim, degree):
    bary, w = RULES[dim](degree)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(w > 0)
    assert np.allclose(bary.sum(axis=1), 1.0, atol=1e-15)
    assert np.all(bary >= -1e-15)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.integers(1, 10), st.data())
def test_rules_integrate_monomials_exactly(dim, degree, data):
    parts = data.draw(st.lists(st.integers(0, degree), min_size=dim + 1, max_size=dim + 1)
                      .filter(lambda a: sum(a) <= degree))
    bary, w = RULES[dim](degree)
    approx = w @ np.prod(bary ** np.array(parts), axis=1)
    assert approx == pytest.approx(barycentric_moment(parts), rel=1e-12)


def test_degree_two_rules_are_the_small_symmetric_ones():
    assert triangle_rule(2)[0].shape == (3, 3)
    assert tet_rule(2)[0].shape == (4, 4)
