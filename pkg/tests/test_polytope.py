import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from numindex.polytope import (DegeneratePolytopeError, PolytopeBall, extreme_points, in_convex_hull,
                               polar_vertices, unique_rows)
from numindex.spaces import example_3_3, l1_ball, lp


def gauge_lp(x, P):
    """inf{t > 0 : x in t conv(P)} as a linear program over convex weights."""
    k = len(P)
    # variables: weights w (k), t; minimise t subject to P^T w = x, sum w = t
    c = np.r_[np.zeros(k), 1.0]
    A_eq = np.vstack([np.c_[P.T, np.zeros(P.shape[1])], np.r_[np.ones(k), -1.0]])
    b_eq = np.r_[x, 0.0]
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.fun


def test_unique_rows_sorted_and_deduplicated():
    pts = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1e-14], [-0.0, 1.0]])
    out = unique_rows(pts)
    assert out.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_l1_polar_is_cube():
    P = polar_vertices(np.eye(3))
    assert sorted(map(tuple, P)) == sorted(itertools.product((-1.0, 1.0), repeat=3))


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_qhull_and_brute_force_agree(dim):
    rng = np.random.default_rng(dim)
    F = extreme_points(rng.standard_normal((2 * dim + 3, dim)))
    a = polar_vertices(F, method="qhull")
    b = polar_vertices(F, method="brute")
    assert a.shape == b.shape
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_example_3_3_vertices_are_polar():
    ball = example_3_3().ball
    np.testing.assert_allclose(polar_vertices(ball.dual_vertices), ball.primal_vertices, atol=1e-12)
    np.testing.assert_allclose(polar_vertices(ball.primal_vertices), ball.dual_vertices, atol=1e-12)


def test_ball_checks_symmetry_and_pairing():
    with pytest.raises(DegeneratePolytopeError):
        PolytopeBall([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(DegeneratePolytopeError):
        PolytopeBall([[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]], l1_ball(2).primal_vertices)
    with pytest.raises(DegeneratePolytopeError):
        PolytopeBall([[1.0]], [[1.0]])


def test_admissible_pairs_linf():
    ball = lp(2, "inf").ball
    i, j = ball.admissible_pairs()
    # four vertices, each on two facets
    assert len(i) == 8
    np.testing.assert_allclose(np.sum(ball.primal_vertices[i] * ball.dual_vertices[j], axis=1), 1.0)


def test_in_convex_hull():
    sq = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    assert in_convex_hull(np.array([0.3, -0.9]), sq)
    assert not in_convex_hull(np.array([1.1, 0.0]), sq)


@given(st.integers(min_value=2, max_value=4), st.integers(min_value=0, max_value=10_000))
def test_polytope_norm_matches_gauge_oracle(dim, seed):
    rng = np.random.default_rng(seed)
    ball = PolytopeBall.from_dual(rng.standard_normal((dim + 3, dim)))
    for x in rng.standard_normal((5, dim)):
        via_dual = np.max(ball.dual_vertices @ x)
        assert via_dual == pytest.approx(gauge_lp(x, ball.primal_vertices), abs=1e-9)
