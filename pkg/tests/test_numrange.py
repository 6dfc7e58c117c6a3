import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from numindex import numrange as nr
from numindex.errors import DimensionError, UnsupportedKindError
from numindex.polytope import PolytopeBall
from numindex.spaces import (PolytopeSpace, euclidean, example_3_2, example_3_3, example_3_3_p4, lorentz_xp, lp,
                             section)
from numindex.sums import lift_operator, sum_space

seeds = st.integers(min_value=0, max_value=2**31 - 1)
SHIFT = np.array([[0.0, 1.0], [0.0, 0.0]])
ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def lp2_index_oracle(p, n=200_001):
    """max over t in [0, 1] of |t^(p-1) - t| / (1 + t^p), the known value of n(l_p^2)."""
    t = np.linspace(0.0, 1.0, n)
    return float(np.max(np.abs(t ** (p - 1) - t) / (1 + t ** p)))


def polygon_radius_oracle(ball, T, per_edge=2000):
    """Dense walk along every edge of a planar polytope, each point paired with all exposing functionals."""
    P, F = ball.primal_vertices, ball.dual_vertices
    best = 0.0
    for f in F:
        face = P[np.abs(P @ f - 1.0) <= 1e-10]
        a, b = face[0], face[-1]
        t = np.linspace(0.0, 1.0, per_edge)[:, None]
        pts = (1 - t) * a + t * b
        best = max(best, float(np.max(np.abs((pts @ T.T) @ f))))
    return best


def rotation_radius_oracle(X, n=200_000):
    """v of the quarter turn on a smooth planar norm from a fine angle grid."""
    th = np.linspace(0.0, np.pi / 2, n)
    U = np.c_[np.cos(th), np.sin(th)]
    U = U / X.norms(U)[:, None]
    F = X.support_functionals(U)
    return float(np.max(np.abs(np.einsum("kd,kd->k", F, U @ ROT.T))))


def max_of_pairs_radius_oracle(T, rng, slack, n=400_000):
    """Random points of the sphere paired with every piece gradient whose piece is within slack of active.

    With slack 0 only genuine pairs count (a lower bound on v); a positive slack
    admits nearly supporting functionals and so overshoots v by O(slack).
    """
    U = rng.standard_normal((n, 3))
    S = U * U
    P = np.sqrt(S[:, [0, 0, 1]] + S[:, [1, 2, 2]])
    m = P.max(axis=1)
    U, P = U / m[:, None], P / m[:, None]
    best = 0.0
    for k, (i, j) in enumerate([(0, 1), (0, 2), (1, 2)]):
        G = np.zeros_like(U)
        G[:, i], G[:, j] = U[:, i] / P[:, k], U[:, j] / P[:, k]
        v = np.abs(np.einsum("kd,kd->k", G, U @ T.T))
        best = max(best, float(v[P[:, k] >= 1 - slack].max(initial=0.0)))
    return best


# -- operator norm ----------------------------------------------------------------

def test_operator_norm_examples():
    for X in (lp(2, 1), euclidean(3), example_3_2(), lorentz_xp(3)):
        assert nr.operator_norm(X, np.eye(X.dim)) == pytest.approx(1.0, abs=1e-9)
    assert nr.operator_norm(lp(2, "inf"), SHIFT) == pytest.approx(1.0)
    assert nr.operator_norm(lp(2, 2), np.diag([2.0, 3.0])) == pytest.approx(3.0)
    with pytest.raises(DimensionError):
        nr.operator_norm(lp(2, 1), np.eye(3))


@given(seeds)
def test_operator_norm_sampled_close_to_lp_oracle(seed):
    # l_p -> l_p norm of a 2x2 matrix from a dense angle grid
    rng = np.random.default_rng(seed)
    X = lp(2, 3)
    T = rng.standard_normal((2, 2))
    th = np.linspace(0, np.pi, 100_001)
    U = np.c_[np.cos(th), np.sin(th)]
    oracle = float(np.max(X.norms(U @ T.T) / X.norms(U)))
    est = nr.operator_norm(X, T)
    assert est <= oracle + 1e-9
    assert est == pytest.approx(oracle, rel=1e-6)


# -- numerical radius -----------------------------------------------------------------

def test_exact_radius_examples():
    r = nr.numerical_radius_exact(lp(2, "inf"), SHIFT)
    assert r.value == 1.0 and r.gap_bound == 0.0 and r.method == "exact_vertex"
    np.testing.assert_array_equal(r.witness.x, [1, 1])
    np.testing.assert_array_equal(r.witness.f, [1, 0])
    assert nr.numerical_radius_exact(example_3_3(), np.eye(5)).value == pytest.approx(1.0)
    r = nr.numerical_radius_exact(lp(2, 1), ROT)
    assert r.value == 1.0
    np.testing.assert_array_equal(r.witness.x, [1, 0])
    np.testing.assert_array_equal(r.witness.f, [1, 1])
    with pytest.raises(UnsupportedKindError):
        nr.numerical_radius_exact(euclidean(2), ROT)


def test_sampled_radius_examples():
    assert nr.numerical_radius_sampled(euclidean(2), ROT, 1000).value == pytest.approx(0.0, abs=1e-15)
    assert nr.numerical_radius_sampled(lorentz_xp(4), np.eye(3), 500).value == pytest.approx(1.0, abs=1e-9)
    r = nr.numerical_radius_sampled(lp(2, "inf"), SHIFT, 10_000)
    assert abs(r.value - 1.0) <= 1e-2
    with pytest.raises(ValueError):
        nr.numerical_radius_sampled(lp(2, 1), SHIFT, 0)


def test_hilbert_closed_form():
    rng = np.random.default_rng(4)
    for _ in range(20):
        T = rng.standard_normal((3, 3))
        r = nr.numerical_radius(euclidean(3), T)
        assert r.method == "exact_hilbert"
        s = nr.numerical_radius_sampled(euclidean(3), T, 5000)
        assert s.value <= r.value + 1e-12
        assert s.value == pytest.approx(r.value, abs=1e-6)


@given(st.sampled_from([lp(2, 1), lp(2, "inf"), example_3_3(), lp(3, 1), lp(3, "inf")]), seeds)
def test_radius_value_matches_witness(X, seed):
    T = np.random.default_rng(seed).standard_normal((X.dim, X.dim))
    for r in (nr.numerical_radius_exact(X, T), nr.numerical_radius_sampled(X, T, 500, seed)):
        assert r.value == pytest.approx(abs(r.witness.f @ T @ r.witness.x), abs=1e-12)
        assert X.norm(r.witness.x) == pytest.approx(1.0, abs=1e-12)
        assert r.witness.f @ r.witness.x == pytest.approx(1.0, abs=1e-9)


@given(st.sampled_from([lp(2, 1), lp(3, "inf"), example_3_3(), example_3_3_p4()]), seeds,
       st.floats(-4, 4, allow_nan=False))
def test_radius_is_seminorm_below_norm(X, seed, alpha):
    rng = np.random.default_rng(seed)
    T, S = rng.standard_normal((2, X.dim, X.dim))
    v = lambda A: nr.numerical_radius_exact(X, A).value  # noqa: E731
    assert v(alpha * T) == pytest.approx(abs(alpha) * v(T), rel=1e-12, abs=1e-12)
    assert v(T + S) <= v(T) + v(S) + 2e-9
    assert v(T) <= nr.operator_norm(X, T) + 1e-12


@settings(max_examples=15)
@given(st.sampled_from([lp(2, 3), example_3_2(), lorentz_xp(6), euclidean(3)]), seeds)
def test_sampled_radius_below_norm(X, seed):
    T = np.random.default_rng(seed).standard_normal((X.dim, X.dim))
    assert nr.numerical_radius_sampled(X, T, 1000, seed).value <= nr.operator_norm(X, T) + 1e-12


@given(seeds)
def test_exact_radius_matches_polygon_walk(seed):
    rng = np.random.default_rng(seed)
    ball = PolytopeBall.from_dual(rng.standard_normal((int(rng.integers(2, 5)), 2)))
    if len(ball.primal_vertices) > 8:
        return
    X = PolytopeSpace(ball)
    T = rng.standard_normal((2, 2))
    assert nr.numerical_radius_exact(X, T).value == pytest.approx(polygon_radius_oracle(ball, T), abs=1e-6)


def test_sampled_radius_from_below_on_polytopes():
    rng = np.random.default_rng(8)
    for X in (lp(3, 1), lp(3, "inf"), example_3_3()):
        for _ in range(5):
            T = rng.standard_normal((X.dim, X.dim))
            ex = nr.numerical_radius_exact(X, T).value
            sa = nr.numerical_radius_sampled(X, T, 5_000).value
            assert ex - 1e-2 <= sa <= ex + 1e-12


def test_max_of_pairs_radius_between_oracles():
    rng = np.random.default_rng(32)
    X = example_3_2()
    for _ in range(10):
        T = rng.standard_normal((3, 3))
        est = nr.numerical_radius(X, T)
        assert X.norm(est.witness.x) == pytest.approx(1.0, abs=1e-12)
        assert est.witness.slack <= 1e-12
        assert X.dual_norm(est.witness.f) == pytest.approx(1.0, abs=1e-9)
        assert abs(est.witness.f @ T @ est.witness.x) == pytest.approx(est.value, abs=1e-12)
        assert max_of_pairs_radius_oracle(T, rng, 0.0) <= est.value + 1e-12
        # ridge maxima are hit by the scan but only approached by random points
        assert est.value <= max_of_pairs_radius_oracle(T, rng, 1e-2) + 1e-2


# -- operator files ---------------------------------------------------------------------

def test_operator_io(tmp_path):
    T = np.array([[1.0, -2.5], [1e-17, 3.0]])
    for name in ("op.csv", "op.json"):
        nr.save_operator(T, tmp_path / name)
        np.testing.assert_array_equal(nr.load_operator(tmp_path / name), T)
    (tmp_path / "bad.csv").write_text("1,2\n3\n")
    with pytest.raises((DimensionError, ValueError)):
        nr.load_operator(tmp_path / "bad.csv")
    (tmp_path / "rect.json").write_text(json.dumps([[1, 2, 3], [4, 5, 6]]))
    with pytest.raises(DimensionError):
        nr.load_operator(tmp_path / "rect.json")


# -- zero-radius certificate ------------------------------------------------------------

def test_example_3_2_certificate():
    cert = nr.zero_radius_certificate(example_3_2(), nr.example_3_2_pairs())
    assert cert.certified and cert.rank == 9 and cert.n_pairs == 10
    assert cert.bound == pytest.approx(0.019161620221, abs=1e-11)


def test_example_3_2_pair_x4_forces_antisymmetry():
    pairs = nr.example_3_2_pairs()
    row = nr.constraint_matrix([pairs[3]])[0].reshape(3, 3)
    # f(Tx) = (a12 + a21) / 2 for x = f = (1, 1, 0)/sqrt(2)
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 0] = 0.5
    expected[0, 0] = expected[1, 1] = 0.5
    np.testing.assert_allclose(row, expected, atol=1e-12)


def test_euclidean_pairs_leave_skew_kernel():
    s = 2 ** -0.5
    pairs = [([1, 0], [1, 0]), ([0, 1], [0, 1]), ([s, s], [s, s])]
    cert = nr.zero_radius_certificate(euclidean(2), pairs)
    assert not cert.certified
    K = cert.kernel / np.abs(cert.kernel).max()
    np.testing.assert_allclose(K + K.T, 0.0, atol=1e-12)
    assert "impossible" in cert.reason
    pairs.append(([-s, s], [-s, s]))
    cert = nr.zero_radius_certificate(euclidean(2), pairs)
    assert not cert.certified and cert.rank == 3


def test_certificate_rejects_non_pairs():
    with pytest.raises(ValueError):
        nr.zero_radius_certificate(lp(2, 1), [([1, 0], [1, 0.5]), ([1, 1], [1, 1])])


@pytest.mark.parametrize("X", [example_3_2(), lp(2, 3), lp(3, 1.5), lorentz_xp(4)], ids=lambda X: X.label)
def test_certificate_soundness(X):
    cert = nr.default_certificate(X)
    assert cert is not None and cert.certified
    rng = np.random.default_rng(21)
    for _ in range(50):
        T = rng.standard_normal((X.dim, X.dim))
        T /= nr.operator_norm(X, T)
        assert nr.numerical_radius(X, T, 2000).value >= cert.bound - 1e-9


def test_certificate_soundness_polytope():
    X = example_3_3_p4()
    cert = nr.default_certificate(X)
    assert cert.certified
    rng = np.random.default_rng(22)
    for _ in range(50):
        T = rng.standard_normal((4, 4))
        assert nr.ratio_of(X, T) >= cert.bound - 1e-9


# -- index estimates ---------------------------------------------------------------------

def test_index_euclidean_plane():
    est = nr.numerical_index(euclidean(2), restarts=8)
    assert est.upper <= 1e-6
    W = est.witness / np.abs(est.witness).max()
    np.testing.assert_allclose(W + W.T, 0.0, atol=1e-5)


def test_index_cl_and_lp():
    est = nr.numerical_index(lp(2, "inf"))
    assert (est.lower, est.upper, est.certificate) == (1.0, 1.0, "cl_space")
    est = nr.numerical_index(example_3_3_p4())
    assert est.certificate == "polytope_lp"
    assert est.lower == pytest.approx(0.5, abs=1e-9) and est.upper == pytest.approx(0.5, abs=1e-9)
    assert nr.ratio_of(example_3_3_p4(), est.witness) == pytest.approx(est.upper, abs=1e-9)


def test_pattern_search_agrees_with_lp_on_p4():
    X = example_3_3_p4()
    lp_val = nr.numerical_index(X).upper
    srch = nr.numerical_index(X, restarts=6, method="search", certify=False)
    assert srch.upper >= lp_val - 1e-9
    assert srch.upper <= lp_val + 5e-3


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_index_lp_plane_matches_closed_form(p):
    est = nr.numerical_index(lp(2, p), restarts=6)
    oracle = lp2_index_oracle(p)
    assert est.upper >= oracle - 1e-6
    assert est.upper <= oracle + 5e-3
    assert 0 < est.lower <= est.upper


@pytest.mark.parametrize("p", [8.0, 32.0])
def test_lorentz_section_rotation_oracle(p):
    X = section(lorentz_xp(p), [0, 1])
    est = nr.numerical_index(X, restarts=2)
    oracle = rotation_radius_oracle(X)
    # the quarter turn is an isometry, so its ratio is its radius
    assert nr.operator_norm(X, ROT) == pytest.approx(1.0, abs=1e-9)
    assert est.upper <= oracle + 1e-6


def test_index_upper_reproducible_from_witness():
    for X in (lp(2, 3), example_3_2(), section(example_3_2(), [0, 1])):
        est = nr.numerical_index(X, restarts=2)
        assert nr.ratio_of(X, est.witness, est.details.get("n_samples", nr.EVAL_SAMPLES)) == \
            pytest.approx(est.upper, abs=1e-9)
        assert est.lower <= est.upper + 1e-9


def test_index_is_deterministic_across_thread_counts(monkeypatch):
    X = lp(2, 3)
    monkeypatch.setenv("NUMINDEX_THREADS", "1")
    a = nr.numerical_index(X, restarts=3, seed=5)
    monkeypatch.setenv("NUMINDEX_THREADS", "3")
    b = nr.numerical_index(X, restarts=3, seed=5)
    assert a.upper == b.upper
    np.testing.assert_array_equal(a.witness, b.witness)


def test_sum_index_from_components():
    S = sum_space(lp(2, 1), [euclidean(2), lp(2, "inf")])
    est = nr.numerical_index(S, restarts=4)
    assert est.method == "lifted_components"
    assert est.upper <= 1e-6
    # a sum of polytopal blocks is polytopal and goes to the linear programs
    S = sum_space(lp(2, 1), [lp(2, "inf"), example_3_3_p4()])
    est = nr.numerical_index(S, restarts=2)
    assert est.certificate == "polytope_lp"
    assert est.lower == pytest.approx(0.5, abs=1e-9) and est.upper == pytest.approx(0.5, abs=1e-9)
    S = sum_space(lp(2, "inf"), [lp(1, 1), lp(2, 3)])
    est = nr.numerical_index(S, restarts=2)
    assert est.certificate == "theorem_transfer"
    assert 0 < est.lower <= est.upper
    assert est.upper == pytest.approx(lp2_index_oracle(3.0), abs=5e-3)


def test_index_dimension_one_and_bad_restarts():
    est = nr.numerical_index(lp(1, 3))
    assert est.upper == est.lower == 1.0
    with pytest.raises(ValueError):
        nr.numerical_index(lp(2, 3), restarts=0)


@settings(max_examples=15)
@given(seeds)
def test_lift_isometry_and_radius(seed):
    rng = np.random.default_rng(seed)
    comps = [lp(2, "inf"), lp(2, 1), example_3_3_p4()]
    S = sum_space(lp(3, 1) if seed % 2 else lp(3, "inf"), comps)
    k = int(rng.integers(3))
    A = rng.standard_normal((comps[k].dim, comps[k].dim))
    T = lift_operator(S, k, A)
    assert nr.operator_norm(S, T) == pytest.approx(nr.operator_norm(comps[k], A), abs=1e-9)
    assert nr.numerical_radius_exact(S, T).value <= nr.numerical_radius_exact(comps[k], A).value + 1e-9
