import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from numindex import numrange as nr
from numindex.errors import DimensionError, NonAbsoluteError, OrthogonalityError
from numindex.spaces import (euclidean, example_3_3, line, lorentz_xp, lp, polytope, section,
                             support_functional, validate_absolute)
from numindex.sums import (BlockVector, SumSpace, check_orthogonality, compress_operator, corollary_sets, inject,
                           koethe_dual, lift_operator, project, sum_from_dict, sum_space, transfer_maps,
                           transfer_operator, transfer_pairings)
from test_spaces import SkewMax

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def test_block_norm_examples():
    x = [3, 4, 1, -1]
    assert sum_space(lp(2, 1), [euclidean(2), lp(2, "inf")]).norm(x) == pytest.approx(6.0)
    assert sum_space(lp(2, "inf"), [euclidean(2), lp(2, "inf")]).norm(x) == pytest.approx(5.0)


def test_one_block_sum_is_isometric():
    X = lorentz_xp(3.0)
    S = sum_space(lp(1, 1), [X])
    for x in np.random.default_rng(0).standard_normal((20, 3)):
        assert S.norm(x) == pytest.approx(X.norm(x), abs=1e-12)


def test_sum_rejects_bad_inputs():
    with pytest.raises(DimensionError):
        sum_space(lp(2, 1), [euclidean(2)])
    with pytest.raises(NonAbsoluteError):
        sum_space(SkewMax(), [line(), line()])
    with pytest.raises(NonAbsoluteError):
        koethe_dual(SkewMax())


def test_inject_examples():
    S = sum_space(lp(2, 1), [euclidean(2), euclidean(2)])
    assert inject(S, 0, [0, 0]).norm() == 0.0
    assert inject(S, 0, [1, 0]).norm() == pytest.approx(1.0)
    L = sum_space(lorentz_xp(1), [line(), line(), line()])
    assert inject(L, 1, [1]).norm() == pytest.approx(1.0)
    with pytest.raises(IndexError):
        inject(S, 2, [1, 0])


def test_equal_blocks_in_linf_sum():
    S = sum_space(lp(2, "inf"), [euclidean(2), euclidean(2)])
    v = BlockVector(S, [[0.6, 0.8], [0.8, -0.6]])
    for k in range(2):
        assert np.linalg.norm(project(S, k, v)) == pytest.approx(v.norm())


SUMS = [sum_space(lp(2, 1), [euclidean(2), lp(2, "inf")]),
        sum_space(lp(3, 3), [line(), lp(2, 1), euclidean(2)]),
        sum_space(lorentz_xp(4), [euclidean(2), lp(2, "inf"), line()]),
        sum_space(example_3_3(), [line(), euclidean(2), line(), lp(2, 1), line()])]


@given(st.sampled_from(SUMS), seeds)
def test_inject_project(S, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(len(S.components)))
    x = rng.standard_normal(S.block_dims[k])
    v = inject(S, k, x)
    np.testing.assert_array_equal(project(S, k, v), x)
    assert v.norm() == pytest.approx(S.components[k].norm(x), rel=1e-12)
    w = rng.standard_normal(S.dim)
    assert S.components[k].norm(project(S, k, w)) <= S.norm(w) + 1e-12


@given(st.sampled_from(SUMS), seeds)
def test_block_norm_axioms(S, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, S.dim))
    a = rng.uniform(-3, 3)
    assert S.norm(a * x) == pytest.approx(abs(a) * S.norm(x), rel=1e-12)
    assert S.norm(x + y) <= S.norm(x) + S.norm(y) + 1e-12


@given(st.sampled_from(SUMS), seeds)
def test_sum_supporting_functional(S, seed):
    sp = support_functional(S, np.random.default_rng(seed).standard_normal(S.dim))
    assert sp.f @ sp.x == pytest.approx(1.0, abs=1e-9)
    assert S.dual_norm(sp.f) == pytest.approx(1.0, abs=1e-6)


def test_koethe_dual_examples():
    assert koethe_dual(lp(3, 1)).norm([1, -2, 0.5]) == pytest.approx(2.0)
    rng = np.random.default_rng(3)
    D = koethe_dual(lp(3, 3))
    for b in rng.standard_normal((10, 3)):
        assert D.norm(b) == pytest.approx(np.sum(np.abs(b) ** 1.5) ** (1 / 1.5), rel=1e-12)
    assert koethe_dual(lorentz_xp(1)).norm([1, 0, 0]) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("E", [lp(3, 1.5), lorentz_xp(2), example_3_3(),
                               polytope(dual_vertices=[[s, t, 0] for s in (-1, 1) for t in (-1, 1)]
                                        + [[0, s, t] for s in (-1, 1) for t in (-1, 1)])])
def test_koethe_dual_is_absolute(E):
    assert validate_absolute(E).passed
    assert validate_absolute(koethe_dual(E), trials=60).passed


@settings(max_examples=12)
@given(seeds)
def test_koethe_bidual_polytopal(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    # an absolute polytope: the absolutely convex hull of sign patterns of a few positive points
    pts = np.abs(rng.standard_normal((3, d))) + 0.1
    pts = pts / pts.max(axis=1, keepdims=True)
    base = np.vstack([pts, np.eye(d)])
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * d)).reshape(d, -1).T
    F = np.vstack([s * base for s in signs])
    E = polytope(dual_vertices=F)
    if not validate_absolute(E).passed:
        return
    E2 = koethe_dual(koethe_dual(E))
    for x in rng.standard_normal((10, d)):
        assert E2.norm(x) == pytest.approx(E.norm(x), abs=1e-9)


@given(seeds, st.sampled_from([1.0, 1.5, 3.0]))
def test_lp_sums_are_associative(seed, p):
    rng = np.random.default_rng(seed)
    X, Y, Z = euclidean(2), lp(2, 1), line()
    nested = sum_space(lp(2, p), [X, sum_space(lp(2, p), [Y, Z])])
    flat = sum_space(lp(3, p), [X, Y, Z])
    for x in rng.standard_normal((10, 5)):
        assert nested.norm(x) == pytest.approx(flat.norm(x), rel=1e-12)


def test_lift_examples():
    S = sum_space(lp(2, 1), [euclidean(2), lp(2, "inf")])
    T = lift_operator(S, 0, np.eye(2))
    np.testing.assert_array_equal(T, np.diag([1.0, 1.0, 0.0, 0.0]))
    assert nr.operator_norm(S, T) == pytest.approx(1.0)
    assert not lift_operator(S, 1, np.zeros((2, 2))).any()
    R = lift_operator(S, 0, [[0, -1], [1, 0]])
    assert nr.numerical_radius_sampled(S, R, 4000).value == pytest.approx(0.0, abs=1e-12)
    assert nr.operator_norm(S, R) == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_array_equal(compress_operator(S, 0, R), [[0, -1], [1, 0]])
    with pytest.raises(DimensionError):
        lift_operator(S, 0, np.eye(3))


def test_orthogonality_examples():
    A, B = corollary_sets("l1", 2)
    assert check_orthogonality(lp(2, 1), A, B).passed
    A, B = corollary_sets("linf", 2)
    assert check_orthogonality(lp(2, "inf"), A, B).passed
    rep = check_orthogonality(lp(2, 2), [[1, 0]], [[2 ** -0.5, 2 ** -0.5]])
    assert not rep.pairs_ok
    assert rep.failures[0].residuals[0] == pytest.approx(2 ** -0.5) or \
        rep.failures[0].product == pytest.approx(2 ** -0.5)
    with pytest.raises(ValueError):
        check_orthogonality(lp(2, 1), np.zeros((0, 2)), B)


def _pair_for(S, rng, kappa, kind):
    """A point/functional pair of the sum obeying the single-coordinate condition at kappa."""
    m = len(S.components)
    if kind == "l1":
        a_coef, b_coef = np.eye(m)[kappa], rng.choice([-1.0, 1.0], m)
    else:
        a_coef, b_coef = rng.choice([-1.0, 1.0], m), np.eye(m)[kappa]
    blocks_a, blocks_b = [], []
    for c, al, bl in zip(S.components, a_coef, b_coef):
        sp = support_functional(c, rng.standard_normal(c.dim))
        blocks_a.append(abs(al) * sp.x * np.sign(al))
        blocks_b.append(abs(bl) * sp.f * np.sign(al if al else 1.0) * np.sign(bl))
    return np.concatenate(blocks_a), np.concatenate(blocks_b)


@given(seeds, st.sampled_from(["l1", "linf"]))
def test_transfer_pairing_identity(seed, kind):
    rng = np.random.default_rng(seed)
    comps = [lp(2, "inf"), euclidean(2), lp(2, 1.5)]
    S = sum_space(lp(3, 1) if kind == "l1" else lp(3, "inf"), comps)
    kappa = int(rng.integers(3))
    a, b = _pair_for(S, rng, kappa, kind)
    T = rng.standard_normal((S.dim, S.dim))
    Sop = transfer_operator(S, T, a, b, kappa)
    maps = transfer_maps(S, a, b, kappa)
    lhs = maps.xstar_kappa @ Sop @ maps.x_kappa
    assert abs(lhs) == pytest.approx(abs(b @ T @ a), abs=1e-9)
    # Psi(z*)(Phi(z)) = 1 on a supporting pair of the block
    sp = support_functional(comps[kappa], rng.standard_normal(comps[kappa].dim))
    one, _, _ = transfer_pairings(S, T, maps, sp.x, sp.f)
    assert one == pytest.approx(1.0, abs=1e-9)


def test_transfer_round_trips():
    rng = np.random.default_rng(7)
    S = sum_space(lp(2, 1), [lp(2, "inf"), lp(2, "inf")])
    a, b = _pair_for(S, rng, 1, "l1")
    maps = transfer_maps(S, a, b, 1)
    S0 = rng.standard_normal((2, 2))
    Sop = transfer_operator(S, lift_operator(S, 1, S0), a, b, 1)
    assert maps.xstar_kappa @ Sop @ maps.x_kappa == pytest.approx(maps.xstar_kappa @ S0 @ maps.x_kappa)
    Id = transfer_operator(S, np.eye(4), a, b, 1)
    assert abs(maps.xstar_kappa @ Id @ maps.x_kappa) == pytest.approx(1.0)


def test_transfer_bound_by_radius():
    rng = np.random.default_rng(11)
    S = sum_space(lp(2, 1), [lp(2, "inf"), lp(2, "inf")])
    T = rng.standard_normal((4, 4))
    vT = nr.numerical_radius_exact(S, T).value
    for _ in range(10):
        kappa = int(rng.integers(2))
        a, b = _pair_for(S, rng, kappa, "l1")
        maps = transfer_maps(S, a, b, kappa)
        Sop = transfer_operator(S, T, a, b, kappa)
        best = nr.numerical_radius_exact(S.components[kappa], Sop)
        _, pairing, _ = transfer_pairings(S, T, maps, best.witness.x, best.witness.f)
        assert abs(pairing) <= vT + 1e-9


def test_transfer_rejects_bad_pair():
    S = sum_space(lp(2, 2), [line(), line()])
    a = np.array([1.0, 0.0])
    b = np.array([2 ** -0.5, 2 ** -0.5])
    with pytest.raises(OrthogonalityError):
        transfer_operator(S, np.eye(2), a, b, 0)


def test_sum_roundtrip():
    S = SUMS[2]
    T = sum_from_dict(S.to_dict())
    assert isinstance(T, SumSpace)
    for x in np.random.default_rng(5).standard_normal((10, S.dim)):
        assert T.norm(x) == pytest.approx(S.norm(x), abs=1e-12)


def test_section_of_sum_not_confused_with_block():
    S = sum_space(lp(2, 1), [euclidean(2), lp(2, "inf")])
    P = section(S, [0, 1])
    for x in np.random.default_rng(9).standard_normal((10, 2)):
        assert P.norm(x) == pytest.approx(np.linalg.norm(x), abs=1e-12)
