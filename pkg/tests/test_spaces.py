import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from numindex.errors import DimensionError, UnsupportedKindError
from numindex.spaces import (EuclideanSpace, LpSpace, MaxOfPairsSpace, NormSpace, PolytopeSpace, dual_norm,
                             euclidean, example_3_2, example_3_2_elements, example_3_3, example_3_3_p4, from_dict,
                             is_cl_space, line, lorentz_xp, lp, norm, parse_space, polytope, section,
                             support_functional, supporting_functionals, validate_absolute)


class SkewMax(NormSpace):
    """max(|x|, |x + y|): a norm that is not absolute."""

    kind = "test_skew"

    def __init__(self):
        super().__init__(2, "skew_max")

    def norms(self, X):
        X = np.atleast_2d(X)
        return np.maximum(np.abs(X[:, 0]), np.abs(X[:, 0] + X[:, 1]))


ZOO = [lp(2, 1), lp(3, "inf"), lp(2, 1.5), lp(3, 3), euclidean(2), example_3_2(), example_3_3(),
       example_3_3_p4(), lorentz_xp(1), lorentz_xp(4), lorentz_xp(16), section(lorentz_xp(8), [0, 1]), line()]


# -- worked values ---------------------------------------------------------------

def test_norm_examples():
    assert norm(example_3_2(), [1, 1, 1]) == pytest.approx(np.sqrt(2), abs=1e-12)
    assert norm(lorentz_xp(1), [1, 0, 0]) == pytest.approx(1.0, abs=1e-12)
    assert norm(example_3_3(), [1, 1, 0, 0, 0]) == pytest.approx(2.0, abs=1e-12)
    for X in ZOO:
        assert norm(X, np.zeros(X.dim)) == 0.0


def test_dual_norm_examples():
    assert dual_norm(lp(2, 1), [1, 1]) == pytest.approx(1.0)
    assert dual_norm(lp(2, 2), [3, 4]) == pytest.approx(5.0)
    assert dual_norm(polytope(primal_vertices=[[1, 1], [1, -1]]), [1, 1]) == pytest.approx(2.0)


def test_support_functional_examples():
    sp = support_functional(lp(2, 2), [0, 2])
    np.testing.assert_allclose(sp.x, [0, 1])
    np.testing.assert_allclose(sp.f, [0, 1])
    np.testing.assert_allclose(support_functional(example_3_2(), [1, 0, 0]).f, [1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(support_functional(lp(2, 1), [1, 1]).f, [1, 1])


def test_support_functional_lexicographic_tie_break():
    # at e1 the l1 ball has supporting functionals (1, s), |s| <= 1; vertices (1, -1) and (1, 1)
    np.testing.assert_allclose(support_functional(lp(2, 1), [1, 0]).f, [1, -1])
    assert supporting_functionals(lp(2, 1), [1, 0]).tolist() == [[1.0, -1.0], [1.0, 1.0]]


def test_support_functional_of_zero_rejected():
    with pytest.raises(ValueError):
        support_functional(lp(2, 2), [0, 0])


def test_dimension_mismatch_and_bad_p():
    with pytest.raises(DimensionError):
        norm(lp(2, 1), [1, 2, 3])
    with pytest.raises(ValueError):
        lp(2, 0.5)
    with pytest.raises(ValueError):
        lorentz_xp(0.9)


def test_validate_absolute_examples():
    assert validate_absolute(example_3_2()).passed
    assert validate_absolute(euclidean(2)).passed
    rep = validate_absolute(SkewMax())
    assert not rep.checks["a"].passed
    assert rep.checks["a"].counterexample is not None


@pytest.mark.parametrize("X", ZOO, ids=lambda X: X.label)
def test_builtin_kinds_are_absolute(X):
    assert validate_absolute(X, trials=100).passed


def test_cl_certificates():
    assert is_cl_space(lp(2, "inf")).certified
    assert is_cl_space(example_3_3()).certified
    res = is_cl_space(example_3_3_p4())
    assert not res.certified
    assert res.violating_face is not None and res.violating_vertex is not None
    with pytest.raises(UnsupportedKindError):
        is_cl_space(euclidean(2))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_cl_certificates_lp(m):
    assert is_cl_space(lp(m, 1)).certified
    assert is_cl_space(lp(m, "inf")).certified


def test_sections():
    rng = np.random.default_rng(1)
    S = section(example_3_2(), [0, 1])
    assert isinstance(S, EuclideanSpace)
    X = lorentz_xp(5.0)
    assert section(X, [0, 1, 2]) is X
    P2 = section(X, [0, 1])
    for x, y in rng.standard_normal((20, 2)):
        expected = 2 ** (-1 / 5) * ((x * x + y * y) ** 2.5 + abs(x) ** 5 + abs(y) ** 5) ** 0.2
        assert P2.norm([x, y]) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DimensionError):
        section(X, [0, 3])


def test_example_3_3_p4_is_coordinate_section():
    rng = np.random.default_rng(2)
    P4 = section(example_3_3(), [0, 1, 2, 3])
    for y in rng.standard_normal((30, 4)):
        assert P4.norm(y) == pytest.approx(example_3_3_p4().norm(y), abs=1e-12)
        assert P4.norm(y) == pytest.approx(example_3_3().norm(np.r_[y, 0.0]), abs=1e-12)


@given(st.integers(0, 10_000))
def test_section_idempotent(seed):
    rng = np.random.default_rng(seed)
    X = [lorentz_xp(3.0), example_3_3(), lp(4, 1.5)][seed % 3]
    coords = sorted(rng.choice(X.dim, size=2, replace=False).tolist())
    S = section(X, coords)
    S2 = section(S, list(range(S.dim)))
    for y in rng.standard_normal((10, S.dim)):
        assert S2.norm(y) == pytest.approx(S.norm(y), abs=1e-12)
        x = np.zeros(X.dim)
        x[coords] = y
        assert S.norm(y) == pytest.approx(X.norm(x), abs=1e-12)


def test_example_3_2_elements_are_unit_pairs():
    xs, fs = example_3_2_elements()
    X = example_3_2()
    assert xs.shape == (8, 3) and fs.shape == (7, 3)
    np.testing.assert_allclose(X.norms(xs), 1.0, atol=1e-12)
    np.testing.assert_allclose(X.dual_norms(fs), 1.0, atol=1e-9)


# -- norm axioms and supporting functionals, property based ----------------------

vec_seeds = st.integers(min_value=0, max_value=2**31 - 1)


@given(st.sampled_from(ZOO), vec_seeds, st.floats(-5, 5, allow_nan=False))
def test_norm_axioms(X, seed, alpha):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, X.dim))
    nx, ny = X.norm(x), X.norm(y)
    assert nx > 0
    assert X.norm(alpha * x) == pytest.approx(abs(alpha) * nx, rel=1e-12, abs=1e-12)
    assert X.norm(x + y) <= nx + ny + 1e-12


@given(st.sampled_from(ZOO), vec_seeds)
def test_support_pair_invariant(X, seed):
    x = np.random.default_rng(seed).standard_normal(X.dim)
    sp = support_functional(X, x)
    assert X.norm(sp.x) == pytest.approx(1.0, abs=1e-12)
    assert sp.f @ sp.x == pytest.approx(1.0, abs=1e-9)
    assert X.dual_norm(sp.f) == pytest.approx(1.0, abs=1e-6)


@given(st.sampled_from([lp(2, 1), lp(3, "inf"), example_3_3(), lp(3, 3), euclidean(3)]), vec_seeds)
def test_support_pair_exact_for_polytope_and_lp(X, seed):
    sp = support_functional(X, np.random.default_rng(seed).standard_normal(X.dim))
    assert sp.slack <= 1e-12
    assert X.dual_norm(sp.f) == pytest.approx(1.0, abs=1e-12)


@given(st.sampled_from([example_3_2(), lorentz_xp(4), lorentz_xp(1.5)]), vec_seeds)
def test_dual_support_attains(X, seed):
    f = np.random.default_rng(seed).standard_normal(X.dim)
    x = X.dual_support(f)
    assert X.norm(x) == pytest.approx(1.0, abs=1e-7)
    assert f @ x == pytest.approx(X.dual_norm(f), rel=1e-7)


# -- serialisation ------------------------------------------------------------------

@pytest.mark.parametrize("X", ZOO, ids=lambda X: X.label)
def test_descriptor_roundtrip(X):
    doc = json.loads(json.dumps(X.to_dict()))
    Y = from_dict(doc)
    assert Y.dim == X.dim and Y.kind == X.kind
    for x in np.random.default_rng(0).standard_normal((10, X.dim)):
        assert Y.norm(x) == pytest.approx(X.norm(x), abs=1e-12)


def test_shorthand_names():
    assert parse_space("linf^2").is_polytope and isinstance(parse_space("example_3_3"), PolytopeSpace)
    assert isinstance(parse_space("l1.5^3"), LpSpace) and parse_space("l1.5^3").p == 1.5
    assert isinstance(parse_space("example_3_2"), MaxOfPairsSpace)
    assert parse_space("example_3_2|0,1").dim == 2
    assert parse_space("R").dim == 1
    with pytest.raises(ValueError):
        parse_space("nonsense")
    with pytest.raises(ValueError):
        from_dict({"dim": 2})
