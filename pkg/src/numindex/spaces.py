"""Finite-dimensional real normed spaces given by norm oracles.

Every space works on batches: ``norms`` and ``support_functionals`` take an
``(n, dim)`` array.  Single-vector helpers wrap the batch versions.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionError, UnsupportedKindError
from .polytope import PolytopeBall, in_convex_hull, unique_rows, extreme_points, polar_vertices

TIE_TOL = 1e-12
SUPPORT_TOL = 1e-9


def as_vector(x, dim: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"expected a flat vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"vector has dimension {v.shape[0]}, space has dimension {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def _rows(X, dim: int) -> np.ndarray:
    A = np.atleast_2d(np.asarray(X, dtype=float))
    if A.shape[1] != dim:
        raise DimensionError(f"rows have dimension {A.shape[1]}, space has dimension {dim}")
    return A


@dataclass(frozen=True)
class SupportPair:
    """A point of the unit sphere and a norm-one functional attaining 1 on it."""

    x: np.ndarray
    f: np.ndarray
    slack: float

    def value(self, T: np.ndarray) -> float:
        return float(self.f @ (T @ self.x))

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "f": self.f.tolist(), "slack": self.slack}


class NormSpace:
    """Base class for a norm on R^dim.

    Subclasses implement ``norms`` and ``support_functionals``.  Dual norms and
    norm-attaining points default to a multi-start ascent of ``<g,u>/||u||``,
    which has no spurious local maxima because its superlevel sets are convex
    cones.
    """

    kind: str = "abstract"

    def __init__(self, dim: int, label: str = ""):
        if int(dim) < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        self.label = label or self.kind

    def __repr__(self) -> str:
        return f"{type(self).__name__}(label={self.label!r}, dim={self.dim})"

    # -- batch oracles -------------------------------------------------
    def norms(self, X) -> np.ndarray:
        raise NotImplementedError

    def support_functionals(self, X) -> np.ndarray:
        raise NotImplementedError

    def supporting_set(self, x) -> np.ndarray:
        """Extreme supporting functionals at ``x`` (one row when the norm is smooth there)."""
        return self.support_functionals(as_vector(x, self.dim)[None, :])

    def dual_norms(self, F) -> np.ndarray:
        F = _rows(F, self.dim)
        X = self.dual_supports(F)
        return np.einsum("ij,ij->i", F, X)

    def dual_supports(self, F) -> np.ndarray:
        F = _rows(F, self.dim)
        return np.array([self._ascent_dual_support(g) for g in F])

    # -- polytope data -------------------------------------------------
    @property
    def ball(self) -> PolytopeBall | None:
        return None

    @property
    def is_polytope(self) -> bool:
        return self.ball is not None

    # -- single-vector helpers -----------------------------------------
    def norm(self, x) -> float:
        return float(self.norms(as_vector(x, self.dim)[None, :])[0])

    def dual_norm(self, f) -> float:
        return float(self.dual_norms(as_vector(f, self.dim)[None, :])[0])

    def dual_support(self, f) -> np.ndarray:
        return self.dual_supports(as_vector(f, self.dim)[None, :])[0]

    def unit(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        return x / self.norm(x)

    # -- serialisation -------------------------------------------------
    def parameters(self) -> dict[str, Any]:
        return {}

    def to_dict(self) -> dict[str, Any]:
        doc = {"label": self.label, "dim": self.dim, "kind": self.kind, "parameters": self.parameters()}
        return doc

    # -- generic numerics ----------------------------------------------
    def _ascent_dual_support(self, g: np.ndarray, starts: int = 1) -> np.ndarray:
        # a local maximum of g over the boundary of a convex ball is global, so one start suffices
        if not np.any(g):
            e = np.zeros(self.dim)
            e[0] = 1.0
            return e / self.norm(e)
        rng = np.random.default_rng(0)
        U = np.vstack([g, np.eye(self.dim), -np.eye(self.dim), rng.standard_normal((64 * self.dim, self.dim))])
        U = U / self.norms(U)[:, None]
        vals = U @ g
        best_u, best = U[np.argmax(vals)], vals.max()
        for u0 in U[np.argsort(-vals)[:starts]]:
            u = _nelder_mead_max(lambda u: (g @ u) / self._safe_norm(u), u0)
            u = u / self.norm(u)
            if g @ u > best:
                best_u, best = u, g @ u
        return best_u

    def _safe_norm(self, u) -> float:
        n = self.norms(u[None, :])[0]
        return n if n > 0 else np.inf


def _nelder_mead_max(fun, x0, xatol=1e-12, fatol=1e-15) -> np.ndarray:
    d = len(x0)
    res = minimize(lambda u: -fun(u), x0, method="Nelder-Mead",
                   options={"xatol": xatol, "fatol": fatol, "maxiter": 2000 * d, "maxfev": 4000 * d,
                            "adaptive": d > 2})
    return res.x


def _first_attaining(vals: np.ndarray, tol: float = TIE_TOL) -> np.ndarray:
    """Per row, the first column whose value is within tol of the row max."""
    m = vals.max(axis=1, keepdims=True)
    return np.argmax(vals >= m - tol * np.maximum(1.0, np.abs(m)), axis=1)


class PolytopeSpace(NormSpace):
    """Norm whose unit ball is a polytope given by primal and dual vertices."""

    kind = "polytope"

    def __init__(self, ball: PolytopeBall, label: str = "", kind: str | None = None):
        super().__init__(ball.dim, label or (kind or "polytope"))
        self._ball = ball
        if kind is not None:
            self.kind = kind

    @property
    def ball(self) -> PolytopeBall:
        return self._ball

    def norms(self, X) -> np.ndarray:
        return np.max(_rows(X, self.dim) @ self._ball.dual_vertices.T, axis=1)

    def support_functionals(self, X) -> np.ndarray:
        F = self._ball.dual_vertices
        return F[_first_attaining(_rows(X, self.dim) @ F.T)]

    def supporting_set(self, x, tol: float = 1e-10) -> np.ndarray:
        x = as_vector(x, self.dim)
        vals = self._ball.dual_vertices @ x
        return self._ball.dual_vertices[vals >= vals.max() - tol * max(1.0, abs(vals.max()))]

    def dual_norms(self, F) -> np.ndarray:
        return np.max(_rows(F, self.dim) @ self._ball.primal_vertices.T, axis=1)

    def dual_supports(self, F) -> np.ndarray:
        P = self._ball.primal_vertices
        return P[_first_attaining(_rows(F, self.dim) @ P.T)]

    def to_dict(self) -> dict[str, Any]:
        doc = super().to_dict()
        doc["primal_vertices"] = self._ball.primal_vertices.tolist()
        doc["dual_vertices"] = self._ball.dual_vertices.tolist()
        return doc


class LpSpace(NormSpace):
    """The l_p norm on R^dim, 1 <= p <= inf."""

    kind = "lp"

    def __init__(self, dim: int, p: float, label: str = ""):
        p = float(p)
        if not p >= 1.0:
            raise ValueError(f"l_p needs p >= 1, got {p}")
        super().__init__(dim, label or f"l{_fmt_p(p)}^{dim}")
        self.p = p

    @property
    def q(self) -> float:
        if self.p == 1.0:
            return np.inf
        if np.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    @cached_property
    def _polytope(self) -> PolytopeBall | None:
        if self.p == 1.0:
            return l1_ball(self.dim)
        if np.isinf(self.p):
            return l1_ball(self.dim).polar()
        return None

    @property
    def ball(self) -> PolytopeBall | None:
        return self._polytope

    def parameters(self) -> dict[str, Any]:
        return {"p": _json_p(self.p)}

    def norms(self, X) -> np.ndarray:
        return np.linalg.norm(_rows(X, self.dim), ord=self.p, axis=1)

    def support_functionals(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        if self.ball is not None:
            F = self.ball.dual_vertices
            return F[_first_attaining(X @ F.T)]
        return _lp_gradient(X, self.p)

    def supporting_set(self, x) -> np.ndarray:
        if self.ball is not None:
            return PolytopeSpace(self.ball).supporting_set(x)
        return super().supporting_set(x)

    def dual_norms(self, F) -> np.ndarray:
        return np.linalg.norm(_rows(F, self.dim), ord=self.q, axis=1)

    def dual_supports(self, F) -> np.ndarray:
        F = _rows(F, self.dim)
        if self.ball is not None:
            P = self.ball.primal_vertices
            return P[_first_attaining(F @ P.T)]
        return _lp_gradient(F, self.q)


class EuclideanSpace(LpSpace):
    kind = "euclidean"

    def __init__(self, dim: int, label: str = ""):
        super().__init__(dim, 2.0, label or f"euclidean^{dim}")

    def parameters(self) -> dict[str, Any]:
        return {}


def _lp_gradient(X: np.ndarray, p: float) -> np.ndarray:
    n = np.linalg.norm(X, ord=p, axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.sign(X) * (np.abs(X) / n) ** (p - 1.0)
    return np.nan_to_num(G)


def _fmt_p(p: float) -> str:
    return "inf" if np.isinf(p) else f"{p:g}"


def _json_p(p: float):
    return "inf" if np.isinf(p) else p


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "∞"):
            return np.inf
        return float(p)
    return float(p)


PAIRS_3 = ((0, 1), (0, 2), (1, 2))


class MaxOfPairsSpace(NormSpace):
    """``max{sqrt(x^2+y^2), sqrt(x^2+z^2), sqrt(y^2+z^2)}`` on R^3."""

    kind = "example_3_2"

    def __init__(self, label: str = ""):
        super().__init__(3, label or "example_3_2")

    def _pieces(self, X: np.ndarray) -> np.ndarray:
        S = X * X
        return np.sqrt(S[:, [0, 0, 1]] + S[:, [1, 2, 2]])

    def _piece_gradients(self, X: np.ndarray, k: int) -> np.ndarray:
        i, j = PAIRS_3[k]
        G = np.zeros_like(X)
        G[:, i], G[:, j] = X[:, i], X[:, j]
        n = np.hypot(X[:, i], X[:, j])[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.nan_to_num(G / n)

    def norms(self, X) -> np.ndarray:
        return self._pieces(_rows(X, 3)).max(axis=1)

    def support_functionals(self, X) -> np.ndarray:
        X = _rows(X, 3)
        pieces = self._pieces(X)
        cands = np.stack([self._piece_gradients(X, k) for k in range(3)], axis=1)
        m = pieces.max(axis=1, keepdims=True)
        alive = pieces >= m * (1 - TIE_TOL)
        # lexicographically smallest active candidate, one coordinate at a time
        for c in range(X.shape[1]):
            col = np.where(alive, cands[:, :, c], np.inf)
            alive &= col <= col.min(axis=1, keepdims=True)
        return cands[np.arange(len(X)), np.argmax(alive, axis=1)]

    def supporting_set(self, x, tol: float = 1e-9) -> np.ndarray:
        x = as_vector(x, 3)[None, :]
        pieces = self._pieces(x)[0]
        active = pieces >= pieces.max() * (1 - tol)
        return unique_rows(np.vstack([self._piece_gradients(x, k) for k in range(3) if active[k]]))

    def dual_supports(self, F) -> np.ndarray:
        F = _rows(F, 3)
        cons = []
        for i, j in PAIRS_3:
            cons.append({"type": "ineq",
                         "fun": lambda x, i=i, j=j: 1.0 - x[i] ** 2 - x[j] ** 2,
                         "jac": lambda x, i=i, j=j: -2.0 * _pick(x, (i, j))})
        return np.array([_slsqp_support(self, g, cons) for g in F])


def _pick(x: np.ndarray, idx) -> np.ndarray:
    out = np.zeros_like(x)
    out[list(idx)] = x[list(idx)]
    return out


def _slsqp_support(space: NormSpace, g: np.ndarray, cons) -> np.ndarray:
    """Maximize <g, x> over the unit ball written as smooth constraints."""
    if not np.any(g):
        return space._ascent_dual_support(g)
    starts = [g / space.norm(g)]
    u = np.sign(g) * (np.abs(g) == np.abs(g).max())
    starts.append(u / space.norm(u))
    best, best_val = starts[0], g @ starts[0]
    for x0 in starts:
        res = minimize(lambda x: -(g @ x), x0, jac=lambda x: -g, constraints=cons, method="SLSQP",
                       options={"ftol": 1e-15, "maxiter": 500})
        x = res.x / space.norm(res.x)
        if g @ x > best_val:
            best, best_val = x, g @ x
    return best


class LorentzSpace(NormSpace):
    """``2^{-1/p} (sum over pairs of (x_i^2+x_j^2)^{p/2})^{1/p}`` on R^3."""

    kind = "lorentz_xp"

    def __init__(self, p: float, label: str = ""):
        p = float(p)
        if not (p >= 1.0 and np.isfinite(p)):
            raise ValueError(f"Lorentz-type norm needs finite p >= 1, got {p}")
        super().__init__(3, label or f"lorentz_x{p:g}")
        self.p = p

    def parameters(self) -> dict[str, Any]:
        return {"p": self.p}

    def _sq(self, X: np.ndarray) -> np.ndarray:
        return np.stack([X[:, i] ** 2 + X[:, j] ** 2 for i, j in PAIRS_3], axis=1)

    def norms(self, X) -> np.ndarray:
        X = _rows(X, 3)
        p = self.p
        s = np.sqrt(self._sq(X))
        m = s.max(axis=1)
        safe = np.where(m > 0, m, 1.0)
        # scale by the largest pair norm before powering to keep large p stable
        return m * (0.5 * np.sum((s / safe[:, None]) ** p, axis=1)) ** (1.0 / p)

    def support_functionals(self, X) -> np.ndarray:
        X = _rows(X, 3)
        p = self.p
        S = self._sq(X)
        m = np.sqrt(S.max(axis=1, keepdims=True))
        m = np.where(m > 0, m, 1.0)
        Sn = S / m ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(Sn > 0, Sn ** (p / 2 - 1.0), 0.0)
        G = np.zeros_like(X)
        for k, (i, j) in enumerate(PAIRS_3):
            G[:, i] += w[:, k] * X[:, i] / m[:, 0]
            G[:, j] += w[:, k] * X[:, j] / m[:, 0]
        Nn = self.norms(X)[:, None] / m
        return G / (2.0 * Nn ** (p - 1.0))

    def dual_supports(self, F) -> np.ndarray:
        F = _rows(F, 3)
        if self.p == 1.0:
            return np.array([self._ascent_dual_support(g) for g in F])
        p = self.p

        def fun(x):
            s = np.array([x[i] ** 2 + x[j] ** 2 for i, j in PAIRS_3])
            return 2.0 - np.sum(s ** (p / 2))

        def jac(x):
            out = np.zeros(3)
            for i, j in PAIRS_3:
                s = x[i] ** 2 + x[j] ** 2
                if s > 0:
                    w = p * s ** (p / 2 - 1.0)
                    out[i] -= w * x[i]
                    out[j] -= w * x[j]
            return out

        cons = [{"type": "ineq", "fun": fun, "jac": jac}]
        return np.array([_slsqp_support(self, g, cons) for g in F])


class SectionSpace(NormSpace):
    """Restriction of a parent norm to vectors supported on ``coords``."""

    kind = "section"

    def __init__(self, parent: NormSpace, coords: Sequence[int], label: str = ""):
        self.parent = parent
        self.coords = tuple(int(c) for c in coords)
        super().__init__(len(self.coords), label or f"{parent.label}|{list(self.coords)}")

    def parameters(self) -> dict[str, Any]:
        return {"coords": list(self.coords)}

    def to_dict(self) -> dict[str, Any]:
        doc = super().to_dict()
        doc["parent"] = self.parent.to_dict()
        return doc

    def embed(self, Y) -> np.ndarray:
        Y = _rows(Y, self.dim)
        X = np.zeros((len(Y), self.parent.dim))
        X[:, self.coords] = Y
        return X

    def norms(self, X) -> np.ndarray:
        return self.parent.norms(self.embed(X))

    def support_functionals(self, X) -> np.ndarray:
        return self.parent.support_functionals(self.embed(X))[:, self.coords]

    def supporting_set(self, x) -> np.ndarray:
        return unique_rows(self.parent.supporting_set(self.embed(as_vector(x, self.dim)[None, :])[0])[:, self.coords])


# -- built-in polytopal balls ----------------------------------------------

def l1_ball(dim: int) -> PolytopeBall:
    primal = np.vstack([np.eye(dim), -np.eye(dim)])
    dual = np.array(list(itertools.product((-1.0, 1.0), repeat=dim)))
    return PolytopeBall(primal, dual)


def _ex33_dual() -> np.ndarray:
    rows = []
    for s in itertools.product((-1, 1), repeat=2):
        rows.append([s[0], s[1], 0, 0, 0])
    for s in itertools.product((-1, 1), repeat=3):
        rows.append([0, s[0], s[1], 0, s[2]])
    for s in itertools.product((-1, 1), repeat=2):
        rows.append([0, 0, s[0], s[1], 0])
    return np.array(rows, dtype=float)


def _ex33_primal() -> np.ndarray:
    rows = []
    for s in itertools.product((-1, 1), repeat=2):
        rows.append([s[0], 0, s[1], 0, 0])
    for s in itertools.product((-1, 1), repeat=3):
        rows.append([s[0], 0, 0, s[1], s[2]])
    for s in itertools.product((-1, 1), repeat=2):
        rows.append([0, s[0], 0, s[1], 0])
    return np.array(rows, dtype=float)


# -- constructors ------------------------------------------------------------

def lp(dim: int, p: float | str) -> LpSpace:
    p = _parse_p(p)
    if p == 2.0:
        return EuclideanSpace(dim)
    return LpSpace(dim, p)


def euclidean(dim: int) -> EuclideanSpace:
    return EuclideanSpace(dim)


def polytope(primal_vertices=None, dual_vertices=None, label: str = "polytope") -> PolytopeSpace:
    if primal_vertices is not None and dual_vertices is not None:
        ball = PolytopeBall(primal_vertices, dual_vertices)
    elif dual_vertices is not None:
        ball = PolytopeBall.from_dual(dual_vertices)
    elif primal_vertices is not None:
        ball = PolytopeBall.from_primal(primal_vertices)
    else:
        raise ValueError("need primal or dual vertices")
    return PolytopeSpace(ball, label)


def example_3_2() -> MaxOfPairsSpace:
    return MaxOfPairsSpace()


def example_3_2_elements() -> tuple[np.ndarray, np.ndarray]:
    """Points x_1..x_8 of the sphere and functionals x*_1..x*_7 used to show n(X) > 0.

    Rows are 0-based: ``points[7]`` is x_8 and ``functionals[6]`` is x*_7.
    """
    r = 2 ** -0.5
    points = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [r, r, 0], [0, r, r], [r, 0, r],
                       [r, -r, r], [r, r, r]])
    functionals = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [r, r, 0], [0, r, r], [r, 0, r],
                            [1.0 / 3 * r, -r, 2.0 / 3 * r]])
    return points, functionals


# (point, functional) index pairs, 0-based; x_8 is paired with x*_4, x*_5 and x*_6
EXAMPLE_3_2_PAIRS = ((0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5), (7, 3), (7, 4), (7, 5), (6, 6))


def example_3_3() -> PolytopeSpace:
    return PolytopeSpace(PolytopeBall(_ex33_primal(), _ex33_dual()), "example_3_3", kind="example_3_3")


def example_3_3_p4() -> PolytopeSpace:
    sec = section(example_3_3(), [0, 1, 2, 3])
    return PolytopeSpace(sec.ball, "example_3_3_p4", kind="example_3_3_p4")


def lorentz_xp(p: float) -> LorentzSpace:
    return LorentzSpace(p)


def line() -> LpSpace:
    """The scalar field R with |.|, stored as the one-dimensional l_inf ball."""
    return LpSpace(1, np.inf, label="R")


# -- module-level operations -----------------------------------------------

def norm(space: NormSpace, x) -> float:
    return space.norm(x)


def dual_norm(space: NormSpace, f) -> float:
    return space.dual_norm(f)


def support_functional(space: NormSpace, x) -> SupportPair:
    """A norm-one functional attaining the norm at ``x``; ties go to the lexicographically smallest."""
    x = as_vector(x, space.dim)
    nx = space.norm(x)
    if nx == 0:
        raise ValueError("the zero vector has no supporting functional")
    u = x / nx
    f = space.support_functionals(u[None, :])[0]
    return SupportPair(u, f, float(abs(f @ u - 1.0)))


def supporting_functionals(space: NormSpace, x) -> np.ndarray:
    """All extreme supporting functionals at ``x`` (the enumerate-all variant)."""
    x = as_vector(x, space.dim)
    if space.norm(x) == 0:
        raise ValueError("the zero vector has no supporting functional")
    return space.supporting_set(x / space.norm(x))


def section(space: NormSpace, coords: Sequence[int]) -> NormSpace:
    """Restriction of ``space`` to vectors supported on ``coords`` (0-based)."""
    coords = [int(c) for c in coords]
    if not coords:
        raise ValueError("section needs at least one coordinate")
    if len(set(coords)) != len(coords):
        raise ValueError(f"coordinates must be distinct: {coords}")
    if min(coords) < 0 or max(coords) >= space.dim:
        raise DimensionError(f"coordinates {coords} out of range for dimension {space.dim}")
    if coords == list(range(space.dim)):
        return space
    label = f"{space.label}|{coords}"
    if isinstance(space, SectionSpace):
        return section(space.parent, [space.coords[c] for c in coords])
    if isinstance(space, LpSpace):
        return lp(len(coords), space.p)
    if isinstance(space, MaxOfPairsSpace):
        # one coordinate of the max-of-pairs norm is |x|, two give the Euclidean plane
        return euclidean(2) if len(coords) == 2 else LpSpace(1, np.inf, label=label)
    if space.ball is not None:
        F = space.ball.dual_vertices[:, coords]
        F = extreme_points(F)
        return PolytopeSpace(PolytopeBall(polar_vertices(F), F), label)
    return SectionSpace(space, coords, label)


# -- absoluteness --------------------------------------------------------------

@dataclass
class PropertyCheck:
    name: str
    passed: bool
    worst_violation: float
    counterexample: list | None = None


@dataclass
class ValidationReport:
    label: str
    checks: dict[str, PropertyCheck] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failing(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]


def validate_absolute(space: NormSpace, trials: int = 200, seed: int = 0, tol: float = 1e-9) -> ValidationReport:
    """Sample-check properties (a) sign invariance, (b) unit coordinates, (c) monotonicity."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    d = space.dim
    X = rng.standard_normal((trials, d))
    S = rng.choice([-1.0, 1.0], size=(trials, d))
    # every sign pattern of one probe vector catches sign dependence missed by random draws
    patterns = np.array(list(itertools.product((-1.0, 1.0), repeat=min(d, 8))))
    probe = np.abs(rng.standard_normal(d)) + 0.5
    Xa = np.vstack([X, np.tile(probe, (len(patterns), 1))])
    Sa = np.vstack([S, np.hstack([patterns, np.ones((len(patterns), d - patterns.shape[1]))])])
    n0, n1 = space.norms(Xa), space.norms(Xa * Sa)
    viol = np.abs(n0 - n1) / np.maximum(1.0, n0)
    report = ValidationReport(space.label)
    k = int(np.argmax(viol))
    report.checks["a"] = PropertyCheck(
        "sign-flip invariance", bool(viol[k] <= tol), float(viol[k]),
        None if viol[k] <= tol else [Xa[k].tolist(), (Xa[k] * Sa[k]).tolist()])

    ne = space.norms(np.eye(d))
    viol_b = np.abs(ne - 1.0)
    kb = int(np.argmax(viol_b))
    report.checks["b"] = PropertyCheck(
        "unit coordinate vectors", bool(viol_b[kb] <= tol), float(viol_b[kb]),
        None if viol_b[kb] <= tol else [np.eye(d)[kb].tolist()])

    U = rng.uniform(-1.0, 1.0, size=(trials, d))
    Y = X * U
    excess = (space.norms(Y) - space.norms(X)) / np.maximum(1.0, space.norms(X))
    kc = int(np.argmax(excess))
    report.checks["c"] = PropertyCheck(
        "coordinatewise monotonicity", bool(excess[kc] <= tol), float(max(excess[kc], 0.0)),
        None if excess[kc] <= tol else [X[kc].tolist(), Y[kc].tolist()])
    return report


# -- CL-space certificate -----------------------------------------------------

@dataclass
class CLCertificate:
    """Outcome of the CL-space test; ``certified`` True means n(X) = 1."""

    certified: bool
    faces_checked: int
    violating_face: list | None = None
    violating_vertex: list | None = None

    @property
    def status(self) -> str:
        return "certified-yes" if self.certified else "certified-no"


def is_cl_space(ball: PolytopeBall | NormSpace) -> CLCertificate:
    """Check that every vertex lies in conv(F u -F) for every facet F of the ball."""
    if isinstance(ball, NormSpace):
        if ball.ball is None:
            raise UnsupportedKindError(f"CL test needs a polytopal ball, {ball.label} is not")
        ball = ball.ball
    P, F = ball.primal_vertices, ball.dual_vertices
    if len(P) < 2:
        raise ValueError("degenerate polytope")
    checked = 0
    for j, f in enumerate(F):
        # the facet of -f is -F, which has the same absolutely convex hull
        if f[np.nonzero(f)[0][0]] < 0:
            continue
        checked += 1
        face = ball.face(j)
        both = np.vstack([face, -face])
        on_face = np.abs(np.abs(P @ f) - 1.0) <= ball.pairing_tolerance
        for v in P[~on_face]:
            if not in_convex_hull(v, both):
                return CLCertificate(False, checked, f.tolist(), v.tolist())
    return CLCertificate(True, checked)


# -- serialisation ---------------------------------------------------------------

def parse_space(text: str) -> NormSpace:
    """Shorthand names: ``R``, ``l1^3``, ``linf^2``, ``l1.5^2``, ``euclidean^2``, ``example_3_2``,
    ``example_3_3``, ``example_3_3_p4``, ``lorentz4``; ``name|0,1`` takes a coordinate section."""
    text = text.strip()
    if "|" in text:
        base, coords = text.rsplit("|", 1)
        return section(parse_space(base), [int(c) for c in coords.split(",") if c.strip()])
    named = {"R": line, "example_3_2": example_3_2, "example_3_3": example_3_3, "example_3_3_p4": example_3_3_p4}
    if text in named:
        return named[text]()
    m = re.fullmatch(r"euclidean\^(\d+)", text)
    if m:
        return euclidean(int(m.group(1)))
    m = re.fullmatch(r"l(inf|\d+(?:\.\d+)?)\^(\d+)", text)
    if m:
        return lp(int(m.group(2)), m.group(1))
    m = re.fullmatch(r"lorentz(\d+(?:\.\d+)?)", text)
    if m:
        return lorentz_xp(float(m.group(1)))
    raise ValueError(f"unknown space shorthand {text!r}")


def from_dict(doc: dict | str) -> NormSpace:
    """Build a space from a JSON descriptor (or a shorthand string, see :func:`parse_space`)."""
    if isinstance(doc, str):
        return parse_space(doc)
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError("space descriptor must be an object with a 'kind' field")
    kind = doc["kind"]
    params = doc.get("parameters", {}) or {}
    label = doc.get("label", "")
    dim = doc.get("dim")
    if kind == "lp":
        space = LpSpace(int(dim), _parse_p(params["p"]), label)
    elif kind == "euclidean":
        space = EuclideanSpace(int(dim), label)
    elif kind == "example_3_2":
        space = MaxOfPairsSpace(label)
    elif kind == "example_3_3":
        space = example_3_3()
    elif kind == "example_3_3_p4":
        space = example_3_3_p4()
    elif kind == "lorentz_xp":
        space = LorentzSpace(float(params["p"]), label)
    elif kind == "polytope":
        space = polytope(doc.get("primal_vertices"), doc.get("dual_vertices"), label or "polytope")
    elif kind == "section":
        space = section(from_dict(doc["parent"]), params["coords"])
    elif kind == "sum":
        from .sums import sum_from_dict
        space = sum_from_dict(doc)
    elif kind == "koethe_dual":
        from .sums import koethe_dual
        space = koethe_dual(from_dict(doc["base"]))
    else:
        raise ValueError(f"unknown norm kind {kind!r}")
    if dim is not None and int(dim) != space.dim:
        raise DimensionError(f"descriptor says dim {dim}, {kind} has dim {space.dim}")
    return space
