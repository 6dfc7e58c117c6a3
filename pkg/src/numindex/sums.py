"""Absolute sums ``[X_1 + ... + X_m]_E``, Köthe duals and the block-operator constructions.

A sum space is itself a :class:`~numindex.spaces.NormSpace` on ``R^total_dim``;
block ``k`` occupies the coordinate slice ``S.slices[k]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from .errors import DimensionError, NonAbsoluteError, OrthogonalityError
from .polytope import PolytopeBall, DegeneratePolytopeError
from .spaces import (NormSpace, LpSpace, PolytopeSpace, as_vector, from_dict, lp, validate_absolute,
                     _rows)

MAX_SUM_DUAL_CANDIDATES = 20_000


def require_absolute(E: NormSpace, trials: int = 64, seed: int = 0) -> None:
    report = validate_absolute(E, trials=trials, seed=seed)
    if not report.passed:
        axiom = report.failing()[0]
        raise NonAbsoluteError(axiom, f"{E.label}: worst violation {report.checks[axiom].worst_violation:.3g}")


class KoetheDualSpace(NormSpace):
    """``||b||_{E'} = sup { sum |b_i a_i| : a in B_E }`` as a norm oracle."""

    kind = "koethe_dual"

    def __init__(self, base: NormSpace, label: str = ""):
        self.base = base
        super().__init__(base.dim, label or f"({base.label})'")

    @cached_property
    def _polar(self) -> PolytopeBall | None:
        return None if self.base.ball is None else self.base.ball.polar()

    @property
    def ball(self) -> PolytopeBall | None:
        return self._polar

    def to_dict(self) -> dict[str, Any]:
        doc = super().to_dict()
        doc["base"] = self.base.to_dict()
        return doc

    def norms(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        if self.ball is not None:
            return np.max(X @ self.ball.dual_vertices.T, axis=1)
        return self.base.dual_norms(np.abs(X))

    def support_functionals(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        if self.ball is not None:
            return PolytopeSpace(self.ball).support_functionals(X)
        sign = np.where(X < 0, -1.0, 1.0)
        return sign * np.abs(self.base.dual_supports(np.abs(X)))

    def supporting_set(self, x) -> np.ndarray:
        if self.ball is not None:
            return PolytopeSpace(self.ball).supporting_set(x)
        return super().supporting_set(x)

    def dual_norms(self, F) -> np.ndarray:
        return self.base.norms(F)

    def dual_supports(self, F) -> np.ndarray:
        return self.base.support_functionals(F)


def koethe_dual(E: NormSpace) -> NormSpace:
    """The Köthe dual E' of an absolute norm E on R^m."""
    require_absolute(E)
    if isinstance(E, KoetheDualSpace):
        return E.base
    if isinstance(E, LpSpace):
        return lp(E.dim, E.q)
    return KoetheDualSpace(E)


class SumSpace(NormSpace):
    """``||(x_1, ..., x_m)|| = ||(||x_1||, ..., ||x_m||)||_E``."""

    kind = "sum"

    def __init__(self, outer: NormSpace, components: Sequence[NormSpace], label: str = "", check: bool = True):
        components = list(components)
        if outer.dim != len(components):
            raise DimensionError(f"outer norm has dimension {outer.dim} but {len(components)} components given")
        if check:
            require_absolute(outer)
        self.outer = outer
        self.components = components
        self.block_dims = [c.dim for c in components]
        self.offsets = np.concatenate([[0], np.cumsum(self.block_dims)]).astype(int)
        self.slices = [slice(int(a), int(b)) for a, b in zip(self.offsets[:-1], self.offsets[1:])]
        super().__init__(int(self.offsets[-1]),
                         label or f"[{' + '.join(c.label for c in components)}]_{outer.label}")

    @property
    def total_dim(self) -> int:
        return self.dim

    def to_dict(self) -> dict[str, Any]:
        doc = super().to_dict()
        doc["outer"] = self.outer.to_dict()
        doc["components"] = [c.to_dict() for c in self.components]
        return doc

    # -- block helpers --------------------------------------------------
    def split(self, x) -> list[np.ndarray]:
        x = as_vector(x, self.dim)
        return [x[s].copy() for s in self.slices]

    def join(self, blocks: Sequence) -> np.ndarray:
        if len(blocks) != len(self.components):
            raise DimensionError("wrong number of blocks")
        parts = [as_vector(b, d) for b, d in zip(blocks, self.block_dims)]
        return np.concatenate(parts)

    def profile(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        return np.stack([c.norms(X[:, s]) for c, s in zip(self.components, self.slices)], axis=1)

    def dual_profile(self, F) -> np.ndarray:
        F = _rows(F, self.dim)
        return np.stack([c.dual_norms(F[:, s]) for c, s in zip(self.components, self.slices)], axis=1)

    # -- oracles --------------------------------------------------------
    def norms(self, X) -> np.ndarray:
        return self.outer.norms(self.profile(X))

    def support_functionals(self, X) -> np.ndarray:
        X = _rows(X, self.dim)
        if self.ball is not None:
            return PolytopeSpace(self.ball).support_functionals(X)
        P = self.profile(X)
        B = np.abs(self.outer.support_functionals(P))
        out = np.zeros_like(X)
        for k, (c, s) in enumerate(zip(self.components, self.slices)):
            live = P[:, k] > 0
            if np.any(live):
                out[live, s] = B[live, k:k + 1] * c.support_functionals(X[live, s])
        return out

    def supporting_set(self, x) -> np.ndarray:
        """Supporting functionals built blockwise; blocks where x vanishes get zero."""
        if self.ball is not None:
            return PolytopeSpace(self.ball).supporting_set(x)
        x = as_vector(x, self.dim)
        P = self.profile(x[None, :])[0]
        outer_set = np.abs(self.outer.supporting_set(P))
        block_sets = []
        for k, (c, s) in enumerate(zip(self.components, self.slices)):
            block_sets.append(c.supporting_set(x[s]) if P[k] > 0 else np.zeros((1, c.dim)))
        rows = []
        for b in outer_set:
            for choice in itertools.product(*block_sets):
                rows.append(np.concatenate([b[k] * g for k, g in enumerate(choice)]))
                if len(rows) > 512:
                    break
        return np.unique(np.round(np.array(rows), 12), axis=0)

    def dual_norms(self, F) -> np.ndarray:
        return self.outer.dual_norms(self.dual_profile(F))

    def dual_supports(self, F) -> np.ndarray:
        F = _rows(F, self.dim)
        if self.ball is not None:
            return PolytopeSpace(self.ball).dual_supports(F)
        Q = self.dual_profile(F)
        A = np.abs(self.outer.dual_supports(Q))
        out = np.zeros_like(F)
        for k, (c, s) in enumerate(zip(self.components, self.slices)):
            out[:, s] = A[:, k:k + 1] * c.dual_supports(F[:, s])
        n = self.norms(out)
        return out / np.where(n > 0, n, 1.0)[:, None]

    @cached_property
    def _polytope(self) -> PolytopeBall | None:
        if self.outer.ball is None or any(c.ball is None for c in self.components):
            return None
        outer_duals = np.unique(np.abs(self.outer.ball.dual_vertices), axis=0)
        comp_duals = [c.ball.dual_vertices for c in self.components]
        count = len(outer_duals) * int(np.prod([len(f) for f in comp_duals]))
        if count > MAX_SUM_DUAL_CANDIDATES:
            return None
        cands = []
        for b in outer_duals:
            for choice in itertools.product(*comp_duals):
                cands.append(np.concatenate([b[k] * f for k, f in enumerate(choice)]))
        try:
            return PolytopeBall.from_dual(np.array(cands))
        except DegeneratePolytopeError:
            return None

    @property
    def ball(self) -> PolytopeBall | None:
        return self._polytope


def sum_space(E: NormSpace, components: Sequence[NormSpace], label: str = "") -> SumSpace:
    return SumSpace(E, components, label)


def sum_from_dict(doc: dict) -> SumSpace:
    return SumSpace(from_dict(doc["outer"]), [from_dict(c) for c in doc["components"]], doc.get("label", ""))


@dataclass
class BlockVector:
    parent: SumSpace
    blocks: list

    def __post_init__(self):
        self.blocks = [as_vector(b, d) for b, d in zip(self.blocks, self.parent.block_dims)]
        if len(self.blocks) != len(self.parent.block_dims):
            raise DimensionError("wrong number of blocks")

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    def norm(self) -> float:
        return self.parent.norm(self.vector)


def _check_index(S: SumSpace, kappa: int) -> int:
    if not 0 <= int(kappa) < len(S.components):
        raise IndexError(f"block index {kappa} out of range for {len(S.components)} blocks")
    return int(kappa)


def inject(S: SumSpace, kappa: int, x) -> BlockVector:
    kappa = _check_index(S, kappa)
    x = as_vector(x, S.block_dims[kappa])
    blocks = [np.zeros(d) for d in S.block_dims]
    blocks[kappa] = x
    return BlockVector(S, blocks)


def project(S: SumSpace, kappa: int, v) -> np.ndarray:
    kappa = _check_index(S, kappa)
    vec = v.vector if isinstance(v, BlockVector) else as_vector(v, S.dim)
    return vec[S.slices[kappa]].copy()


def lift_operator(S: SumSpace, kappa: int, Sop) -> np.ndarray:
    """Matrix of ``I_kappa Sop P_kappa`` on the whole sum."""
    kappa = _check_index(S, kappa)
    Sop = np.asarray(Sop, dtype=float)
    d = S.block_dims[kappa]
    if Sop.shape != (d, d):
        raise DimensionError(f"operator has shape {Sop.shape}, block {kappa} needs ({d}, {d})")
    T = np.zeros((S.dim, S.dim))
    T[S.slices[kappa], S.slices[kappa]] = Sop
    return T


def compress_operator(S: SumSpace, kappa: int, T) -> np.ndarray:
    """``P_kappa T I_kappa``: the block-diagonal entry of T."""
    kappa = _check_index(S, kappa)
    T = np.asarray(T, dtype=float)
    return T[S.slices[kappa], S.slices[kappa]].copy()


# -- single-coordinate pairing condition --------------------------------------

@dataclass
class OrthogonalityWitness:
    a: list
    b: list
    kappa: int
    residuals: list
    product: float


@dataclass
class OrthogonalityReport:
    witnesses: list[OrthogonalityWitness] = field(default_factory=list)
    failures: list[OrthogonalityWitness] = field(default_factory=list)
    hull_gap: float = 0.0
    norming_gap: float = 0.0
    sample_tol: float = 1e-9
    sampled_only: bool = True  # hull and norming checks are statistical

    @property
    def pairs_ok(self) -> bool:
        return not self.failures

    @property
    def hull_ok(self) -> bool:
        return self.hull_gap <= self.sample_tol

    @property
    def norming_ok(self) -> bool:
        return self.norming_gap <= self.sample_tol

    @property
    def passed(self) -> bool:
        return self.pairs_ok and self.hull_ok and self.norming_ok


def _pair_witness(a: np.ndarray, b: np.ndarray) -> OrthogonalityWitness:
    prods = np.abs(a * b)
    kappa = int(np.argmax(prods))
    residuals = [float(prods[k]) for k in range(len(a)) if k != kappa]
    return OrthogonalityWitness(a.tolist(), b.tolist(), kappa, residuals, float(prods[kappa]))


def check_orthogonality(E: NormSpace, A, B, tol: float = 1e-9, samples: int = 2000,
                        seed: int = 0) -> OrthogonalityReport:
    """Test ``a_l b_l = 0 (l != kappa), |a_kappa b_kappa| = 1`` on A x B.

    The hull condition (sup over A of sum |g_l a_l| equals the dual norm of g)
    and the norming condition for B are checked on random directions only.
    """
    A = _rows(A, E.dim)
    B = _rows(B, E.dim)
    if len(A) == 0 or len(B) == 0:
        raise ValueError("A and B must be nonempty")
    report = OrthogonalityReport(sample_tol=max(tol, 1e-9))
    for a in A:
        for b in B:
            w = _pair_witness(a, b)
            ok = abs(w.product - 1.0) <= tol and all(r <= tol for r in w.residuals)
            (report.witnesses if ok else report.failures).append(w)
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((samples, E.dim))
    dual = E.dual_norms(G)
    report.hull_gap = float(np.max((dual - np.max(np.abs(G) @ np.abs(A).T, axis=1)) / dual))
    X = rng.standard_normal((samples, E.dim))
    nx = E.norms(X)
    report.norming_gap = float(np.max((nx - np.max(np.abs(X) @ np.abs(B).T, axis=1)) / nx))
    return report


def corollary_sets(kind: str, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Hard-coded (A, B) for the l1 and l_inf outer norms."""
    units = np.eye(m)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
    if kind == "l1":
        return units, signs
    if kind == "linf":
        return signs, units
    raise ValueError(f"no hard-coded sets for {kind!r}")


def outer_kind(E: NormSpace) -> str | None:
    if isinstance(E, LpSpace) and E.p == 1.0:
        return "l1"
    if isinstance(E, LpSpace) and np.isinf(E.p):
        return "linf"
    return None


# -- operator transfer from the sum to one block --------------------------------

@dataclass
class TransferMaps:
    """Matrices of the maps z -> Phi(z) (total x d) and zeta* -> Psi(zeta*) (total x d)."""

    kappa: int
    phi: np.ndarray
    psi: np.ndarray
    x_kappa: np.ndarray
    xstar_kappa: np.ndarray
    x_tilde: np.ndarray
    y_star: np.ndarray
    a: np.ndarray
    b: np.ndarray


def transfer_maps(S: SumSpace, a, b, kappa: int, tol: float = 1e-9) -> TransferMaps:
    """Build Phi and Psi for a point ``a = (a_l x_l)`` and functional ``b = (b_l x*_l)``."""
    kappa = _check_index(S, kappa)
    av = a.vector if isinstance(a, BlockVector) else as_vector(a, S.dim)
    bv = as_vector(b, S.dim)
    a_prof = S.profile(av[None, :])[0]
    b_prof = S.dual_profile(bv[None, :])[0]
    prods = a_prof * b_prof
    off = [k for k in range(len(prods)) if k != kappa and prods[k] > tol]
    if off or abs(prods[kappa] - 1.0) > tol:
        raise OrthogonalityError(
            f"pair violates the single-coordinate condition at kappa={kappa}: "
            f"products {np.round(prods, 12).tolist()}")
    sk = S.slices[kappa]
    comp = S.components[kappa]
    x_k = av[sk] / a_prof[kappa]
    xs_k = bv[sk] / b_prof[kappa]
    y_star = comp.support_functionals(x_k[None, :])[0]
    x_tilde = comp.dual_support(xs_k)
    d = S.block_dims[kappa]
    phi = np.zeros((S.dim, d))
    psi = np.zeros((S.dim, d))
    for k, s in enumerate(S.slices):
        if k == kappa:
            phi[s] = a_prof[k] * np.eye(d)
            psi[s] = b_prof[k] * np.eye(d)
        else:
            # a_l x_l y*(z) and b_l x*_l zeta*(x~); a_l x_l and b_l x*_l are the raw blocks
            phi[s] = np.outer(av[s], y_star)
            psi[s] = np.outer(bv[s], x_tilde)
    return TransferMaps(kappa, phi, psi, x_k, xs_k, x_tilde, y_star, a_prof, b_prof)


def transfer_operator(S: SumSpace, T, a, b, kappa: int, tol: float = 1e-9) -> np.ndarray:
    """Operator on block kappa with ``x*_k(S x_k) = b(T a)``."""
    T = np.asarray(T, dtype=float)
    if T.shape != (S.dim, S.dim):
        raise DimensionError(f"operator has shape {T.shape}, sum has dimension {S.dim}")
    maps = transfer_maps(S, a, b, kappa, tol)
    return transfer_from_maps(S, T, as_vector(b, S.dim), maps)


def transfer_from_maps(S: SumSpace, T: np.ndarray, b: np.ndarray, maps: TransferMaps) -> np.ndarray:
    sk = S.slices[maps.kappa]
    w = b.copy()
    w[sk] = 0.0
    TPhi = T @ maps.phi
    return np.outer(maps.x_tilde, w @ TPhi) + maps.b[maps.kappa] * TPhi[sk]


def transfer_pairings(S: SumSpace, T, maps: TransferMaps, zeta, zeta_star) -> tuple[float, float, float]:
    """Return ``Psi(z*)(Phi(z))``, ``Psi(z*)(T Phi(z))`` and ``||Psi(z*)||``·``||Phi(z)||``."""
    zeta = np.asarray(zeta, dtype=float)
    zeta_star = np.asarray(zeta_star, dtype=float)
    x = maps.phi @ zeta
    f = maps.psi @ zeta_star
    return float(f @ x), float(f @ (np.asarray(T) @ x)), float(S.dual_norm(f) * S.norm(x))
