"""Operator norms, numerical radii and numerical index estimates.

For a real finite-dimensional space X and an operator T (a square matrix
acting on coordinate vectors),

    v(T) = sup{ |f(Tx)| : ||x|| = ||f|| = f(x) = 1 },   n(X) = inf v(T) / ||T||.

Polytopal balls make both quantities exact: v(T) is a maximum over admissible
vertex pairs and n(X) is the minimum of finitely many linear programs.  Other
norms are handled by sampling plus local polish, and the index by a seeded
pattern search whose witness operator is always returned.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from math import sqrt
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .errors import DimensionError, UnsupportedKindError
from .spaces import (EXAMPLE_3_2_PAIRS, PAIRS_3, EuclideanSpace, LorentzSpace, LpSpace, MaxOfPairsSpace, NormSpace,
                     SectionSpace, SupportPair, example_3_2_elements, is_cl_space, validate_absolute)
from .polytope import unique_rows
from .sums import KoetheDualSpace, SumSpace, lift_operator, outer_kind

PAIR_TOL = 1e-9
CERTIFICATES = ("cl_space", "zero_radius_rank", "theorem_transfer", "polytope_lp", "none")
EVAL_SAMPLES = 4000
EVAL_SEED = 0


# -- operators ---------------------------------------------------------------

def as_operator(T, size: int | None = None) -> np.ndarray:
    A = np.asarray(T, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"operator must be a square matrix, got shape {A.shape}")
    if size is not None and A.shape[0] != size:
        raise DimensionError(f"operator has size {A.shape[0]}, space has dimension {size}")
    if not np.all(np.isfinite(A)):
        raise ValueError("operator entries must be finite")
    return A


def load_operator(path) -> np.ndarray:
    """Read a square operator from CSV (row-major, no header) or a JSON array of rows."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return as_operator(json.loads(text))
    rows = [[float(v) for v in row] for row in csv.reader(text.splitlines()) if row]
    return as_operator(rows)


def save_operator(T, path) -> None:
    T = as_operator(T)
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(T.tolist()) + "\n")
    else:
        path.write_text("".join(",".join(repr(float(v)) for v in row) + "\n" for row in T))


def _unit_directions(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    U = rng.standard_normal((n, d))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def _sphere_points(X: NormSpace, U: np.ndarray) -> np.ndarray:
    return U / X.norms(U)[:, None]


def _sample_directions(X: NormSpace, rng: np.random.Generator, n: int) -> np.ndarray:
    """Random directions; for sums, half of them are supported on a single block."""
    U = _unit_directions(rng, n, X.dim)
    if isinstance(X, SumSpace) and len(X.components) > 1 and n >= 2 * len(X.components):
        per = n // (2 * len(X.components))
        for k, sl in enumerate(X.slices):
            rows = slice(k * per, (k + 1) * per)
            block = np.zeros((per, X.dim))
            block[:, sl] = U[rows, sl]
            U[rows] = block / np.linalg.norm(block, axis=1, keepdims=True)
    return U


# -- operator norm -----------------------------------------------------------

def operator_norm(X: NormSpace, T, restarts: int = 4, n_samples: int = 2000, seed: int = EVAL_SEED) -> float:
    return operator_norm_witness(X, T, restarts, n_samples, seed)[0]


def operator_norm_witness(X: NormSpace, T, restarts: int = 4, n_samples: int = 2000,
                          seed: int = EVAL_SEED) -> tuple[float, np.ndarray]:
    """``(||T||, x)`` with ``||x|| = 1`` attaining (or nearly attaining) the norm.

    Exact over primal vertices for polytopes and spectral for Euclidean
    spaces; otherwise the best of sampled directions polished by pattern ascent,
    which is a lower bound on the true norm.
    """
    T = as_operator(T, X.dim)
    if X.ball is not None:
        P = X.ball.primal_vertices
        vals = X.norms(P @ T.T)
        i = int(np.argmax(vals))
        return float(vals[i]), P[i].copy()
    if isinstance(X, EuclideanSpace):
        _, s, vt = np.linalg.svd(T)
        return float(s[0]), vt[0].copy()
    rng = np.random.default_rng(seed)
    U = np.vstack([np.eye(X.dim), _sample_directions(X, rng, n_samples)])
    U = _sphere_points(X, U)
    vals = X.norms(U @ T.T)
    best_val, best_x = float(vals.max()), U[int(np.argmax(vals))]
    if best_val == 0:
        return 0.0, best_x

    def ratios(U):
        return X.norms(U @ T.T) / X.norms(U)

    starts = U[np.argsort(-vals, kind="stable")[:restarts]]
    ascended, asc_vals = _batch_ascent(ratios, starts)
    for u0, u, val in zip(starts, ascended, asc_vals):
        u, val = _power_polish(X, T, u / X.norm(u), max(float(val), float(ratios(u0[None, :])[0])))
        if val > best_val:
            best_val, best_x = val, u
    return best_val, best_x


def _power_polish(X: NormSpace, T: np.ndarray, x: np.ndarray, val: float,
                  max_iter: int = 50) -> tuple[np.ndarray, float]:
    """Alternate g = support(Tx) and x = argmax of (T^t g)(x) over B_X.

    Each step cannot decrease ||Tx||, and kinks of the ball (vertices of
    polytopal blocks) are reached exactly, which smooth ascent misses.
    """
    val = float(X.norms(x @ T.T)[0]) if val is None else val
    for _ in range(max_iter):
        y = T @ x
        if not np.any(y):
            break
        g = X.support_functionals(y[None, :])[0]
        h = T.T @ g
        if not np.any(h):
            break
        x_new = X.dual_support(h)
        x_new = x_new / X.norm(x_new)
        new = float(X.norm(T @ x_new))
        if new <= val * (1 + 1e-15):
            break
        x, val = x_new, new
    return x, val


def _batch_ascent(fun, x0: np.ndarray, step: float = 0.1, min_step: float = 1e-11,
                  max_iter: int = 300) -> tuple[np.ndarray, np.ndarray]:
    """Maximize a batch objective by polling ``x ± step * D`` over coordinate and rotated frames.

    ``fun`` maps an ``(n, d)`` array to ``n`` values and must be invariant
    under positive scaling of its rows; iterates stay on the Euclidean sphere.
    ``x0`` may hold several starts as rows; each runs its own ascent, but all
    polls of one iteration go through a single call of ``fun``.
    Returns ``(x, val)`` shaped like the input (a vector and a float for one start).
    """
    single = np.ndim(x0) == 1
    x = np.atleast_2d(np.asarray(x0, dtype=float))
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    k, d = x.shape
    val = np.asarray(fun(x), dtype=float)
    steps = np.full(k, float(step))
    frames = _poll_frames(d)
    for it in range(max_iter):
        live = np.flatnonzero(steps >= min_step)
        if live.size == 0:
            break
        D = frames[it % len(frames)]
        m = len(D)
        cands = (x[live, None, :] + steps[live, None, None] * D[None, :, :]).reshape(-1, d)
        cands /= np.linalg.norm(cands, axis=1, keepdims=True)
        vals = np.asarray(fun(cands), dtype=float).reshape(len(live), m)
        best = np.argmax(vals, axis=1)
        top = vals[np.arange(len(live)), best]
        up = top > val[live]
        moved = live[up]
        x[moved] = cands.reshape(len(live), m, d)[up, best[up]]
        val[moved] = top[up]
        steps[moved] = np.minimum(2.0 * steps[moved], 0.5)
        steps[live[~up]] *= 0.5
    if single:
        return x[0], float(val[0])
    return x, val


@lru_cache(maxsize=None)
def _poll_frames(d: int, count: int = 16) -> tuple[np.ndarray, ...]:
    """Poll directions ``±e_i`` and ``±q_i`` for a fixed cycle of random orthonormal frames Q."""
    rng = np.random.default_rng(d)
    base = np.vstack([np.eye(d), -np.eye(d)])
    frames = []
    for _ in range(count):
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        D = np.vstack([base, Q.T, -Q.T])
        D.setflags(write=False)
        frames.append(D)
    return tuple(frames)


# -- numerical radius --------------------------------------------------------

@dataclass
class RadiusEstimate:
    value: float
    witness: SupportPair
    method: str
    n_samples: int | None = None
    seed: int | None = None
    gap_bound: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "method": self.method, "n_samples": self.n_samples, "seed": self.seed,
                "gap_bound": self.gap_bound, "witness": self.witness.to_dict()}


def _pair(x: np.ndarray, f: np.ndarray) -> SupportPair:
    return SupportPair(np.asarray(x, dtype=float).copy(), np.asarray(f, dtype=float).copy(),
                       float(abs(f @ x - 1.0)))


def numerical_radius_exact(X: NormSpace, T) -> RadiusEstimate:
    """Maximum of ``|f(Tv)|`` over admissible vertex pairs of a polytopal ball."""
    T = as_operator(T, X.dim)
    ball = X.ball
    if ball is None:
        raise UnsupportedKindError(f"exact numerical radius needs a polytopal ball, got kind {X.kind!r}")
    I, J = ball.admissible_pairs()
    P, F = ball.primal_vertices, ball.dual_vertices
    vals = np.abs(np.einsum("kd,kd->k", F[J], P[I] @ T.T))
    k = _preferred_pair(P[I], F[J], vals)
    return RadiusEstimate(float(vals[k]), _pair(P[I[k]], F[J[k]]), "exact_vertex", gap_bound=0.0)


def _preferred_pair(Xs: np.ndarray, Fs: np.ndarray, vals: np.ndarray, tol: float = 1e-12) -> int:
    """Among maximizing pairs, the lexicographically largest (x, f) whose x has a positive leading entry."""
    top = np.flatnonzero(vals >= vals.max() - tol)
    lead = np.array([x[np.flatnonzero(np.abs(x) > 1e-12)[0]] for x in Xs[top]])
    if np.any(lead > 0):
        top = top[lead > 0]
    keys = np.hstack([Xs[top], Fs[top]])
    return int(top[np.lexsort(keys.T[::-1])[-1]])


def numerical_radius_hilbert(X: EuclideanSpace, T) -> RadiusEstimate:
    """Closed form on Euclidean space: the largest |eigenvalue| of the symmetric part."""
    T = as_operator(T, X.dim)
    w, V = np.linalg.eigh(0.5 * (T + T.T))
    k = int(np.argmax(np.abs(w)))
    x = V[:, k]
    return RadiusEstimate(float(abs(x @ T @ x)), _pair(x, x), "exact_hilbert", gap_bound=0.0)


def numerical_radius_sampled(X: NormSpace, T, n_samples: int = 10_000, seed: int = 0,
                             polish: int = 3) -> RadiusEstimate:
    """Best pairing over random points of S_X with their supporting functionals.

    Samples are improved locally: for polytopes the best sample on each exposed
    facet moves to the best vertex of that facet, otherwise the ``polish`` best
    samples get a batched pattern ascent on the direction.
    The value is always attained by the returned pair, hence a lower bound on v(T).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    T = as_operator(T, X.dim)
    rng = np.random.default_rng(seed)
    U = _sphere_points(X, _sample_directions(X, rng, n_samples))
    F = X.support_functionals(U)
    vals = np.abs(np.einsum("kd,kd->k", F, U @ T.T))
    k = int(np.argmax(vals))
    best = (float(vals[k]), U[k], F[k])
    if X.ball is not None:
        # one ascent per exposed facet that received a sample, started from its best sample
        facet = np.argmax(U @ X.ball.dual_vertices.T, axis=1)
        order = np.lexsort((-vals, facet))
        first = np.r_[True, facet[order][1:] != facet[order][:-1]]
        starts = order[first]
        polished = [_polish_vertex(X, T, U[k]) for k in starts]
    else:
        polished = _polish_smooth(X, T, U[np.argsort(-vals, kind="stable")[:polish]])
    if isinstance(X, SumSpace):
        polished += _block_pairs(X, T, n_samples, seed)
    elif isinstance(X, MaxOfPairsSpace):
        polished.append(_ridge_pair(T))
    for cand in polished:
        if cand[0] > best[0]:
            best = cand
    return RadiusEstimate(best[0], _pair(best[1], best[2]), "sampled", n_samples=n_samples, seed=seed)


def _block_pairs(S: SumSpace, T: np.ndarray, n_samples: int, seed: int) -> list[tuple[float, np.ndarray, np.ndarray]]:
    """Support pairs of the diagonal blocks, placed in their block of the sum.

    With ``||e_k|| = ||e_k^*|| = 1`` in the outer norm such a pair is a support
    pair of the sum, and its pairing with T equals the block's pairing with T_kk.
    """
    out = []
    for k, (c, s) in enumerate(zip(S.components, S.slices)):
        e = np.zeros(len(S.components))
        e[k] = 1.0
        if abs(S.outer.norm(e) - 1.0) > 1e-12 or abs(S.outer.dual_norm(e) - 1.0) > 1e-12:
            continue
        block = T[s, s]
        if not np.any(block):
            continue
        w = numerical_radius(c, block, n_samples, seed).witness
        x, f = np.zeros(S.dim), np.zeros(S.dim)
        x[s], f[s] = w.x, w.f
        out.append((float(abs(f @ (T @ x))), x, f))
    return out


def _ridge_pair(T: np.ndarray, grid: int = 4096) -> tuple[float, np.ndarray, np.ndarray]:
    """Best pair of the max-of-pairs norm by a scan over each piece.

    Where the piece on coordinates (i, j) is active, x = (cos t, sin t) there
    and |x_l| <= min(|cos t|, |sin t|) on the remaining coordinate; the pairing
    with the piece gradient is affine in x_l, so x_l sits at an end of its range.
    """
    def values(i, j, l, th, s):
        c, sn = np.cos(th), np.sin(th)
        u = np.zeros((len(th), 3))
        u[:, i], u[:, j] = c, sn
        x = u.copy()
        x[:, l] = s * np.minimum(np.abs(c), np.abs(sn))
        return np.abs(np.einsum("kd,kd->k", u, x @ T.T)), x, u

    best = (-1.0, None, None)
    th = np.linspace(0.0, np.pi, grid, endpoint=False)  # x and -x give the same pairing
    for i, j in PAIRS_3:
        l = 3 - i - j
        for s in (1.0, -1.0):
            vals = values(i, j, l, th, s)[0]
            k = int(np.argmax(vals))
            h = np.pi / grid
            res = minimize_scalar(lambda t: -values(i, j, l, np.array([t]), s)[0][0],
                                  bounds=(th[k] - h, th[k] + h), method="bounded", options={"xatol": 1e-13})
            cand = [th[k], float(res.x)]
            v, x, u = values(i, j, l, np.array(cand), s)
            m = int(np.argmax(v))
            if v[m] > best[0]:
                best = (float(v[m]), x[m], u[m])
    return best


def _best_support(X: NormSpace, T: np.ndarray, x: np.ndarray) -> tuple[float, np.ndarray]:
    G = X.supporting_set(x)
    vals = np.abs(G @ (T @ x))
    k = int(np.argmax(vals))
    return float(vals[k]), G[k]


def _polish_vertex(X: NormSpace, T: np.ndarray, x0: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    # |f(Tx)| is convex on the facet exposed by f, so its maximum sits at a vertex
    ball = X.ball
    best = (-1.0, x0, None)
    for f in X.supporting_set(x0):
        j = int(np.argmin(np.abs(ball.dual_vertices - f).sum(axis=1)))
        face = ball.face(j)
        vals = np.abs(face @ T.T @ ball.dual_vertices[j])
        i = int(np.argmax(vals))
        if vals[i] > best[0]:
            best = (float(vals[i]), face[i], ball.dual_vertices[j])
    return best


def _polish_smooth(X: NormSpace, T: np.ndarray, X0: np.ndarray) -> list[tuple[float, np.ndarray, np.ndarray]]:
    def pairings(U):
        F = X.support_functionals(U)
        return np.abs(np.einsum("kd,kd->k", F, U @ T.T)) / X.norms(U)

    ascended, _ = _batch_ascent(pairings, X0)
    out = []
    for x0, x in zip(X0, ascended):
        x = x / X.norm(x)
        if pairings(x[None, :])[0] < pairings(x0[None, :])[0]:
            x = x0
        val, f = _best_support(X, T, x)
        out.append((val, x, f))
    return out


def numerical_radius(X: NormSpace, T, n_samples: int = EVAL_SAMPLES, seed: int = EVAL_SEED) -> RadiusEstimate:
    """Exact where a closed form exists (polytopes, Euclidean spaces), sampled otherwise."""
    if X.ball is not None:
        return numerical_radius_exact(X, T)
    if isinstance(X, EuclideanSpace):
        return numerical_radius_hilbert(X, T)
    return numerical_radius_sampled(X, T, n_samples=n_samples, seed=seed)


def is_exact(X: NormSpace) -> bool:
    return X.ball is not None or isinstance(X, EuclideanSpace)


def index_ratio(X: NormSpace, T, n_samples: int = EVAL_SAMPLES, seed: int = EVAL_SEED) -> tuple[float, float]:
    """``(v(T), ||T||)`` with the deterministic evaluators used for index witnesses."""
    T = as_operator(T, X.dim)
    return numerical_radius(X, T, n_samples, seed).value, operator_norm(X, T, seed=seed)


def ratio_of(X: NormSpace, T, n_samples: int = EVAL_SAMPLES, seed: int = EVAL_SEED) -> float:
    v, nrm = index_ratio(X, T, n_samples, seed)
    if nrm == 0:
        raise ValueError("the zero operator has no index ratio")
    return v / nrm


# -- zero-radius certificate -------------------------------------------------

def norm_equivalence(X: NormSpace) -> tuple[float, float]:
    """Constants ``(a, b)`` with ``a |x|_2 <= ||x|| <= b |x|_2`` for every x."""
    d = X.dim
    if X.ball is not None:
        b = float(np.max(np.linalg.norm(X.ball.dual_vertices, axis=1)))
        a = 1.0 / float(np.max(np.linalg.norm(X.ball.primal_vertices, axis=1)))
        return a, b
    if isinstance(X, LpSpace):
        c = d ** abs(1.0 / X.p - 0.5) if np.isfinite(X.p) else d ** 0.5
        return (1.0 / c, 1.0) if X.p >= 2 else (1.0, c)
    if isinstance(X, MaxOfPairsSpace):
        return sqrt(2.0 / 3.0), 1.0
    if isinstance(X, LorentzSpace):
        # the three pair norms s_k satisfy sum s_k^2 = 2|x|^2 and max s_k >= sqrt(2/3)|x|
        p, s = X.p, 2.0 ** (-1.0 / X.p)
        if p >= 2:
            return s * sqrt(2.0 / 3.0), s * sqrt(2.0)
        return s * sqrt(2.0), s * 3.0 ** (1.0 / p - 0.5) * sqrt(2.0)
    if isinstance(X, SectionSpace):
        return norm_equivalence(X.parent)
    if isinstance(X, KoetheDualSpace):
        a, b = norm_equivalence(X.base)
        return 1.0 / b, 1.0 / a
    if isinstance(X, SumSpace):
        aE, bE = norm_equivalence(X.outer)
        consts = [norm_equivalence(c) for c in X.components]
        return aE * min(a for a, _ in consts), bE * max(b for _, b in consts)
    if validate_absolute(X, trials=64).passed:
        # absolute norms sit between the max norm and the sum norm
        return d ** -0.5, d ** 0.5
    raise UnsupportedKindError(f"no norm-equivalence constants known for kind {X.kind!r}")


@dataclass
class ZeroRadiusCertificate:
    certified: bool
    bound: float
    rank: int
    n_pairs: int
    sigma_min: float
    constant: float
    kernel: np.ndarray | None = None
    reason: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"certified": self.certified, "bound": self.bound, "rank": self.rank, "n_pairs": self.n_pairs,
                "sigma_min": self.sigma_min, "constant": self.constant,
                "kernel": None if self.kernel is None else self.kernel.tolist(), "reason": self.reason}


def constraint_matrix(pairs: Sequence) -> np.ndarray:
    """Rows ``vec(f x^T)`` so that ``row @ T.ravel() = f(Tx)``."""
    return np.array([np.outer(p.f, p.x).ravel() if isinstance(p, SupportPair) else np.outer(p[1], p[0]).ravel()
                     for p in pairs])


def _check_pairs(X: NormSpace, pairs: Sequence, tol: float) -> list[SupportPair]:
    out = []
    for k, p in enumerate(pairs):
        x, f = (p.x, p.f) if isinstance(p, SupportPair) else (np.asarray(p[0], float), np.asarray(p[1], float))
        if len(x) != X.dim or len(f) != X.dim:
            raise DimensionError(f"pair {k} has the wrong dimension")
        errs = (abs(X.norm(x) - 1.0), abs(X.dual_norm(f) - 1.0), abs(f @ x - 1.0))
        if max(errs) > tol:
            raise ValueError(f"pair {k} is not in Pi(X): |norm-1|, |dual norm-1|, |f(x)-1| = {errs}")
        out.append(_pair(x, f))
    return out


def zero_radius_certificate(X: NormSpace, pairs: Sequence, tol: float = PAIR_TOL,
                            rank_tol: float = 1e-10) -> ZeroRadiusCertificate:
    """Lower bound on n(X) from finitely many pairs of Pi(X).

    With L the map T -> (f_i(T x_i))_i, v(T) >= |L T|_inf >= sigma_min |T|_F / sqrt(N),
    and |T|_F >= ||T||_{2->2} >= (a/b) ||T||_X by norm equivalence, so
    n(X) >= sigma_min * a / (b * sqrt(N)).
    """
    pairs = _check_pairs(X, pairs, tol)
    n, d2 = len(pairs), X.dim ** 2
    a, b = norm_equivalence(X)
    const = b / a
    L = constraint_matrix(pairs)
    _, s, vt = np.linalg.svd(L)
    rank = int(np.sum(s > rank_tol * s[0]))
    sigma = float(s[-1]) if len(s) == d2 else 0.0
    if rank < d2:
        K = vt[-1].reshape(X.dim, X.dim)
        if n < d2:
            reason = f"certificate impossible: {n} pairs for {d2} unknowns"
        else:
            reason = "constraint map has a kernel; the kernel operator is a candidate with v(T)=0"
        return ZeroRadiusCertificate(False, 0.0, rank, n, sigma, const, kernel=K, reason=reason)
    return ZeroRadiusCertificate(True, sigma / (sqrt(n) * const), rank, n, sigma, const)


def example_3_2_pairs() -> list[SupportPair]:
    pts, fns = example_3_2_elements()
    return [_pair(pts[i], fns[j]) for i, j in EXAMPLE_3_2_PAIRS]


def sampled_pairs(X: NormSpace, n: int, seed: int = 0) -> list[SupportPair]:
    rng = np.random.default_rng([seed, 7])
    U = np.vstack([np.eye(X.dim), _unit_directions(rng, n, X.dim)])
    U = _sphere_points(X, U)
    F = X.support_functionals(U)
    return [_pair(x, f) for x, f in zip(U, F)]


def default_certificate(X: NormSpace, seed: int = 0) -> ZeroRadiusCertificate | None:
    if isinstance(X, MaxOfPairsSpace):
        return zero_radius_certificate(X, example_3_2_pairs())
    try:
        return zero_radius_certificate(X, sampled_pairs(X, 4 * X.dim ** 2, seed), tol=1e-7)
    except (UnsupportedKindError, ValueError):
        return None


# -- numerical index ---------------------------------------------------------

@dataclass
class IndexEstimate:
    upper: float
    witness: np.ndarray
    lower: float
    certificate: str
    restarts: int
    seed: int
    method: str
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.certificate not in CERTIFICATES:
            raise ValueError(f"unknown certificate tag {self.certificate!r}")

    @property
    def certified_exact(self) -> bool:
        return self.certificate != "none" and self.upper - self.lower <= 1e-9

    def to_dict(self) -> dict[str, Any]:
        return {"upper": self.upper, "lower": self.lower, "certificate": self.certificate, "method": self.method,
                "restarts": self.restarts, "seed": self.seed, "witness": self.witness.tolist(),
                "details": self.details}


def _workers() -> int:
    env = os.environ.get("NUMINDEX_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _ordered_map(fn, items: list) -> list:
    """``map`` over a thread pool; results come back in input order."""
    n = min(_workers(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


class _RatioModel:
    """Batch evaluation of v(T)/||T|| for stacks of operators.

    Exact for polytopes and Euclidean spaces.  Otherwise both quantities are
    maxima over finite pools of (x, f) pairs and unit vectors, which the
    optimizer refines with the true maximizers between rounds.
    """

    def __init__(self, X: NormSpace, pool: int, seed: int):
        self.X = X
        d = X.dim
        if X.ball is not None:
            ball = X.ball
            I, J = ball.admissible_pairs()
            self.px, self.pf = ball.primal_vertices[I], ball.dual_vertices[J]
            self.nx = ball.primal_vertices
            self.exact = True
        elif isinstance(X, EuclideanSpace):
            self.exact = True
        else:
            rng = np.random.default_rng([seed, 11])
            U = _sphere_points(X, np.vstack([np.eye(d), _unit_directions(rng, pool, d)]))
            self.px, self.pf = U, X.support_functionals(U)
            self.nx = U
            self.exact = False

    def add(self, pair: SupportPair | None = None, x: np.ndarray | None = None) -> None:
        if pair is not None:
            self.px = np.vstack([self.px, pair.x])
            self.pf = np.vstack([self.pf, pair.f])
        if x is not None:
            self.nx = np.vstack([self.nx, x])

    def radii(self, Ts: np.ndarray) -> np.ndarray:
        if isinstance(self.X, EuclideanSpace) and self.X.ball is None:
            w = np.linalg.eigvalsh(0.5 * (Ts + Ts.transpose(0, 2, 1)))
            return np.abs(w).max(axis=1)
        return np.abs((self.pf.T[None] * (Ts @ self.px.T)).sum(axis=1)).max(axis=1)

    def norms(self, Ts: np.ndarray) -> np.ndarray:
        if isinstance(self.X, EuclideanSpace) and self.X.ball is None:
            return np.linalg.norm(Ts, ord=2, axis=(1, 2))
        n, d = Ts.shape[0], self.X.dim
        images = (Ts @ self.nx.T).transpose(0, 2, 1).reshape(-1, d)
        return self.X.norms(images).reshape(n, -1).max(axis=1)

    def ratios(self, Ts: np.ndarray) -> np.ndarray:
        nrm = self.norms(Ts)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(nrm > 0, self.radii(Ts) / nrm, np.inf)


def _pattern_search(model: _RatioModel, T: np.ndarray, rng: np.random.Generator, step: float,
                    min_step: float, budget: int) -> tuple[np.ndarray, float, int]:
    """Minimize the model ratio by polling a random orthonormal frame of matrix space.

    Each iteration evaluates ``T ± step * D`` for all frame directions D; the
    best improving point is accepted (step doubles) or the step halves.
    Iterates are rescaled to model norm 1.
    """
    d = T.shape[0]
    m = d * d
    T = T / model.norms(T[None])[0]
    f = model.ratios(T[None])[0]
    iters = 0
    while step > min_step and iters < budget:
        iters += 1
        Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
        D = np.vstack([Q.T, -Q.T]).reshape(2 * m, d, d)
        cands = T[None] + step * D
        vals = model.ratios(cands)
        k = int(np.argmin(vals))
        if vals[k] < f:
            T, f = cands[k], float(vals[k])
            T = T / model.norms(T[None])[0]
            step = min(2.0 * step, 1.0)
        else:
            step *= 0.5
    return T, float(f), iters


def _single_run(X: NormSpace, T0: np.ndarray, rng: np.random.Generator, pool: int, seed: int,
                budget: int, rounds: int, n_samples: int) -> dict[str, Any]:
    model = _RatioModel(X, pool, seed)
    T, fast, iters = _pattern_search(model, T0, rng, 0.5, 1e-9, budget)
    total = iters
    if not model.exact:
        for _ in range(rounds):
            rad = numerical_radius_sampled(X, T, n_samples, seed=EVAL_SEED)
            nrm, x = operator_norm_witness(X, T)
            model.add(rad.witness, x)
            if rad.value / nrm - fast <= 1e-9 * max(1.0, fast):
                break
            T, fast, iters = _pattern_search(model, T, rng, 0.05, 1e-9, budget)
            total += iters
    T = T / index_ratio(X, T, n_samples)[1]
    return {"T": T, "ratio": ratio_of(X, T, n_samples), "iterations": total}


def _dim_one_estimate(X: NormSpace, seed: int) -> IndexEstimate:
    return IndexEstimate(1.0, np.eye(1), 1.0, "cl_space", 0, seed, "dimension_one")


def polytope_index_lp(X: NormSpace) -> tuple[float, np.ndarray]:
    """Exact n(X) for a polytopal ball as a minimum of linear programs.

    For every (primal vertex v, dual vertex f) up to sign, minimize t subject
    to ``|g(Tw)| <= t`` on admissible vertex pairs (w, g) and ``f(Tv) = 1``.
    Any T feasible there has ||T|| >= 1, and every norm-one T is feasible for
    the pair attaining its norm, so the smallest optimum equals n(X).
    """
    ball = X.ball
    if ball is None:
        raise UnsupportedKindError("linear-programming index needs a polytopal ball")
    d = X.dim
    P, F = ball.primal_vertices, ball.dual_vertices
    I, J = ball.admissible_pairs()
    rows = np.einsum("kd,ke->kde", F[J], P[I]).reshape(len(I), d * d)
    rows = _canonical_rows(rows)
    k = len(rows)
    A_ub = np.vstack([np.hstack([rows, -np.ones((k, 1))]), np.hstack([-rows, -np.ones((k, 1))])])
    b_ub = np.zeros(2 * k)
    c = np.zeros(d * d + 1)
    c[-1] = 1.0
    bounds = [(None, None)] * (d * d) + [(0, None)]
    best_val, best_T = np.inf, None
    for v in _sign_representatives(P):
        for f in _sign_representatives(F):
            A_eq = np.append(np.outer(f, v).ravel(), 0.0)[None, :]
            res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=bounds, method="highs")
            if res.status == 0 and res.fun < best_val - 1e-12:
                best_val, best_T = float(res.fun), res.x[:-1].reshape(d, d)
    return best_val, best_T


def _canonical_rows(rows: np.ndarray) -> np.ndarray:
    """Rows scaled by the sign of their first nonzero entry, deduplicated."""
    lead = np.array([r[np.flatnonzero(np.abs(r) > 1e-12)[0]] if np.any(np.abs(r) > 1e-12) else 1.0 for r in rows])
    return unique_rows(rows * np.sign(lead)[:, None])


def _sign_representatives(rows: np.ndarray) -> np.ndarray:
    """One row from each {r, -r} class (the one whose first nonzero entry is positive)."""
    keep = []
    for r in rows:
        nz = np.flatnonzero(np.abs(r) > 1e-12)
        if len(nz) and r[nz[0]] > 0:
            keep.append(r)
    return np.array(keep)


def numerical_index(X: NormSpace, restarts: int = 64, seed: int = 0, budget: int = 400,
                    initial: Sequence | None = None, pool: int = 1000, rounds: int = 6,
                    n_samples: int = EVAL_SAMPLES, certify: bool = True, method: str = "auto") -> IndexEstimate:
    """Estimate n(X) as an interval ``[lower, upper]`` with a witness operator.

    ``method`` is ``"auto"`` (linear programs for polytopes, search otherwise),
    ``"lp"`` or ``"search"``.  ``initial`` adds user starting operators, each
    run in addition to the random restarts.  The upper bound is the ratio of
    the witness under :func:`index_ratio` with ``n_samples``.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    d = X.dim
    if d == 1:
        return _dim_one_estimate(X, seed)
    if X.ball is not None and method in ("auto", "lp"):
        cl = is_cl_space(X.ball)
        if cl.certified:
            return IndexEstimate(1.0, np.eye(d), 1.0, "cl_space", 0, seed, "cl_certificate",
                                 {"faces_checked": cl.faces_checked})
        val, T = polytope_index_lp(X)
        up = ratio_of(X, T)
        return IndexEstimate(up, T / operator_norm(X, T), min(max(val, 0.0), up), "polytope_lp", 0, seed,
                             "linear_programs", {"lp_value": val})

    if isinstance(X, SumSpace) and X.ball is None and method == "auto":
        return sum_index(X, restarts=restarts, seed=seed, budget=budget, pool=pool, rounds=rounds,
                         n_samples=n_samples, certify=certify)

    starts = [as_operator(T0, d) for T0 in (initial or [])]
    jobs = []
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        jobs.append((rng.standard_normal((d, d)), rng))
    for k, T0 in enumerate(starts):
        jobs.append((T0.copy(), np.random.default_rng([seed, restarts + k])))

    results = _ordered_map(lambda job: _single_run(X, job[0], job[1], pool, seed, budget, rounds, n_samples),
                           jobs)
    ratios = np.array([res["ratio"] for res in results])
    best = int(np.argmin(ratios))
    T = results[best]["T"]
    upper = float(ratios[best])
    lower, tag, details = 0.0, "none", {"best_restart": best, "restart_ratios": ratios.tolist(),
                                        "n_samples": n_samples,
                                        "exact_evaluation": is_exact(X)}
    if certify:
        cert = default_certificate(X, seed)
        if cert is not None and cert.certified:
            lower, tag = min(cert.bound, upper), "zero_radius_rank"
            details["certificate"] = cert.to_dict()
    return IndexEstimate(upper, T, lower, tag, len(jobs), seed, "pattern_search", details)


def transfer_applies(S: SumSpace) -> bool:
    """Whether n(S) >= min n(X_k) is available: l1/l_inf outer norm, or a CL-certified polytopal one."""
    if outer_kind(S.outer) is not None or S.outer.dim == 1:
        return True
    return S.outer.ball is not None and is_cl_space(S.outer.ball).certified


def sum_index(S: SumSpace, restarts: int = 64, seed: int = 0, component_estimates: Sequence | None = None,
              n_samples: int = EVAL_SAMPLES, **search) -> IndexEstimate:
    """Index of an absolute sum from its components.

    The upper bound is the best lifted component witness, evaluated on the
    sum itself.  The lower bound is min over components of their lower
    bounds whenever the outer norm allows transfer (l1, l_inf, or n(E) = 1).
    """
    if component_estimates is None:
        cache: dict[str, IndexEstimate] = {}
        component_estimates = []
        for comp in S.components:
            key = json.dumps(comp.to_dict(), sort_keys=True, default=str)
            if key not in cache:
                cache[key] = numerical_index(comp, restarts=restarts, seed=seed, n_samples=n_samples, **search)
            component_estimates.append(cache[key])
    ratios = []
    for k, est in enumerate(component_estimates):
        T = lift_operator(S, k, est.witness)
        ratios.append(ratio_of(S, T, n_samples))
    best = int(np.argmin(ratios))
    T = lift_operator(S, best, component_estimates[best].witness)
    upper = float(ratios[best])
    details = {"component_uppers": [e.upper for e in component_estimates],
               "component_lowers": [e.lower for e in component_estimates],
               "component_certificates": [e.certificate for e in component_estimates],
               "lift_ratios": ratios, "best_component": best, "n_samples": n_samples,
               "exact_evaluation": is_exact(S)}
    lower, tag = 0.0, "none"
    if transfer_applies(S):
        lower = min(min(e.lower for e in component_estimates), upper)
        tag = "theorem_transfer" if lower > 0 else "none"
    return IndexEstimate(upper, T, lower, tag, restarts, seed, "lifted_components", details)
