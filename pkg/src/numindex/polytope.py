"""Vertex geometry for centrally symmetric polytopal unit balls.

A polytopal ball is stored twice: by the extreme points of ``B_X`` and by the
extreme points of the dual ball ``B_{X*}``.  The two lists are polar to each
other, so either one determines the other.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

DEDUP_DECIMALS = 9
BRUTE_FORCE_LIMIT = 250_000


class DegeneratePolytopeError(ValueError):
    """Raised when a vertex list cannot describe a symmetric unit ball."""


def _clean(points: np.ndarray) -> np.ndarray:
    pts = np.where(np.abs(points) < 1e-13, 0.0, points)
    return pts + 0.0  # drops negative zeros


def unique_rows(points: np.ndarray, decimals: int = DEDUP_DECIMALS) -> np.ndarray:
    """Deduplicate rows up to rounding, returned in lexicographic order."""
    pts = _clean(np.asarray(points, dtype=float))
    if len(pts) == 0:
        return pts
    keys = np.round(pts, decimals) + 0.0
    _, idx = np.unique(keys, axis=0, return_index=True)
    out = pts[np.sort(idx)]
    order = np.lexsort(np.round(out, decimals).T[::-1])
    return out[order]


def symmetrize(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    return unique_rows(np.vstack([pts, -pts]))


def extreme_points(points: np.ndarray) -> np.ndarray:
    """Extreme points of the absolutely convex hull of ``points``."""
    pts = symmetrize(points)
    dim = pts.shape[1]
    if dim == 1:
        m = np.max(np.abs(pts))
        return np.array([[-m], [m]])
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegeneratePolytopeError(f"points do not span R^{dim}: {exc}") from None
    return unique_rows(pts[hull.vertices])


def polar_vertices(vertices: np.ndarray, method: str = "auto") -> np.ndarray:
    """Vertices of the polar of ``conv(±vertices)``.

    If ``vertices`` are the extreme points of ``B_{X*}`` the result is the
    vertex list of ``B_X`` and vice versa.  ``method`` is ``"qhull"``,
    ``"brute"`` (facet-intersection enumeration) or ``"auto"``.
    """
    pts = symmetrize(vertices)
    n, dim = pts.shape
    if dim == 1:
        m = np.max(np.abs(pts))
        return np.array([[-1.0 / m], [1.0 / m]])
    if method == "auto":
        method = "brute" if dim <= 6 and comb(n, dim) <= BRUTE_FORCE_LIMIT else "qhull"
    if method == "brute":
        return _polar_brute_force(pts)
    if method == "qhull":
        return _polar_qhull(pts)
    raise ValueError(f"unknown enumeration method {method!r}")


def _polar_qhull(pts: np.ndarray) -> np.ndarray:
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegeneratePolytopeError(str(exc)) from None
    eq = hull.equations
    if np.any(eq[:, -1] >= -1e-12):
        raise DegeneratePolytopeError("origin is not interior to the hull")
    return unique_rows(-eq[:, :-1] / eq[:, -1:])


def _polar_brute_force(pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Solve every d-subset of facet equations ``<f, x> = 1`` and keep feasible points."""
    n, dim = pts.shape
    found = []
    ones = np.ones(dim)
    for rows in itertools.combinations(range(n), dim):
        A = pts[list(rows)]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        x = np.linalg.solve(A, ones)
        if np.max(pts @ x) <= 1.0 + tol:
            found.append(x)
    if not found:
        raise DegeneratePolytopeError("no vertices found; ball is unbounded or degenerate")
    return unique_rows(np.array(found))


@dataclass(frozen=True, eq=False)
class PolytopeBall:
    """Primal and dual vertex lists of a symmetric polytopal unit ball.

    ``norm(x) = max_f <f, x>`` over ``dual_vertices`` and the dual norm is the
    same maximum over ``primal_vertices``.
    """

    primal_vertices: np.ndarray
    dual_vertices: np.ndarray
    pairing_tolerance: float = 1e-10
    _adm: tuple = field(default=None, init=False, repr=False)

    def __post_init__(self):
        P = unique_rows(np.atleast_2d(np.asarray(self.primal_vertices, dtype=float)))
        F = unique_rows(np.atleast_2d(np.asarray(self.dual_vertices, dtype=float)))
        if P.shape[1] != F.shape[1]:
            raise ValueError("primal and dual vertices live in different dimensions")
        if len(P) < 2 or len(F) < 2:
            raise DegeneratePolytopeError("a unit ball needs at least two vertices on each side")
        P.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "primal_vertices", P)
        object.__setattr__(self, "dual_vertices", F)
        self._check()

    def _check(self):
        tol = self.pairing_tolerance
        for name, pts in (("primal", self.primal_vertices), ("dual", self.dual_vertices)):
            if len(unique_rows(np.vstack([pts, -pts]))) != len(pts):
                raise DegeneratePolytopeError(f"{name} vertices are not symmetric under negation")
        G = self.dual_vertices @ self.primal_vertices.T
        if np.max(np.abs(np.max(np.abs(G), axis=0) - 1.0)) > tol:
            raise DegeneratePolytopeError("some primal vertex does not have norm 1")
        if np.max(np.abs(np.max(np.abs(G), axis=1) - 1.0)) > tol:
            raise DegeneratePolytopeError("some dual vertex does not have dual norm 1")

    @classmethod
    def from_dual(cls, dual_vertices, method: str = "auto", tol: float = 1e-10) -> "PolytopeBall":
        F = extreme_points(np.atleast_2d(dual_vertices))
        return cls(polar_vertices(F, method), F, tol)

    @classmethod
    def from_primal(cls, primal_vertices, method: str = "auto", tol: float = 1e-10) -> "PolytopeBall":
        P = extreme_points(np.atleast_2d(primal_vertices))
        return cls(P, polar_vertices(P, method), tol)

    @property
    def dim(self) -> int:
        return self.primal_vertices.shape[1]

    def gram(self) -> np.ndarray:
        """Pairings ``<f_j, v_i>`` indexed (primal, dual)."""
        return self.primal_vertices @ self.dual_vertices.T

    def admissible_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Indices (i, j) with ``<f_j, v_i> = 1``: the vertex pairs lying in Pi(X)."""
        if self._adm is None:
            i, j = np.nonzero(np.abs(self.gram() - 1.0) <= self.pairing_tolerance)
            object.__setattr__(self, "_adm", (i, j))
        return self._adm

    def face(self, j: int) -> np.ndarray:
        """Primal vertices of the facet exposed by dual vertex ``j``."""
        vals = self.primal_vertices @ self.dual_vertices[j]
        return self.primal_vertices[np.abs(vals - 1.0) <= self.pairing_tolerance]

    def polar(self) -> "PolytopeBall":
        return PolytopeBall(self.dual_vertices, self.primal_vertices, self.pairing_tolerance)


def in_convex_hull(point: np.ndarray, points: np.ndarray) -> bool:
    """Linear feasibility: is ``point`` a convex combination of ``points``?"""
    k = len(points)
    A_eq = np.vstack([np.asarray(points, dtype=float).T, np.ones((1, k))])
    b_eq = np.append(np.asarray(point, dtype=float), 1.0)
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0
