"""Metric clustering spaces ``(P, F, delta)``.

Points are always addressed by their index in ``P``. Centers are column
indices into ``F`` for finite spaces and coordinate vectors for the
continuous Euclidean space (where ``F`` is all of R^d).

Generic references for :meth:`MetricSpace.distance` and
:meth:`MetricSpace.ball` are ``("p", i)`` for point ``i`` and ``("c", j)``
for center ``j``; a bare coordinate array is accepted as a center in the
Euclidean variants.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.distance import cdist

from . import kernels

BALL_RTOL = 1e-12
TRIANGLE_CHECK_LIMIT = 200

__all__ = [
    "MetricError", "InfiniteCenterSet", "MetricSpace", "ExplicitMetric",
    "GraphMetric", "EuclideanMetric", "ContinuousEuclidean", "Solution",
    "distance", "distance_vector", "ball",
]


class MetricError(ValueError):
    """Malformed metric input or invalid reference."""


class InfiniteCenterSet(MetricError):
    """The operation needs to enumerate F, which is infinite here."""


@dataclass
class Solution:
    """k centers together with the induced distance vector and cost."""

    centers: list
    dist_vector: np.ndarray
    cost: float
    opt_guess: float | None = None
    iterations: int = 0
    restarts_used: int = 0
    seed: int | None = None
    extras: dict = field(default_factory=dict)

    def assignment(self, space: "MetricSpace") -> list[int]:
        cols = np.column_stack([space.center_column(c) for c in self.centers])
        return [int(i) for i in np.argmin(cols, axis=1)]


class MetricSpace:
    """Common interface. Subclasses fill in the distance primitives."""

    n: int
    m: int | None
    is_finite = True
    point_labels: list
    center_labels: list

    # primitives -------------------------------------------------------
    def pc_matrix(self) -> np.ndarray:
        """Distances point x center, shape ``(n, m)``."""
        raise NotImplementedError

    def pp_matrix(self) -> np.ndarray:
        raise NotImplementedError

    def cc_distance(self, a: int, b: int) -> float:
        raise NotImplementedError

    def scaled(self, c: float) -> "MetricSpace":
        raise NotImplementedError

    # derived ----------------------------------------------------------
    def center_column(self, center) -> np.ndarray:
        """``delta(p, center)`` for all points p."""
        if self.is_finite:
            return self.pc_matrix()[:, self._center_index(center)]
        raise NotImplementedError

    def point_row(self, i: int) -> np.ndarray:
        return self.pp_matrix()[self._point_index(i)]

    def _point_index(self, i) -> int:
        i = int(i)
        if not 0 <= i < self.n:
            raise MetricError(f"unknown point index {i}")
        return i

    def _center_index(self, j) -> int:
        if not self.is_finite:
            raise InfiniteCenterSet("centers of a continuous space are coordinates")
        j = int(j)
        if not 0 <= j < self.m:
            raise MetricError(f"unknown center index {j}")
        return j

    def distance(self, a, b) -> float:
        ka, ia = self._ref(a)
        kb, ib = self._ref(b)
        if ka == "c" and kb == "p":
            ka, ia, kb, ib = kb, ib, ka, ia
        if ka == "p" and kb == "p":
            return float(self.pp_matrix()[ia, ib])
        if ka == "p" and kb == "c":
            return float(self.pc_matrix()[ia, ib])
        return float(self.cc_distance(ia, ib))

    def _ref(self, r):
        if isinstance(r, tuple) and len(r) == 2 and r[0] in ("p", "c"):
            if r[0] == "p":
                return "p", self._point_index(r[1])
            return "c", self._center_index(r[1])
        raise MetricError(f"bad reference {r!r}; use ('p', i) or ('c', j)")

    def distance_vector(self, centers) -> np.ndarray:
        centers = list(centers) if not isinstance(centers, np.ndarray) else centers
        if len(centers) == 0:
            raise MetricError("distance vector needs at least one center")
        out = self.center_column(centers[0]).copy()
        for c in centers[1:]:
            np.minimum(out, self.center_column(c), out=out)
        return out

    def ball(self, u, r: float, universe: str = "points") -> list:
        """Closed ball around reference ``u`` within ``universe`` (points, centers or both)."""
        if r < 0:
            raise MetricError("ball radius must be nonnegative")
        if universe not in ("points", "centers", "both"):
            raise MetricError(f"bad universe {universe!r}")
        kind, idx = self._ref(u)
        limit = r * (1.0 + BALL_RTOL)
        out = []
        if universe in ("points", "both"):
            row = self.pp_matrix()[idx] if kind == "p" else self.pc_matrix()[:, idx]
            out += [("p", int(i)) for i in np.flatnonzero(row <= limit)]
        if universe in ("centers", "both"):
            if not self.is_finite:
                raise InfiniteCenterSet("cannot enumerate a ball over R^d")
            if kind == "p":
                row = self.pc_matrix()[idx]
            else:
                row = np.array([self.cc_distance(idx, j) for j in range(self.m)])
            out += [("c", int(j)) for j in np.flatnonzero(row <= limit)]
        return out

    def diameter(self) -> float:
        d = float(self.pp_matrix().max()) if self.n else 0.0
        if self.is_finite and self.m:
            d = max(d, float(self.pc_matrix().max()))
        return d

    def first_centers(self, k: int) -> list:
        """Deterministic filler centers: the first k of F (repeating if F is short)."""
        return [j % self.m for j in range(k)]


def _check_square(M: np.ndarray, what: str, check_triangle: bool | None):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise MetricError(f"{what}: matrix must be square")
    if not np.all(np.isfinite(M)):
        raise MetricError(f"{what}: infinite or NaN distances (disconnected input?)")
    if np.any(M < 0):
        raise MetricError(f"{what}: negative distance")
    if np.any(np.diag(M) != 0):
        raise MetricError(f"{what}: nonzero self-distance")
    if not np.allclose(M, M.T, rtol=1e-12, atol=0):
        raise MetricError(f"{what}: matrix is not symmetric")
    if check_triangle is None:
        check_triangle = len(M) <= TRIANGLE_CHECK_LIMIT
    if check_triangle:
        bad = kernels.triangle_violation(M)
        if bad is not None:
            a, b, c = bad
            raise MetricError(f"{what}: triangle inequality fails for entries {a}, {b}, {c}")


class ExplicitMetric(MetricSpace):
    """Finite metric given by a full symmetric matrix over ``ids``.

    ``points`` and ``centers`` list the ids forming P and F; they may overlap.
    """

    def __init__(self, matrix, ids=None, points=None, centers=None, check_triangle=None):
        M = np.asarray(matrix, dtype=np.float64)
        ids = list(range(len(M))) if ids is None else list(ids)
        if len(ids) != len(M):
            raise MetricError("ids and matrix size differ")
        if len(set(ids)) != len(ids):
            raise MetricError("duplicate ids")
        _check_square(M, "explicit metric", check_triangle)
        pos = {v: i for i, v in enumerate(ids)}
        points = ids if points is None else list(points)
        centers = ids if centers is None else list(centers)
        try:
            self._pi = np.array([pos[p] for p in points], dtype=np.int64)
            self._ci = np.array([pos[c] for c in centers], dtype=np.int64)
        except KeyError as exc:
            raise MetricError(f"unknown id {exc}") from None
        if len(points) == 0 or len(centers) == 0:
            raise MetricError("need at least one point and one center")
        self.M = M
        self.ids = ids
        self.point_labels = points
        self.center_labels = centers
        self.n = len(points)
        self.m = len(centers)
        self._pc = M[np.ix_(self._pi, self._ci)]
        self._pp = M[np.ix_(self._pi, self._pi)]

    def pc_matrix(self):
        return self._pc

    def pp_matrix(self):
        return self._pp

    def cc_distance(self, a, b):
        return float(self.M[self._ci[a], self._ci[b]])

    def scaled(self, c):
        return ExplicitMetric(self.M * c, self.ids, self.point_labels,
                              self.center_labels, check_triangle=False)


class GraphMetric(MetricSpace):
    """Shortest-path metric of an undirected graph with positive edge weights.

    Distances are filled lazily, one single-source search per source vertex.
    """

    def __init__(self, edges, points=None, centers=None, scale: float = 1.0):
        vertex_ids: dict = {}
        rows, cols, data = [], [], []
        for e in edges:
            try:
                u, v, w = e
                w = float(w)
            except (TypeError, ValueError):
                raise MetricError(f"bad edge {e!r}") from None
            if not (w > 0 and np.isfinite(w)):
                raise MetricError(f"edge ({u}, {v}) must have a positive finite weight")
            for x in (u, v):
                vertex_ids.setdefault(x, len(vertex_ids))
            rows.append(vertex_ids[u])
            cols.append(vertex_ids[v])
            data.append(w * scale)
        for extra in list(points or []) + list(centers or []):
            vertex_ids.setdefault(extra, len(vertex_ids))
        if not vertex_ids:
            raise MetricError("empty graph")
        N = len(vertex_ids)
        self.edges = list(edges)
        self.scale = scale
        # keep the lighter of parallel edges
        A = {}
        for r, c, w in zip(rows, cols, data):
            if r == c:
                continue
            key = (min(r, c), max(r, c))
            A[key] = min(A.get(key, np.inf), w)
        if A:
            keys = np.array(list(A.keys()))
            vals = np.array(list(A.values()))
            self._adj = csr_matrix((vals, (keys[:, 0], keys[:, 1])), shape=(N, N))
        else:
            self._adj = csr_matrix((N, N))
        self.vertex_ids = vertex_ids
        labels = list(vertex_ids)
        self.point_labels = labels if points is None else list(points)
        self.center_labels = labels if centers is None else list(centers)
        self._pv = np.array([vertex_ids[p] for p in self.point_labels], dtype=np.int64)
        self._cv = np.array([vertex_ids[c] for c in self.center_labels], dtype=np.int64)
        self.n = len(self._pv)
        self.m = len(self._cv)
        if self.n == 0 or self.m == 0:
            raise MetricError("need at least one point and one center")
        self._cache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()
        self._pc = None
        self._pp = None
        reach = self.sssp(int(self._pv[0]))
        used = np.concatenate([self._pv, self._cv])
        if not np.all(np.isfinite(reach[used])):
            raise MetricError("graph is disconnected over P and F")

    def sssp(self, vertex: int) -> np.ndarray:
        row = self._cache.get(vertex)
        if row is None:
            row = dijkstra(self._adj, directed=False, indices=vertex)
            with self._lock:
                row = self._cache.setdefault(vertex, row)
        return row

    def vertex_distance(self, a, b) -> float:
        """Distance between two vertex labels."""
        try:
            return float(self.sssp(self.vertex_ids[a])[self.vertex_ids[b]])
        except KeyError as exc:
            raise MetricError(f"unknown vertex {exc}") from None

    def pc_matrix(self):
        if self._pc is None:
            self._pc = np.array([self.sssp(int(v))[self._cv] for v in self._pv])
        return self._pc

    def pp_matrix(self):
        if self._pp is None:
            self._pp = np.array([self.sssp(int(v))[self._pv] for v in self._pv])
        return self._pp

    def cc_distance(self, a, b):
        return float(self.sssp(int(self._cv[a]))[self._cv[b]])

    def scaled(self, c):
        return GraphMetric(self.edges, self.point_labels, self.center_labels, self.scale * c)


class EuclideanMetric(MetricSpace):
    """Finite point and center sets in R^d with the l2 distance."""

    def __init__(self, points, centers=None):
        P = np.atleast_2d(np.asarray(points, dtype=np.float64))
        F = P if centers is None else np.atleast_2d(np.asarray(centers, dtype=np.float64))
        if P.size == 0 or F.size == 0:
            raise MetricError("need at least one point and one center")
        if P.shape[1] != F.shape[1]:
            raise MetricError("points and centers have different dimension")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(F))):
            raise MetricError("non-finite coordinates")
        self.P, self.F = P, F
        self.d = P.shape[1]
        self.n, self.m = len(P), len(F)
        self.point_labels = list(range(self.n))
        self.center_labels = list(range(self.m))
        self._pc = cdist(P, F)
        self._pp = cdist(P, P)

    def pc_matrix(self):
        return self._pc

    def pp_matrix(self):
        return self._pp

    def cc_distance(self, a, b):
        return float(np.linalg.norm(self.F[a] - self.F[b]))

    def scaled(self, c):
        return EuclideanMetric(self.P * c, self.F * c)


class ContinuousEuclidean(MetricSpace):
    """Finite P in R^d, centers anywhere in R^d."""

    is_finite = False

    def __init__(self, points):
        P = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if P.size == 0:
            raise MetricError("need at least one point")
        if not np.all(np.isfinite(P)):
            raise MetricError("non-finite coordinates")
        self.P = P
        self.d = P.shape[1]
        if self.d == 0:
            raise MetricError("dimension must be positive")
        self.n = len(P)
        self.m = None
        self.point_labels = list(range(self.n))
        self.center_labels = []
        self._pp = cdist(P, P)

    def pc_matrix(self):
        raise InfiniteCenterSet("continuous Euclidean space has no finite center set")

    def pp_matrix(self):
        return self._pp

    def cc_distance(self, a, b):
        return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))

    def center_column(self, center):
        c = np.asarray(center, dtype=np.float64)
        if c.shape != (self.d,):
            raise MetricError(f"center must have {self.d} coordinates")
        return np.sqrt(np.sum((self.P - c) ** 2, axis=1))

    def _ref(self, r):
        if isinstance(r, tuple) and len(r) == 2 and r[0] == "p":
            return "p", self._point_index(r[1])
        c = np.asarray(r, dtype=np.float64)
        if c.shape == (self.d,):
            return "x", c
        raise MetricError(f"bad reference {r!r}; use ('p', i) or a coordinate vector")

    def distance(self, a, b):
        ka, ia = self._ref(a)
        kb, ib = self._ref(b)
        xa = self.P[ia] if ka == "p" else ia
        xb = self.P[ib] if kb == "p" else ib
        return float(np.linalg.norm(xa - xb))

    def ball(self, u, r, universe="points"):
        if universe != "points":
            raise InfiniteCenterSet("cannot enumerate a ball over R^d")
        if r < 0:
            raise MetricError("ball radius must be nonnegative")
        kind, x = self._ref(u)
        row = self._pp[x] if kind == "p" else self.center_column(x)
        return [("p", int(i)) for i in np.flatnonzero(row <= r * (1.0 + BALL_RTOL))]

    def diameter(self):
        return float(self._pp.max())

    def first_centers(self, k):
        return [self.P[j % self.n].copy() for j in range(k)]

    def scaled(self, c):
        return ContinuousEuclidean(self.P * c)


def distance(space: MetricSpace, a, b) -> float:
    return space.distance(a, b)


def distance_vector(space: MetricSpace, centers) -> np.ndarray:
    return space.distance_vector(centers)


def ball(space: MetricSpace, u, r: float, universe: str = "points") -> list:
    return space.ball(u, r, universe)
