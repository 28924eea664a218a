"""Monotone norm objectives with exact evaluation and closed-form subgradients.

Every objective maps a nonnegative vector indexed by the points of an
instance to a nonnegative real. ``subgradient`` returns a vector ``g >= 0``
with ``g @ x == f(x)`` and ``g @ y <= f(y)`` for every ``y >= 0``; exact
subgradients are in particular ``eps``-approximate for every ``eps``.

Ties in argmax/sort based rules are broken toward the lowest point index,
and the subgradient at a zero vector (or zero DAG node) is the one at the
all-ones direction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

RTOL = 1e-9

__all__ = [
    "NormError", "NormObjective", "SubgradientVector", "LzNorm", "WeightedMax",
    "TopL", "OrderedNorm", "PriorityOrdered", "CascadeDag", "CascadeNorm",
    "FairGroup", "evaluate", "subgradient", "ball_mass", "norm_from_spec",
    "norm_to_spec", "load_norm",
]


class NormError(ValueError):
    """Malformed norm specification or invalid argument vector."""


@dataclass(frozen=True)
class SubgradientVector:
    g: np.ndarray
    epsilon_sg: float


def _parse_exponent(q) -> float:
    if isinstance(q, str):
        if q.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        try:
            q = float(q)
        except ValueError:
            raise NormError(f"bad exponent {q!r}") from None
    q = float(q)
    if not q >= 1.0:
        raise NormError(f"exponent must be >= 1 or inf, got {q}")
    return q


def _nonneg_vector(v, name) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise NormError(f"{name} must be a flat vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise NormError(f"{name} must be finite and nonnegative")
    return arr


def _lq(vals: np.ndarray, weights: np.ndarray | None, q: float) -> float:
    """``(sum w v^q)^(1/q)``; ``q = inf`` means the weighted max ``max w v``."""
    if weights is None:
        weights = np.ones_like(vals)
    if vals.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(weights * vals))
    if q == 1.0:
        return float(weights @ vals)
    scale = float(np.max(vals))
    if scale == 0.0:
        return 0.0
    return scale * float(weights @ (vals / scale) ** q) ** (1.0 / q)


def _lq_grad(vals: np.ndarray, weights: np.ndarray, q: float) -> np.ndarray:
    """A subgradient of ``_lq(., weights, q)`` at ``vals`` (local chain-rule factor)."""
    if math.isinf(q):
        out = np.zeros_like(vals)
        wv = weights * vals
        if not np.any(wv > 0):
            wv = weights.copy()
        j = int(np.argmax(wv))
        out[j] = weights[j]
        return out
    if q == 1.0:
        return weights.copy()
    norm = _lq(vals, weights, q)
    if norm == 0.0:
        total = float(weights.sum())
        if total == 0.0:
            return np.zeros_like(vals)
        return weights / total ** ((q - 1.0) / q)
    return weights * (vals / norm) ** (q - 1.0)


class NormObjective:
    """Base class. ``n`` is the number of points, or None when the norm is dimension-free."""

    kind = "abstract"
    n: int | None = None
    symmetric = False

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise NormError("argument must be a flat vector")
        if self.n is not None and x.size != self.n:
            raise NormError(f"dimension mismatch: norm has n={self.n}, vector has {x.size}")
        if not np.all(np.isfinite(x)):
            raise NormError("argument has non-finite entries")
        if np.any(x < 0):
            raise NormError("argument has a negative component")
        return x

    def evaluate(self, x) -> float:
        return self._evaluate(self._check(x))

    def subgradient(self, x, epsilon_sg: float = 0.0) -> SubgradientVector:
        x = self._check(x)
        if not np.any(x > 0):
            g = self._grad(np.ones_like(x))
        else:
            g = self._grad(x)
        return SubgradientVector(g, float(epsilon_sg))

    def ball_mass(self, members, n: int | None = None) -> float:
        """Norm of the 0/1 characteristic vector of ``members``."""
        size = self.n if self.n is not None else n
        members = np.asarray(list(members), dtype=np.int64)
        if size is None:
            size = int(members.max()) + 1 if members.size else 0
        if members.size and (members.min() < 0 or members.max() >= size):
            raise NormError("member index out of range")
        ind = np.zeros(size)
        ind[members] = 1.0
        return self._evaluate(ind)

    def bind(self, n: int) -> "NormObjective":
        """Check the norm against an instance with ``n`` points."""
        if self.n is not None and self.n != n:
            raise NormError(f"norm dimension {self.n} does not match {n} points")
        return self

    def _evaluate(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class LzNorm(NormObjective):
    kind = "lz"
    symmetric = True

    def __init__(self, z=2.0, n: int | None = None):
        self.z = _parse_exponent(z)
        self.n = n

    def _evaluate(self, x):
        return _lq(x, None, self.z)

    def _grad(self, x):
        return _lq_grad(x, np.ones_like(x), self.z)

    def __repr__(self):
        return f"LzNorm(z={self.z})"


class WeightedMax(NormObjective):
    kind = "weighted_max"

    def __init__(self, weights):
        self.weights = _nonneg_vector(weights, "weights")
        self.n = self.weights.size

    def _evaluate(self, x):
        return float(np.max(self.weights * x)) if x.size else 0.0

    def _grad(self, x):
        return _lq_grad(x, self.weights, math.inf)


class TopL(NormObjective):
    """Sum of the ``l`` largest entries (l-centrum)."""

    kind = "top_l"
    symmetric = True

    def __init__(self, l: int, n: int | None = None):
        if int(l) != l or l < 1:
            raise NormError("top_l needs a positive integer l")
        self.l = int(l)
        self.n = n

    def _evaluate(self, x):
        if x.size <= self.l:
            return float(x.sum())
        return float(np.sum(np.partition(x, x.size - self.l)[x.size - self.l:]))

    def _grad(self, x):
        order = np.argsort(-x, kind="stable")
        g = np.zeros_like(x)
        g[order[:self.l]] = 1.0
        return g


class OrderedNorm(NormObjective):
    """``v @ sort(x, descending)`` for a nonincreasing nonnegative ``v``."""

    kind = "ordered"
    symmetric = True

    def __init__(self, v):
        self.v = _nonneg_vector(v, "v")
        if np.any(np.diff(self.v) > 0):
            raise NormError("ordered norm needs a non-increasing v")
        self.n = self.v.size

    def _evaluate(self, x):
        return float(self.v @ np.sort(x)[::-1])

    def _grad(self, x):
        order = np.argsort(-x, kind="stable")
        g = np.empty_like(x)
        g[order] = self.v
        return g


class PriorityOrdered(NormObjective):
    """``v @ sort(w * x, descending)``."""

    kind = "priority_ordered"

    def __init__(self, v, w):
        self.v = _nonneg_vector(v, "v")
        self.w = _nonneg_vector(w, "w")
        if np.any(np.diff(self.v) > 0):
            raise NormError("priority ordered norm needs a non-increasing v")
        if self.v.size != self.w.size:
            raise NormError("v and w must have equal length")
        self.n = self.v.size

    def _evaluate(self, x):
        return float(self.v @ np.sort(self.w * x)[::-1])

    def _grad(self, x):
        order = np.argsort(-(self.w * x), kind="stable")
        g = np.empty_like(x)
        g[order] = self.v * self.w[order]
        return g


class CascadeDag:
    """Evaluation DAG: sources are points, internal nodes aggregate by weighted l_q.

    Parameters
    ----------
    sources : sequence of node ids, one per point in point order
    nodes : mapping ``id -> q`` for the internal nodes
    edges : iterable of ``(u, v, weight)``
    """

    def __init__(self, sources: Sequence, nodes: dict, edges):
        self.sources = list(sources)
        if len(set(self.sources)) != len(self.sources):
            raise NormError("duplicate source id")
        self.q = {nid: _parse_exponent(q) for nid, q in nodes.items()}
        overlap = set(self.sources) & set(self.q)
        if overlap:
            raise NormError(f"ids used both as source and internal node: {sorted(map(str, overlap))}")
        index = {sid: i for i, sid in enumerate(self.sources)}
        n_src = len(self.sources)
        for i, nid in enumerate(self.q):
            index[nid] = n_src + i
        self.index = index
        size = len(index)
        self.incoming = [[] for _ in range(size)]
        outdeg = np.zeros(size, dtype=int)
        for e in edges:
            if len(e) != 3:
                raise NormError("edges must be [u, v, weight] triples")
            u, v, w = e
            if u not in index or v not in index:
                raise NormError(f"edge ({u}, {v}) references an unknown node")
            w = float(w)
            if not (w >= 0 and math.isfinite(w)):
                raise NormError("edge weights must be finite and nonnegative")
            iu, iv = index[u], index[v]
            if iv < n_src:
                raise NormError(f"source node {v} cannot have incoming edges")
            self.incoming[iv].append((iu, w))
            outdeg[iu] += 1
        sinks = np.flatnonzero(outdeg == 0)
        if len(sinks) != 1:
            raise NormError(f"cascade needs exactly one sink, found {len(sinks)}")
        self.sink = int(sinks[0])
        if self.sink < n_src and size > 1:
            raise NormError("the sink must be an internal node")
        self.order = self._topological(n_src, size)
        self.qs = [None] * n_src + [self.q[nid] for nid in self.q]

    def _topological(self, n_src, size):
        indeg = np.array([len(inc) for inc in self.incoming])
        children = [[] for _ in range(size)]
        for v, inc in enumerate(self.incoming):
            for u, _ in inc:
                children[u].append(v)
        ready = [v for v in range(size) if indeg[v] == 0]
        order = []
        while ready:
            v = ready.pop()
            order.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != size:
            raise NormError("cascade graph has a cycle")
        for v in range(n_src, size):
            if not self.incoming[v]:
                raise NormError("internal node without inputs")
        return [v for v in order if v >= n_src]

    @property
    def n(self):
        return len(self.sources)

    def node_values(self, x: np.ndarray) -> np.ndarray:
        vals = np.zeros(len(self.index))
        vals[: self.n] = x
        for v in self.order:
            inc = self.incoming[v]
            idx = np.fromiter((u for u, _ in inc), dtype=np.int64, count=len(inc))
            ws = np.fromiter((w for _, w in inc), dtype=np.float64, count=len(inc))
            vals[v] = _lq(vals[idx], ws, self.qs[v])
        return vals

    def gradient(self, x: np.ndarray) -> np.ndarray:
        vals = self.node_values(x)
        size = len(self.index)
        grads = np.zeros((size, self.n))
        grads[np.arange(self.n), np.arange(self.n)] = 1.0
        for v in self.order:
            inc = self.incoming[v]
            idx = np.fromiter((u for u, _ in inc), dtype=np.int64, count=len(inc))
            ws = np.fromiter((w for _, w in inc), dtype=np.float64, count=len(inc))
            child = vals[idx]
            if not np.any(ws * child > 0):
                child = np.ones_like(child)
            coef = _lq_grad(child, ws, self.qs[v])
            grads[v] = coef @ grads[idx]
        return grads[self.sink]


class CascadeNorm(NormObjective):
    kind = "cascade"

    def __init__(self, dag: CascadeDag):
        self.dag = dag
        self.n = dag.n

    def _evaluate(self, x):
        return float(self.dag.node_values(x)[self.dag.sink])

    def subgradient(self, x, epsilon_sg: float = 0.0) -> SubgradientVector:
        # zero nodes are handled locally inside the DAG walk
        return SubgradientVector(self.dag.gradient(self._check(x)), float(epsilon_sg))

    def _grad(self, x):
        return self.dag.gradient(x)


class FairGroup(CascadeNorm):
    """``l_q`` over groups of weighted ``l_z`` group costs.

    ``q = inf, z = 1`` with 0/1 group weights is the socially fair objective
    ``max_i sum_{p in P_i} x_p``.
    """

    kind = "fair_group"

    def __init__(self, q, z, groups):
        self.q_outer = _parse_exponent(q)
        self.z = _parse_exponent(z)
        groups = [_nonneg_vector(g, "group weights") for g in groups]
        if not groups:
            raise NormError("fair_group needs at least one group")
        n = groups[0].size
        if any(g.size != n for g in groups):
            raise NormError("group weight vectors must share one length")
        self.groups = groups
        sources = [("p", i) for i in range(n)]
        nodes = {("g", i): self.z for i in range(len(groups))}
        nodes["sink"] = self.q_outer
        edges = [(("p", p), ("g", i), w) for i, g in enumerate(groups)
                 for p, w in enumerate(g) if w > 0]
        edges += [(("g", i), "sink", 1.0) for i in range(len(groups))]
        for i, g in enumerate(groups):
            if not np.any(g > 0):
                raise NormError(f"group {i} has no positive weight")
        uncovered = [p for p in range(n) if not any(g[p] > 0 for g in groups)]
        if uncovered:
            raise NormError(f"points {uncovered} belong to no group")
        super().__init__(CascadeDag(sources, nodes, edges))


def evaluate(norm: NormObjective, x) -> float:
    return norm.evaluate(x)


def subgradient(norm: NormObjective, x, epsilon_sg: float = 0.0) -> SubgradientVector:
    return norm.subgradient(x, epsilon_sg)


def ball_mass(norm: NormObjective, member_set, n: int | None = None) -> float:
    return norm.ball_mass(member_set, n)


def norm_from_spec(spec: dict) -> NormObjective:
    """Build a norm from its JSON description (see README for the schema)."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise NormError("norm spec must be an object with a 'type' field")
    kind = spec["type"]
    try:
        if kind == "lz":
            return LzNorm(spec["z"])
        if kind == "weighted_max":
            return WeightedMax(spec["weights"])
        if kind == "top_l":
            return TopL(spec["l"])
        if kind == "ordered":
            return OrderedNorm(spec["v"])
        if kind == "priority_ordered":
            return PriorityOrdered(spec["v"], spec["w"])
        if kind == "fair_group":
            return FairGroup(spec["q"], spec["z"], spec["groups"])
        if kind == "cascade":
            nodes = {_hashable(nd["id"]): nd["q"] for nd in spec["nodes"]}
            sources = [_hashable(s) for s in spec["sources"]]
            edges = [(_hashable(u), _hashable(v), w) for u, v, w in spec["edges"]]
            return CascadeNorm(CascadeDag(sources, nodes, edges))
    except KeyError as exc:
        raise NormError(f"norm spec of type {kind!r} is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, NormError):
            raise
        raise NormError(f"malformed {kind!r} norm spec: {exc}") from None
    raise NormError(f"unknown norm type {kind!r}")


def _hashable(v):
    return tuple(v) if isinstance(v, list) else v


def _exp_out(q):
    return "inf" if math.isinf(q) else q


def norm_to_spec(norm: NormObjective) -> dict:
    if isinstance(norm, LzNorm):
        return {"type": "lz", "z": _exp_out(norm.z)}
    if isinstance(norm, WeightedMax):
        return {"type": "weighted_max", "weights": norm.weights.tolist()}
    if isinstance(norm, TopL):
        return {"type": "top_l", "l": norm.l}
    if isinstance(norm, OrderedNorm):
        return {"type": "ordered", "v": norm.v.tolist()}
    if isinstance(norm, PriorityOrdered):
        return {"type": "priority_ordered", "v": norm.v.tolist(), "w": norm.w.tolist()}
    if isinstance(norm, FairGroup):
        return {"type": "fair_group", "q": _exp_out(norm.q_outer), "z": _exp_out(norm.z),
                "groups": [g.tolist() for g in norm.groups]}
    if isinstance(norm, CascadeNorm):
        dag = norm.dag
        names = {i: nid for nid, i in dag.index.items()}
        return {
            "type": "cascade",
            "sources": list(dag.sources),
            "nodes": [{"id": nid, "q": _exp_out(q)} for nid, q in dag.q.items()],
            "edges": [[names[u], names[v], w] for v, inc in enumerate(dag.incoming)
                      for u, w in inc],
        }
    raise NormError(f"cannot serialise {norm!r}")


def load_norm(path) -> NormObjective:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as exc:
        raise NormError(f"{path}: invalid JSON ({exc})") from None
    return norm_from_spec(spec)
