"""Scattering game simulator and verifiers.

A scattering is a sequence of (center, point, radius) triples where each
center covers every earlier point (within its radius, up to the solver
slack) but is refuted by its own point at more than ``(1+eps)`` times the
radius. Game lengths found here are lower bounds on the scatter dimension.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import ballint
from .ballint import Request
from .metrics import MetricSpace

TOL = 1e-9


@dataclass
class ScatterRecord:
    triples: list               # (center, point, radius)
    eps: float
    mode: str = "plain"         # "plain" or "algorithmic"
    slack: float = 0.0          # covering slack allowed by the center solver

    def __len__(self):
        return len(self.triples)

    def prefix(self, length: int) -> "ScatterRecord":
        return ScatterRecord(self.triples[:length], self.eps, self.mode, self.slack)

    def to_json(self) -> dict:
        def c(x):
            return x.tolist() if isinstance(x, np.ndarray) else x
        return {"eps": self.eps, "mode": self.mode, "slack": self.slack,
                "triples": [[c(x), int(p), float(r)] for x, p, r in self.triples]}


@dataclass
class VerifyReport:
    valid: bool
    violation: tuple | None = None   # (i, j); j == i means the refutation failed
    kind: str | None = None


@dataclass
class PackingReport:
    centers: list
    valid: bool
    min_pairwise: float
    max_pairwise: float
    contained: bool
    problems: list = field(default_factory=list)


def _point_distance(space: MetricSpace, center, p: int) -> float:
    return float(space.center_column(center)[p])


def verify_scattering(space: MetricSpace, record: ScatterRecord, eps: float | None = None) -> VerifyReport:
    eps = record.eps if eps is None else eps
    for i, (x, p, r) in enumerate(record.triples):
        col = space.center_column(x)
        for j in range(i):
            pj, rj = record.triples[j][1], record.triples[j][2]
            if col[pj] > rj * (1.0 + record.slack) * (1.0 + TOL):
                return VerifyReport(False, (i, j), "covering")
        if not col[p] > (1.0 + eps) * r * (1.0 - TOL):
            return VerifyReport(False, (i, i), "refutation")
    return VerifyReport(True)


def _center_distance(space: MetricSpace, a, b) -> float:
    if space.is_finite:
        return space.cc_distance(a, b)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def packing_from_scattering(space: MetricSpace, record: ScatterRecord) -> PackingReport:
    """Centers ``x_2..x_l`` of a record: pairwise > eps*r, all inside ``ball(p_1, r)``."""
    if len(record) < 2:
        raise ValueError("packing needs a record of length at least 2")
    r = record.triples[0][2]
    if any(t[2] != r for t in record.triples):
        raise ValueError("packing is defined for records with a single radius")
    centers = [t[0] for t in record.triples[1:]]
    p1 = record.triples[0][1]
    cover = r * (1.0 + record.slack) * (1.0 + TOL)
    problems = []
    contained = True
    for i, x in enumerate(centers, start=2):
        if _point_distance(space, x, p1) > cover:
            contained = False
            problems.append(f"center {i} is outside ball(p_1, r)")
    pair = [_center_distance(space, a, b) for a, b in combinations(centers, 2)]
    lo = min(pair) if pair else float("inf")
    hi = max(pair) if pair else 0.0
    for (a, b), d in zip(combinations(range(2, len(centers) + 2), 2), pair):
        if not d > record.eps * r * (1.0 - TOL):
            problems.append(f"centers {a} and {b} are within eps*r")
        if d > 2.0 * cover:
            problems.append(f"centers {a} and {b} are farther than 2r")
    return PackingReport(centers, not problems, lo, hi, contained, problems)


def play_scatter_game(space: MetricSpace, eps: float, center_strategy: str = "exact_finite",
                      point_strategy: str = "farthest_violator", max_len: int = 100,
                      seed: int = 0, radius: float = 1.0) -> ScatterRecord:
    """Play the center player against a greedy point player.

    The first center is drawn uniformly using ``seed``; every later center
    comes from the Ball Intersection strategy over all earlier points with
    radius ``radius``. The point player answers with a point farther than
    ``(1+eps) * radius`` (the farthest one, or a random one).
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if center_strategy not in ("exact_finite", "ky_continuous"):
        raise ValueError(f"unknown center strategy {center_strategy!r}")
    if point_strategy not in ("farthest_violator", "random_violator"):
        raise ValueError(f"unknown point strategy {point_strategy!r}")
    rng = np.random.default_rng(seed)
    if center_strategy == "exact_finite":
        if not space.is_finite:
            raise ballint.InfiniteCenterSet("exact_finite needs a finite center set")
        x = int(rng.integers(space.m))
        mode, slack = "plain", 0.0
    else:
        x = space.P[int(rng.integers(space.n))].copy()
        mode, slack = "algorithmic", eps / 2.0
    triples = []
    while True:
        col = space.center_column(x)
        violators = np.flatnonzero(col > (1.0 + eps) * radius * (1.0 + TOL))
        if violators.size == 0:
            break
        if point_strategy == "farthest_violator":
            p = int(violators[np.argmax(col[violators])])
        else:
            p = int(rng.choice(violators))
        triples.append((x, p, float(radius)))
        if len(triples) >= max_len:
            break
        if center_strategy == "exact_finite":
            out = ballint.solve_exact_finite(space, [Request(t[1], radius) for t in triples])
        else:
            pts = space.P[[t[1] for t in triples]]
            out = ballint.solve_ky_euclidean(pts, np.full(len(triples), radius), eps / 2.0)
        if not out.ok:
            break
        x = out.center
    return ScatterRecord(triples, eps, mode, slack)
