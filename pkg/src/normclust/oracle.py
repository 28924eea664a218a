"""Reference solvers used to check the approximation scheme on small inputs."""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from .metrics import InfiniteCenterSet, Solution

ENUMERATION_LIMIT = 10**6


def brute_force_opt(instance, limit: int = ENUMERATION_LIMIT):
    """Exact optimum by enumerating every k-subset of F.

    Returns ``(cost, centers)``; among optimal subsets the lexicographically
    least one is reported.
    """
    space, norm, k = instance.space, instance.norm, instance.k
    if not space.is_finite:
        raise InfiniteCenterSet("brute force needs a finite center set")
    if comb(space.m, k) > limit:
        raise ValueError(f"C({space.m}, {k}) subsets exceeds the enumeration limit {limit}")
    pc = space.pc_matrix()
    best_cost, best = np.inf, None
    for subset in combinations(range(space.m), k):
        cost = norm.evaluate(pc[:, subset].min(axis=1))
        if cost < best_cost:
            best_cost, best = cost, list(subset)
    return float(best_cost), best


def gonzalez_kcenter(instance) -> Solution:
    """Farthest-first traversal from the first point.

    Each traversed point is served by its nearest center (itself when F
    contains P), which gives the classical 2-approximation for k-center.
    """
    space, k = instance.space, instance.k
    chosen = [0]
    nearest = space.pp_matrix()[0].copy()
    while len(chosen) < min(k, space.n):
        far = int(np.argmax(nearest))
        if nearest[far] == 0:
            break
        chosen.append(far)
        np.minimum(nearest, space.pp_matrix()[far], out=nearest)
    if space.is_finite:
        pc = space.pc_matrix()
        centers = [int(np.argmin(pc[p])) for p in chosen]
    else:
        centers = [space.P[p].copy() for p in chosen]
    centers += space.first_centers(k - len(centers))
    dv = space.distance_vector(centers)
    return Solution(centers, dv, instance.norm.evaluate(dv))
