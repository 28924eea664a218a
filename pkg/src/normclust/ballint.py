"""Ball Intersection solvers.

Given requests ``(p, r)`` find a center ``x`` with ``delta(x, p) <= (1+eta) r``
for all of them, or fail. A solver must not fail when some center meets
every request exactly.

* :func:`solve_exact_finite` scans a finite center set.
* :func:`solve_ky_euclidean` runs a certified weighted 1-center
  Frank-Wolfe iteration in continuous R^d.
* :func:`round_radii` and :func:`aspect_filter` are the radius rounding
  and small-radius filtering wrappers; :func:`solve` composes everything.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .metrics import ContinuousEuclidean, InfiniteCenterSet, MetricSpace

KY_BUDGET_CONSTANT = 64
ZERO_RADIUS_FRACTION = 1e-12


@dataclass(frozen=True)
class Request:
    point: int
    radius: float

    def __post_init__(self):
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError(f"request radius must be finite and >= 0, got {self.radius}")


@dataclass
class BallIntersectionOutcome:
    center: object            # center index, coordinate array, or None on FAIL
    eta: float
    satisfied_margin: float   # max delta(x, p) / r over the checked requests
    iterations: int = 0
    lower_bound: float | None = None

    @property
    def ok(self) -> bool:
        return self.center is not None


def _margin(dists, radii) -> float:
    dists = np.asarray(dists, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    if dists.size == 0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(radii > 0, dists / np.where(radii > 0, radii, 1.0),
                         np.where(dists > 0, np.inf, 0.0))
    return float(ratio.max())


def solve_exact_finite(space: MetricSpace, Q: Sequence[Request]) -> BallIntersectionOutcome:
    """Lowest-index center of F meeting every request exactly, or FAIL."""
    if not space.is_finite:
        raise InfiniteCenterSet("exact ball intersection needs a finite center set")
    pc = space.pc_matrix()
    if not Q:
        return BallIntersectionOutcome(0, 0.0, 0.0)
    idx = np.fromiter((q.point for q in Q), dtype=np.int64, count=len(Q))
    radii = np.fromiter((q.radius for q in Q), dtype=np.float64, count=len(Q))
    j = kernels.first_feasible_center(pc[idx], radii)
    if j < 0:
        return BallIntersectionOutcome(None, 0.0, math.inf)
    return BallIntersectionOutcome(j, 0.0, _margin(pc[idx, j], radii))


def ky_budget(radii, eta, constant=KY_BUDGET_CONSTANT) -> int:
    radii = np.asarray(radii, dtype=np.float64)
    tau = (radii.max() / radii.min()) ** 2
    return int(math.ceil(constant * tau / eta ** 2))


def _ky_inputs(points, radii):
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    r = np.asarray(radii, dtype=np.float64)
    if len(P) == 0:
        raise ValueError("weighted 1-center needs at least one request")
    if P.shape[1] == 0:
        raise ValueError("dimension must be positive")
    if len(r) != len(P):
        raise ValueError("points and radii differ in length")
    if np.any(~(r > 0)):
        raise ValueError("all radii must be positive")
    return P, r


def weighted_one_center(points, radii, eta: float, budget_constant=KY_BUDGET_CONSTANT):
    """(1+eta)-approximate ``argmin_x max_i ||x - p_i|| / r_i``.

    Returns ``(x, ratio, lower_bound, iterations)``; ``lower_bound`` certifies
    the optimum ratio from below, and ``ratio <= (1+eta) * lower_bound``
    unless the iteration budget ran out.
    """
    P, r = _ky_inputs(points, radii)
    budget = ky_budget(r, eta, budget_constant)
    x, ratio, lb, it, _ = kernels.ky_weighted_center(
        P, 1.0 / r ** 2, eta, budget, kernels.MODE_OPTIMIZE)
    return x, ratio, lb, it


def solve_ky_euclidean(points, radii, eta: float,
                       budget_constant=KY_BUDGET_CONSTANT) -> BallIntersectionOutcome:
    """Approximate Ball Intersection in R^d via weighted 1-center.

    Stops as soon as the iterate (1+eta)-satisfies every ball, or once the
    dual bound proves that no exact common center exists. The budget is
    ``ceil(budget_constant * tau / eta^2)`` with ``tau = (r_max/r_min)^2``.
    """
    P, r = _ky_inputs(points, radii)
    budget = ky_budget(r, eta, budget_constant)
    x, ratio, lb, it, status = kernels.ky_weighted_center(
        P, 1.0 / r ** 2, eta, budget, kernels.MODE_FEASIBILITY)
    if status == kernels.KY_FEASIBLE:
        return BallIntersectionOutcome(x, eta, ratio, it, lb)
    return BallIntersectionOutcome(None, eta, ratio, it, lb)


def _smallest_power_at_least(base: float, r: float) -> float:
    e = math.ceil(math.log(r) / math.log(base))
    # log rounding can land one step off either way
    while base ** e < r:
        e += 1
    while base ** (e - 1) >= r:
        e -= 1
    return base ** e


def round_radii(Q: Sequence[Request], eta: float) -> list[Request]:
    """Replace each radius by the smallest power of ``1 + eta/50`` that is >= it."""
    base = 1.0 + eta / 50.0
    return [Request(q.point, _smallest_power_at_least(base, q.radius)) for q in Q]


def aspect_filter(Q: Sequence[Request], eta: float) -> list[Request]:
    """Keep the requests with ``eta/3 * r <= rho``, rho the dyadic cap of the smallest radius.

    Radii are assumed normalised below 1 in the original construction; for
    larger radii rho is the smallest power of two (any integer exponent)
    that is >= the minimum radius, which coincides with it on (0, 1].
    """
    if not Q:
        raise ValueError("aspect_filter needs a nonempty request list")
    rmin = min(q.radius for q in Q)
    rho = _smallest_power_at_least(2.0, rmin)
    return [q for q in Q if eta / 3.0 * q.radius <= rho]


def _substitute_zero_radii(space: MetricSpace, Q):
    if all(q.radius > 0 for q in Q):
        return list(Q)
    diam = space.diameter()
    tiny = ZERO_RADIUS_FRACTION * (diam if diam > 0 else 1.0)
    return [q if q.radius > 0 else Request(q.point, tiny) for q in Q]


def solve(space: MetricSpace, Q: Sequence[Request], eta: float,
          budget_constant=KY_BUDGET_CONSTANT) -> BallIntersectionOutcome:
    """Composed approximate solver; every success is re-verified against the raw requests."""
    if not Q:
        if space.is_finite:
            return BallIntersectionOutcome(0, eta, 0.0)
        return BallIntersectionOutcome(space.P[0].copy(), eta, 0.0)
    Q = _substitute_zero_radii(space, Q)
    rounded = round_radii(Q, eta)
    iterations = 0
    if space.is_finite:
        inner = solve_exact_finite(space, rounded)
        if not inner.ok:
            return BallIntersectionOutcome(None, eta, math.inf)
        center = inner.center
    else:
        assert isinstance(space, ContinuousEuclidean)
        kept = aspect_filter(rounded, eta)
        pts = space.P[[q.point for q in kept]]
        inner = solve_ky_euclidean(pts, [q.radius for q in kept], eta / 2.0, budget_constant)
        iterations = inner.iterations
        if not inner.ok:
            return BallIntersectionOutcome(None, eta, inner.satisfied_margin, iterations,
                                           inner.lower_bound)
        center = inner.center
    idx = [q.point for q in Q]
    margin = _margin(space.center_column(center)[idx], [q.radius for q in Q])
    if margin > (1.0 + eta) * (1.0 + 1e-12):
        return BallIntersectionOutcome(None, eta, margin, iterations)
    return BallIntersectionOutcome(center, eta, margin, iterations)
