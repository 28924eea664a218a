"""Randomised (1+eps)-approximation for Norm k-Clustering.

One *run* at a fixed optimum guess works as follows.

1. Per-point upper bounds ``u(p)``: the smallest ``alpha > 0`` such that the
   points within ``alpha/3`` of ``p`` carry norm mass at least
   ``3 * opt_guess / alpha``.
2. Greedy seeding: scan points by increasing ``u``, mark those whose
   ``u``-ball is far from all earlier marks; each mark opens a cluster with
   the request ``(p, u(p))``.
3. Main loop: while ``f(delta(P, X)) > (1+eps) * opt_guess``, take a
   subgradient ``g`` at the distance vector, sample an admissible point with
   probability proportional to ``g(p) * delta(p, X)``, attach the request
   ``(p, delta(p, X) / (1 + eps/3))`` to a uniformly random cluster and
   recompute that cluster's center with the Ball Intersection solver.

Runs are repeated with fresh seeds (:func:`solve_with_restarts`) and the
optimum is guessed on a geometric grid (:func:`search_opt`).
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ballint
from .ballint import Request
from .metrics import MetricSpace, Solution
from .norms import NormObjective


class FailReason(str, enum.Enum):
    SOLVER_FAIL = "SolverFail"
    ITERATION_CAP = "IterationCap"
    EMPTY_ADMISSIBLE = "EmptyAdmissible"
    SEED_INFEASIBLE = "SeedInfeasible"


@dataclass
class Instance:
    space: MetricSpace
    norm: NormObjective
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        self.k = int(self.k)
        if self.space.is_finite and self.k > self.space.m:
            raise ValueError(f"k={self.k} exceeds the number of centers {self.space.m}")
        self.norm.bind(self.space.n)

    def cost(self, centers) -> float:
        return self.norm.evaluate(self.space.distance_vector(centers))

    def solution(self, centers, **kw) -> Solution:
        dv = self.space.distance_vector(centers)
        return Solution(list(centers), dv, self.norm.evaluate(dv), **kw)


@dataclass
class EpasConfig:
    """Knobs of the scheme.

    The two factors that stand in for the exponential part of the running
    time are ``iteration_cap`` (per run) and ``restarts`` (runs per guess).
    ``scatter_lambda`` is the assumed scatter-dimension bound used by the
    default cap ``ceil(cap_constant * (k/eps) * ln(k/eps) * scatter_lambda)``.
    """

    eps: float = 0.2
    restarts: int = 200
    iteration_cap: int | None = None
    scatter_lambda: float = 100.0
    cap_constant: float = 8.0
    opt_grid_factor: float | None = None
    ky_budget_constant: int = ballint.KY_BUDGET_CONSTANT
    jobs: int = 1
    trace: bool = False

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.restarts < 1:
            raise ValueError("restart budget must be at least 1")
        if self.iteration_cap is not None and self.iteration_cap < 1:
            raise ValueError("iteration cap must be at least 1")
        if self.opt_grid_factor is not None and not self.opt_grid_factor > 1:
            raise ValueError("opt grid factor must exceed 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")

    def cap(self, k: int) -> int:
        if self.iteration_cap is not None:
            return int(self.iteration_cap)
        ratio = k / self.eps
        return int(math.ceil(self.cap_constant * ratio * math.log(ratio) * self.scatter_lambda))

    @property
    def grid_factor(self) -> float:
        return self.opt_grid_factor or 1.0 + self.eps / 3.0


# ---------------------------------------------------------------------------
# upper bounds and seeding

def upper_bounds(instance: Instance, opt_guess: float) -> np.ndarray:
    """Exact ``u(p) = min{alpha > 0 : f(1_{ball(p, alpha/3)}) >= 3 opt / alpha}``.

    On each segment ``alpha in [3 d_j, 3 d_{j+1})`` of the sorted distances
    from p the ball content is fixed, so the condition reduces to
    ``alpha >= 3 opt / mass_j``; the first feasible segment gives the minimum.
    Points whose full ball has zero mass get ``inf``.
    """
    if not opt_guess > 0:
        raise ValueError("opt_guess must be positive")
    space, norm = instance.space, instance.norm
    n = space.n
    pp = space.pp_matrix()
    u = np.full(n, np.inf)
    for p in range(n):
        row = pp[p]
        order = np.argsort(row, kind="stable")
        levels, starts = np.unique(row[order], return_index=True)
        for j, d in enumerate(levels):
            end = starts[j + 1] if j + 1 < len(levels) else n
            mass = norm.ball_mass(order[:end], n)
            if mass <= 0:
                continue
            cand = max(3.0 * d, 3.0 * opt_guess / mass)
            upper = 3.0 * levels[j + 1] if j + 1 < len(levels) else math.inf
            if cand < upper:
                u[p] = cand
                break
    return u


@dataclass
class Seed:
    marked: list
    Q: list
    X: list
    infeasible: str | None = None


def greedy_seed(instance: Instance, u: np.ndarray, eps: float = 0.2) -> Seed:
    """Plesnik-style marking of far-apart balls, one cluster per mark."""
    space, k = instance.space, instance.k
    pp = space.pp_matrix()
    marked: list[int] = []
    for p in np.argsort(u, kind="stable"):
        p = int(p)
        if not math.isfinite(u[p]):
            continue
        if all(pp[p, q] > u[p] + u[q] for q in marked):
            marked.append(p)
            if len(marked) > k:
                return Seed(marked, [], [], "more marked points than clusters")
    Q = [[Request(p, float(u[p]))] for p in marked] + [[] for _ in range(k - len(marked))]
    X = []
    for p in marked:
        if space.is_finite:
            row = space.pc_matrix()[p]
            c = int(np.argmin(row))
            limit = ballint.round_radii([Q[len(X)][0]], eps / 10.0)[0].radius
            if row[c] > limit * (1.0 + 1e-12):
                return Seed(marked, Q, X, f"no center within u({p})")
            X.append(c)
        else:
            X.append(space.P[p].copy())
    X += space.first_centers(k - len(marked))
    return Seed(marked, Q, X)


# ---------------------------------------------------------------------------
# main loop

@dataclass
class RunResult:
    solution: Solution | None
    failure: FailReason | None
    iterations: int
    seed: int
    opt_guess: float
    requests: list = field(default_factory=list)
    loop_requests: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    max_head_ratio: float = 0.0

    @property
    def ok(self) -> bool:
        return self.solution is not None

    def aspect_ratios(self) -> list[float]:
        """Max/min radius over the loop-added requests of each cluster."""
        out = []
        for reqs in self.loop_requests:
            if reqs:
                r = [q.radius for q in reqs]
                out.append(max(r) / min(r))
        return out


def rng_streams(seed: int):
    """Independent Philox streams for point sampling and cluster picking."""
    point_ss, cluster_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return (np.random.Generator(np.random.Philox(point_ss)),
            np.random.Generator(np.random.Philox(cluster_ss)))


def sample_witness(rng, g, dist, admissible) -> int:
    """Draw ``p`` with probability ``g(p) dist(p) / sum_A g dist`` over admissible p; -1 if the mass is 0."""
    weights = np.where(admissible, g * dist, 0.0)
    cdf = np.cumsum(weights)
    total = cdf[-1] if cdf.size else 0.0
    if not total > 0:
        return -1
    p = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    return min(p, int(np.flatnonzero(weights > 0)[-1]))


@dataclass
class Prepared:
    u: np.ndarray
    seed: Seed


def prepare(instance: Instance, eps: float, opt_guess: float) -> Prepared:
    """The deterministic part of a run (bounds and seeding), shared by restarts."""
    u = upper_bounds(instance, opt_guess)
    return Prepared(u, greedy_seed(instance, u, eps))


def run_once(instance: Instance, eps: float, opt_guess: float, seed: int = 0,
             iteration_cap: int | None = None, *, config: EpasConfig | None = None,
             prepared: Prepared | None = None, trace: bool | None = None) -> RunResult:
    config = config or EpasConfig(eps=eps)
    cap = iteration_cap if iteration_cap is not None else config.cap(instance.k)
    if cap < 1:
        raise ValueError("iteration cap must be at least 1")
    trace = config.trace if trace is None else trace
    if not opt_guess > 0:
        raise ValueError("opt_guess must be positive")
    prepared = prepared or prepare(instance, eps, opt_guess)
    space, norm, k = instance.space, instance.norm, instance.k
    u = prepared.u
    result = RunResult(None, None, 0, int(seed), float(opt_guess))
    if prepared.seed.infeasible:
        result.failure = FailReason.SEED_INFEASIBLE
        return result

    X = list(prepared.seed.X)
    Q = [list(q) for q in prepared.seed.Q]
    loop_Q = [[] for _ in range(k)]
    result.requests, result.loop_requests = Q, loop_Q
    cols = np.column_stack([space.center_column(x) for x in X])
    dist = cols.min(axis=1)
    point_rng, cluster_rng = rng_streams(seed)
    head_bound = 4.0 * (1.0 + eps / 10.0) * u
    threshold = eps * u / (1000.0 * k)
    target = (1.0 + eps) * opt_guess
    it = 0
    while True:
        with np.errstate(invalid="ignore"):
            head = float(np.max(np.where(np.isfinite(u), dist / head_bound, 0.0)))
        result.max_head_ratio = max(result.max_head_ratio, head)
        cost = norm.evaluate(dist)
        if cost <= target:
            result.solution = Solution(list(X), dist.copy(), cost, opt_guess=float(opt_guess),
                                       iterations=it, seed=int(seed))
            break
        if it >= cap:
            result.failure = FailReason.ITERATION_CAP
            break
        g = norm.subgradient(dist, eps / 10.0).g
        admissible = dist >= threshold
        p = sample_witness(point_rng, g, dist, admissible)
        if p < 0:
            result.failure = FailReason.EMPTY_ADMISSIBLE
            break
        kappa = int(cluster_rng.integers(k))
        req = Request(p, float(dist[p] / (1.0 + eps / 3.0)))
        Q[kappa].append(req)
        loop_Q[kappa].append(req)
        out = ballint.solve(space, Q[kappa], eps / 10.0, config.ky_budget_constant)
        it += 1
        if trace:
            result.trace.append({
                "opt_guess": float(opt_guess), "seed": int(seed), "iteration": it,
                "point": p, "cluster": kappa, "radius": req.radius,
                "margin": out.satisfied_margin if out.ok else None,
                "admissible_ok": bool(dist[p] >= threshold[p]),
                "request_ok": bool(req.radius <= head_bound[p]),
                "head_ratio": head, "head_ok": bool(head <= 1.0 + 1e-9),
            })
        if not out.ok:
            result.failure = FailReason.SOLVER_FAIL
            break
        X[kappa] = out.center
        cols[:, kappa] = space.center_column(out.center)
        dist = cols.min(axis=1)
    result.iterations = it
    return result


# ---------------------------------------------------------------------------
# restarts and optimum search

@dataclass
class RestartResult:
    solution: Solution | None
    restarts_used: int
    runs: list


def solve_with_restarts(instance: Instance, eps: float, opt_guess: float,
                        restart_budget: int, base_seed: int = 0,
                        config: EpasConfig | None = None) -> RestartResult:
    """Run seeds ``base_seed, base_seed+1, ...``; the lowest succeeding seed wins.

    With ``config.jobs > 1`` seeds are evaluated in parallel batches; the
    outcome is identical to the sequential one.
    """
    if restart_budget < 1:
        raise ValueError("restart budget must be at least 1")
    config = config or EpasConfig(eps=eps)
    prepared = prepare(instance, eps, opt_guess)

    def one(s):
        return run_once(instance, eps, opt_guess, s, config=config, prepared=prepared)

    runs: list[RunResult] = []
    if prepared.seed.infeasible:
        # seeding is seed-independent, so every restart would fail identically
        runs.append(one(base_seed))
        return RestartResult(None, 1, runs)
    seeds = range(base_seed, base_seed + restart_budget)
    if config.jobs == 1:
        for s in seeds:
            r = one(s)
            runs.append(r)
            if r.ok:
                return RestartResult(r.solution, len(runs), runs)
        return RestartResult(None, len(runs), runs)
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        for start in range(0, restart_budget, config.jobs):
            batch = list(pool.map(one, seeds[start:start + config.jobs]))
            for r in batch:
                runs.append(r)
                if r.ok:
                    return RestartResult(r.solution, len(runs), runs)
    return RestartResult(None, len(runs), runs)


def zero_cost_centers(instance: Instance):
    """k centers with every point at distance 0, or None."""
    space, k = instance.space, instance.k
    if space.is_finite:
        pc = space.pc_matrix()
        chosen = []
        for p in range(space.n):
            zeros = np.flatnonzero(pc[p] == 0)
            if zeros.size == 0:
                return None
            if not any(pc[p, c] == 0 for c in chosen):
                chosen.append(int(zeros[0]))
                if len(chosen) > k:
                    return None
        fill = [j for j in range(space.m) if j not in chosen]
        return chosen + fill[: k - len(chosen)]
    uniq = []
    for p in space.P:
        if not any(np.array_equal(p, q) for q in uniq):
            uniq.append(p.copy())
            if len(uniq) > k:
                return None
    return uniq + [uniq[0].copy() for _ in range(k - len(uniq))]


def cost_lower_bound(instance: Instance) -> float:
    """A positive lower bound on any nonzero solution cost."""
    space, norm = instance.space, instance.norm
    if space.is_finite:
        pc = space.pc_matrix()
        dmin = float(pc[pc > 0].min()) if np.any(pc > 0) else 0.0
    else:
        pp = space.pp_matrix()
        dmin = float(pp[pp > 0].min()) / 2.0 if np.any(pp > 0) else 0.0
    unit = [norm.ball_mass([p], space.n) for p in range(space.n)]
    unit = [m for m in unit if m > 0]
    return dmin * min(unit) if unit else 0.0


def search_opt(instance: Instance, eps: float, restart_budget: int = 200,
               base_seed: int = 0, config: EpasConfig | None = None,
               trace_sink: list | None = None) -> Solution:
    """Guess the optimum on a descending geometric grid and keep the cheapest solution.

    Grid points that cannot improve on the best cost found so far
    (``(1+eps) * guess >= best``) are skipped. The search stops after two
    consecutive guesses fail or once the guess reaches a certified lower
    bound on the optimum.
    """
    config = config or EpasConfig(eps=eps, restarts=restart_budget)
    zero = zero_cost_centers(instance)
    if zero is not None:
        return instance.solution(zero, opt_guess=0.0, iterations=0, restarts_used=0,
                                 seed=int(base_seed))
    fallback = instance.solution(instance.space.first_centers(instance.k))
    hi = instance.cost(instance.space.first_centers(1))
    lo = cost_lower_bound(instance)
    if not lo > 0:
        lo = hi * 1e-12
    factor = config.grid_factor
    best: Solution | None = None
    total_restarts = 0
    failures = 0
    i = 0
    while True:
        if best is not None and best.cost <= (1.0 + eps) * lo:
            break
        guess = max(hi * factor ** (-i), lo)
        if best is not None and (1.0 + eps) * guess >= best.cost and guess > lo:
            # jump straight to the first grid point that could improve
            need = math.log(hi * (1.0 + eps) / best.cost) / math.log(factor)
            i = max(i + 1, int(math.floor(need)) + 1)
            continue
        res = solve_with_restarts(instance, eps, guess, restart_budget, base_seed, config)
        total_restarts += res.restarts_used
        if trace_sink is not None:
            for r in res.runs:
                trace_sink.extend(r.trace)
        if res.solution is not None:
            failures = 0
            if best is None or res.solution.cost < best.cost:
                best = res.solution
        else:
            failures += 1
            if failures >= 2:
                break
        if guess <= lo:
            break
        i += 1
    out = best or fallback
    out.restarts_used = total_restarts
    out.seed = int(base_seed)
    if out.opt_guess is None:
        out.opt_guess = hi
    return out
