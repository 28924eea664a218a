"""Hot numeric loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature. The active
implementation is chosen once at import time; set ``NORMCLUST_NO_NUMBA=1``
to force the numpy path (useful for debugging and for the benchmark).
Both variants stay importable as ``<name>_numba`` / ``<name>_numpy``.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get(
    "NORMCLUST_NO_NUMBA", "").lower() not in ("1", "true", "yes")

# status codes shared by both weighted 1-center implementations
KY_CONVERGED = 0     # optimize mode: (1+eta) gap certified
KY_FEASIBLE = 1      # feasibility mode: max ratio <= 1+eta
KY_INFEASIBLE = 2    # feasibility mode: optimum ratio certified > 1
KY_BUDGET = 3        # iteration budget exhausted

MODE_OPTIMIZE = 0
MODE_FEASIBILITY = 1

BALL_RTOL = 1e-12


def _jit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# weighted Euclidean 1-center (dual Frank-Wolfe)

def _fw_step(S, w, D, phi):
    # maximise the dual along u -> (1-lam) u + lam e_j; mu is the
    # fraction by which the primal center moves toward p_j
    a = D * (w - S)
    b = -2.0 * D * w
    c = D * w - phi
    if c <= 0.0 or D <= 0.0:
        return 0.0, 0.0
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        disc = 0.0
    mu = 2.0 * c / (-b + np.sqrt(disc))
    if mu > 1.0:
        mu = 1.0
    lam = mu * S / (w * (1.0 - mu) + mu * S)
    return mu, lam


_fw_step_jit = _jit(_fw_step)


def _ky_loop(points, weights, eta, max_iter, mode):
    n, d = points.shape
    u = np.zeros(n)
    u[0] = 1.0
    x = points[0].copy()
    S = weights[0]
    target = (1.0 + eta) * (1.0 + eta)
    gamma = 0.0
    phi = 0.0
    it = 0
    status = KY_BUDGET
    vals = np.empty(n)
    while True:
        j = 0
        gamma = -1.0
        phi = 0.0
        for i in range(n):
            s = 0.0
            for t in range(d):
                diff = points[i, t] - x[t]
                s += diff * diff
            v = weights[i] * s
            vals[i] = v
            phi += u[i] * v
            if v > gamma:
                gamma = v
                j = i
        if mode == MODE_FEASIBILITY:
            if gamma <= target:
                status = KY_FEASIBLE
                break
            if phi > 1.0 + 1e-12 or gamma <= target * phi:
                status = KY_INFEASIBLE
                break
        elif gamma <= target * phi:
            status = KY_CONVERGED
            break
        if it >= max_iter:
            break
        mu, lam = _fw_step_jit(S, weights[j], vals[j] / weights[j], phi)
        if lam <= 0.0:
            # no ascent direction left: the dual bound is tight
            status = KY_CONVERGED if mode == MODE_OPTIMIZE else KY_INFEASIBLE
            break
        for i in range(n):
            u[i] *= 1.0 - lam
        u[j] += lam
        for t in range(d):
            x[t] += mu * (points[j, t] - x[t])
        S = (1.0 - lam) * S + lam * weights[j]
        it += 1
    return x, np.sqrt(gamma), np.sqrt(max(phi, 0.0)), it, status


def ky_weighted_center_numpy(points, weights, eta, max_iter, mode):
    """Minimise ``max_i sqrt(weights[i]) * ||x - points[i]||`` by dual Frank-Wolfe.

    Returns ``(x, ratio, lower_bound, iterations, status)`` where ``ratio``
    is the achieved objective at ``x`` and ``lower_bound`` a certified lower
    bound on the optimum (square root of the dual value).
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    u = np.zeros(len(points))
    u[0] = 1.0
    x = points[0].copy()
    S = weights[0]
    target = (1.0 + eta) ** 2
    it = 0
    status = KY_BUDGET
    while True:
        vals = weights * np.sum((points - x) ** 2, axis=1)
        j = int(np.argmax(vals))
        gamma = vals[j]
        phi = float(u @ vals)
        if mode == MODE_FEASIBILITY:
            if gamma <= target:
                status = KY_FEASIBLE
                break
            if phi > 1.0 + 1e-12 or gamma <= target * phi:
                status = KY_INFEASIBLE
                break
        elif gamma <= target * phi:
            status = KY_CONVERGED
            break
        if it >= max_iter:
            break
        mu, lam = _fw_step(S, weights[j], vals[j] / weights[j], phi)
        if lam <= 0.0:
            status = KY_CONVERGED if mode == MODE_OPTIMIZE else KY_INFEASIBLE
            break
        u *= 1.0 - lam
        u[j] += lam
        x += mu * (points[j] - x)
        S = (1.0 - lam) * S + lam * weights[j]
        it += 1
    return x, float(np.sqrt(gamma)), float(np.sqrt(max(phi, 0.0))), it, status


if numba is not None:
    _ky_loop_jit = _jit(_ky_loop)

    def ky_weighted_center_numba(points, weights, eta, max_iter, mode):
        points = np.ascontiguousarray(points, dtype=np.float64)
        weights = np.ascontiguousarray(weights, dtype=np.float64)
        x, ratio, lb, it, status = _ky_loop_jit(
            points, weights, float(eta), int(max_iter), int(mode))
        return x, float(ratio), float(lb), int(it), int(status)
else:  # pragma: no cover
    ky_weighted_center_numba = ky_weighted_center_numpy


# ---------------------------------------------------------------------------
# exhaustive finite ball intersection

def first_feasible_center_numpy(rows, radii):
    """Lowest column index ``j`` with ``rows[i, j] <= radii[i]`` for all i, else -1."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] == 0:
        return 0 if rows.shape[1] > 0 else -1
    ok = np.all(rows <= (np.asarray(radii) * (1.0 + BALL_RTOL))[:, None], axis=0)
    hits = np.flatnonzero(ok)
    return int(hits[0]) if hits.size else -1


def _first_feasible_loop(rows, radii):
    q, m = rows.shape
    for j in range(m):
        good = True
        for i in range(q):
            if rows[i, j] > radii[i] * (1.0 + BALL_RTOL):
                good = False
                break
        if good:
            return j
    return -1


if numba is not None:
    _first_feasible_jit = _jit(_first_feasible_loop)

    def first_feasible_center_numba(rows, radii):
        rows = np.ascontiguousarray(rows, dtype=np.float64)
        radii = np.ascontiguousarray(radii, dtype=np.float64)
        return int(_first_feasible_jit(rows, radii))
else:  # pragma: no cover
    first_feasible_center_numba = first_feasible_center_numpy


# ---------------------------------------------------------------------------
# metric axiom check

def triangle_violation_numpy(M, rtol=1e-9):
    """First ``(a, b, c)`` with ``M[a, c] > M[a, b] + M[b, c]`` (relative tol), or None."""
    M = np.asarray(M, dtype=np.float64)
    N = len(M)
    for b in range(N):
        bound = M[:, b][:, None] + M[b, :][None, :]
        bad = M > bound * (1.0 + rtol) + 1e-300
        if bad.any():
            a, c = np.argwhere(bad)[0]
            return int(a), b, int(c)
    return None


def _triangle_loop(M, rtol):
    N = M.shape[0]
    for b in range(N):
        for a in range(N):
            mab = M[a, b]
            for c in range(N):
                if M[a, c] > (mab + M[b, c]) * (1.0 + rtol) + 1e-300:
                    return a, b, c
    return -1, -1, -1


if numba is not None:
    _triangle_jit = _jit(_triangle_loop)

    def triangle_violation_numba(M, rtol=1e-9):
        M = np.ascontiguousarray(M, dtype=np.float64)
        a, b, c = _triangle_jit(M, float(rtol))
        return None if a < 0 else (int(a), int(b), int(c))
else:  # pragma: no cover
    triangle_violation_numba = triangle_violation_numpy


if USE_NUMBA:
    ky_weighted_center = ky_weighted_center_numba
    first_feasible_center = first_feasible_center_numba
    triangle_violation = triangle_violation_numba
else:
    ky_weighted_center = ky_weighted_center_numpy
    first_feasible_center = first_feasible_center_numpy
    triangle_violation = triangle_violation_numpy
