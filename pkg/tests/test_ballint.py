import math

import numpy as np
import pytest

from normclust.ballint import (Request, aspect_filter, ky_budget, round_radii, solve,
                               solve_exact_finite, solve_ky_euclidean, weighted_one_center)
from normclust.metrics import ContinuousEuclidean, EuclideanMetric, InfiniteCenterSet


def line012():
    return EuclideanMetric(np.array([[0.0], [1.0], [2.0]]))


def ternary_ratio(p, r):
    """Minimum over x of max |x - p_i| / r_i on the line, by ternary search."""
    f = lambda x: np.max(np.abs(x - p) / r)
    lo, hi = p.min(), p.max()
    for _ in range(200):
        a, b = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if f(a) < f(b):
            hi = b
        else:
            lo = a
    return f((lo + hi) / 2)


# -- exact finite -------------------------------------------------------------

def test_exact_finite_examples():
    space = line012()
    assert solve_exact_finite(space, [Request(0, 1), Request(2, 1)]).center == 1
    assert not solve_exact_finite(space, [Request(0, 0.5), Request(2, 0.5)]).ok
    assert solve_exact_finite(space, []).center == 0


def test_exact_finite_rejects_continuous():
    with pytest.raises(InfiniteCenterSet):
        solve_exact_finite(ContinuousEuclidean(np.zeros((1, 2))), [Request(0, 1)])


# -- KY -----------------------------------------------------------------------

def test_ky_midpoint():
    out = solve_ky_euclidean([[0, 0], [2, 0]], [1, 1], 0.05)
    assert out.ok
    np.testing.assert_allclose(out.center, [1, 0], atol=0.05)
    assert out.satisfied_margin <= 1.05


def test_ky_single_request():
    out = solve_ky_euclidean([[5, 5]], [3], 0.05)
    assert out.ok and out.satisfied_margin == 0
    np.testing.assert_array_equal(out.center, [5, 5])


def test_ky_disjoint_fails():
    out = solve_ky_euclidean([[0, 0], [2, 0]], [0.5, 0.5], 0.05)
    assert not out.ok
    assert out.lower_bound > 1


def test_ky_budget_formula():
    assert ky_budget([1, 2], 0.5) == math.ceil(64 * 4 / 0.25)


def test_weighted_one_center_d1_against_ternary():
    rng = np.random.default_rng(12)
    for _ in range(100):
        q = int(rng.integers(1, 8))
        p = rng.uniform(-10, 10, q)
        r = rng.uniform(0.5, 3, q)
        x, ratio, lb, _ = weighted_one_center(p, r, 0.05)
        opt = ternary_ratio(p, r)
        assert ratio <= 1.05 * opt + 1e-6
        assert lb <= opt + 1e-9


def test_ky_planted_feasible_continuous():
    rng = np.random.default_rng(13)
    for _ in range(100):
        d = int(rng.integers(1, 11))
        q = int(rng.integers(1, 15))
        o = rng.normal(size=d)
        pts = o + rng.normal(size=(q, d)) * rng.uniform(0.1, 5)
        radii = np.linalg.norm(pts - o, axis=1) * rng.uniform(1.0, 2.0, q)
        radii = np.maximum(radii, 1e-3)
        out = solve_ky_euclidean(pts, radii, 0.05)
        assert out.ok
        assert out.satisfied_margin <= 1.05
        assert out.iterations <= ky_budget(radii, 0.05)


def test_ky_rejects_bad_inputs():
    with pytest.raises(ValueError):
        solve_ky_euclidean([], [], 0.1)
    with pytest.raises(ValueError):
        solve_ky_euclidean([[0.0]], [0.0], 0.1)


# -- rounding and filtering -----------------------------------------------------

def test_round_radii_examples():
    assert round_radii([Request(0, 1.0)], 0.5)[0].radius == 1.0
    assert round_radii([Request(0, 1.005)], 0.5)[0].radius == pytest.approx(1.01, rel=1e-12)


def test_round_radii_property():
    rng = np.random.default_rng(14)
    for _ in range(500):
        r = float(10 ** rng.uniform(-6, 6))
        eta = float(rng.uniform(0.01, 0.99))
        out = round_radii([Request(0, r)], eta)[0].radius
        base = 1 + eta / 50
        assert r <= out < r * base * (1 + 1e-12)
        e = math.log(out) / math.log(base)
        assert abs(e - round(e)) < 1e-6


def test_aspect_filter_examples():
    Q = [Request(0, 0.9), Request(1, 0.3), Request(2, 0.004)]
    assert aspect_filter(Q, 0.3) == [Request(2, 0.004)]
    ones = [Request(i, 1.0) for i in range(3)]
    assert aspect_filter(ones, 0.5) == ones
    assert aspect_filter([Request(4, 0.2)], 0.5) == [Request(4, 0.2)]


def test_aspect_filter_empty():
    with pytest.raises(ValueError):
        aspect_filter([], 0.1)


def test_aspect_filter_bounds_ratio():
    rng = np.random.default_rng(15)
    for _ in range(200):
        eta = float(rng.uniform(0.05, 0.95))
        Q = [Request(i, float(10 ** rng.uniform(-5, 2))) for i in range(8)]
        kept = aspect_filter(Q, eta)
        radii = [q.radius for q in kept]
        assert min(q.radius for q in Q) in radii
        assert max(radii) / min(radii) <= 6 / eta * (1 + 1e-12)


def test_request_validation():
    with pytest.raises(ValueError):
        Request(0, -1)
    with pytest.raises(ValueError):
        Request(0, math.inf)


# -- composed solver ------------------------------------------------------------

def test_solve_finite_line():
    assert solve(line012(), [Request(0, 1), Request(2, 1)], 0.1).center == 1


def test_solve_continuous_feasible():
    rng = np.random.default_rng(16)
    for _ in range(50):
        P = rng.normal(size=(10, 3))
        o = rng.normal(size=3)
        idx = rng.choice(10, 5, replace=False)
        radii = np.linalg.norm(P[idx] - o, axis=1) * rng.uniform(1, 1.5, 5)
        Q = [Request(int(i), float(r)) for i, r in zip(idx, radii)]
        out = solve(ContinuousEuclidean(P), Q, 0.1)
        assert out.ok and out.satisfied_margin <= 1.1 * (1 + 1e-12)
        d = np.linalg.norm(P[idx] - out.center, axis=1)
        assert np.all(d <= 1.1 * radii * (1 + 1e-12))


def test_solve_continuous_far_tiny_balls_fail():
    space = ContinuousEuclidean(np.array([[0.0, 0.0], [100.0, 0.0]]))
    assert not solve(space, [Request(0, 0.1), Request(1, 0.1)], 0.1).ok


def test_solve_planted_finite_never_fails():
    rng = np.random.default_rng(17)
    for _ in range(200):
        space = EuclideanMetric(rng.uniform(0, 10, (8, 2)), rng.uniform(0, 10, (6, 2)))
        j = int(rng.integers(6))
        col = space.center_column(j)
        idx = rng.choice(8, int(rng.integers(1, 9)), replace=False)
        Q = [Request(int(i), float(col[i])) for i in idx]
        out = solve(space, Q, 0.1)
        assert out.ok and out.satisfied_margin <= 1.1 * (1 + 1e-12)


def test_solve_eta_implication():
    """A success at eta also satisfies every request at any larger eta."""
    rng = np.random.default_rng(18)
    P = rng.normal(size=(12, 2))
    space = ContinuousEuclidean(P)
    for _ in range(30):
        idx = rng.choice(12, 4, replace=False)
        o = rng.normal(size=2)
        Q = [Request(int(i), float(np.linalg.norm(P[i] - o))) for i in idx]
        out = solve(space, Q, 0.05)
        assert out.ok
        for eta in (0.1, 0.5):
            assert out.satisfied_margin <= (1 + eta)


def test_solve_zero_radius_requests():
    space = line012()
    out = solve(space, [Request(1, 0.0)], 0.1)
    assert out.center == 1
    cont = ContinuousEuclidean(np.array([[0.0, 0.0], [1.0, 1.0]]))
    out = solve(cont, [Request(1, 0.0), Request(0, 2.0)], 0.1)
    assert out.ok
    np.testing.assert_allclose(out.center, [1, 1], atol=1e-9)


def test_solve_empty():
    assert solve(line012(), [], 0.1).center == 0
    np.testing.assert_array_equal(
        solve(ContinuousEuclidean(np.array([[2.0, 3.0]])), [], 0.1).center, [2, 3])
