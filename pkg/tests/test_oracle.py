import numpy as np
import pytest

from instances import random_euclidean, random_explicit, random_graph
from normclust.epas import Instance
from normclust.metrics import (ContinuousEuclidean, EuclideanMetric, ExplicitMetric,
                               InfiniteCenterSet)
from normclust.norms import LzNorm, TopL
from normclust.oracle import brute_force_opt, gonzalez_kcenter


def line(points):
    return EuclideanMetric(np.asarray(points, dtype=float)[:, None])


def test_brute_force_line():
    assert brute_force_opt(Instance(line([0, 1, 10]), LzNorm(1), 2)) == (1.0, [0, 2])


def test_brute_force_all_centers():
    space = EuclideanMetric(np.array([[0.0], [4.0], [9.0]]), np.array([[1.0], [8.0]]))
    cost, centers = brute_force_opt(Instance(space, TopL(2), 2))
    assert centers == [0, 1]
    assert cost == pytest.approx(TopL(2).evaluate(space.pc_matrix().min(axis=1)))


def test_brute_force_k1_linf():
    cost, centers = brute_force_opt(Instance(line([0, 2]), LzNorm("inf"), 1))
    assert cost == 2 and centers == [0]


def test_brute_force_guards():
    with pytest.raises(InfiniteCenterSet):
        brute_force_opt(Instance(ContinuousEuclidean(np.zeros((2, 1))), LzNorm(1), 1))
    big = EuclideanMetric(np.zeros((1, 1)), np.arange(40, dtype=float)[:, None])
    with pytest.raises(ValueError):
        brute_force_opt(Instance(big, LzNorm(1), 10))


def test_gonzalez_examples():
    sol = gonzalez_kcenter(Instance(line([0, 1, 10]), LzNorm("inf"), 2))
    assert sorted(sol.centers) == [0, 2] and sol.cost == 1
    assert gonzalez_kcenter(Instance(line([0, 1, 10]), LzNorm("inf"), 3)).cost == 0
    single = gonzalez_kcenter(Instance(line([7]), LzNorm("inf"), 1))
    assert single.centers == [0] and single.cost == 0


def test_gonzalez_two_approximation():
    rng = np.random.default_rng(41)
    builders = [random_explicit, random_euclidean, random_graph]
    for i in range(200):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, 4))
        # F = P, the setting of the classical guarantee
        pp = builders[i % 3](rng, n, n).pp_matrix()
        inst = Instance(ExplicitMetric(pp), LzNorm("inf"), min(k, n))
        opt = brute_force_opt(inst)[0]
        assert gonzalez_kcenter(inst).cost <= 2 * opt + 1e-9
