"""The numba and numpy kernels must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from normclust import kernels as K


@pytest.mark.parametrize("mode", [K.MODE_OPTIMIZE, K.MODE_FEASIBILITY])
def test_ky_variants_agree(mode):
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = int(rng.integers(1, 6))
        q = int(rng.integers(1, 12))
        pts = rng.normal(size=(q, d))
        w = rng.uniform(0.2, 3.0, q)
        a = K.ky_weighted_center_numba(pts, w, 0.05, 5000, mode)
        b = K.ky_weighted_center_numpy(pts, w, 0.05, 5000, mode)
        np.testing.assert_allclose(a[0], b[0], rtol=1e-9, atol=1e-12)
        assert a[1] == pytest.approx(b[1], rel=1e-9)
        assert a[2] == pytest.approx(b[2], rel=1e-9)
        assert a[3:] == b[3:]


def test_ky_certificate_brackets_optimum():
    rng = np.random.default_rng(1)
    for _ in range(50):
        pts = rng.uniform(-5, 5, size=(8, 3))
        w = rng.uniform(0.5, 2.0, 8)
        x, ratio, lb, it, status = K.ky_weighted_center(pts, w, 0.01, 100000, K.MODE_OPTIMIZE)
        assert status == K.KY_CONVERGED
        assert lb <= ratio * (1 + 1e-12)
        assert ratio <= 1.01 * lb * (1 + 1e-9)
        achieved = np.sqrt((w * ((pts - x) ** 2).sum(axis=1)).max())
        assert achieved == pytest.approx(ratio, rel=1e-9)


def test_ky_budget_status():
    pts = np.random.default_rng(5).normal(size=(20, 3))
    *_, it, status = K.ky_weighted_center(pts, np.ones(20), 1e-6, 1, K.MODE_OPTIMIZE)
    assert status == K.KY_BUDGET and it == 1


def test_first_feasible_variants_agree():
    rng = np.random.default_rng(2)
    for _ in range(200):
        rows = rng.uniform(0, 10, size=(int(rng.integers(1, 6)), int(rng.integers(1, 8))))
        radii = rng.uniform(2, 12, len(rows))
        assert K.first_feasible_center_numba(rows, radii) == \
            K.first_feasible_center_numpy(rows, radii)


def test_first_feasible_lowest_index():
    rows = np.array([[3.0, 1.0, 0.5], [3.0, 1.0, 0.5]])
    assert K.first_feasible_center(rows, np.array([1.0, 1.0])) == 1
    assert K.first_feasible_center(rows, np.array([0.1, 1.0])) == -1


def test_triangle_variants_agree():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        M = rng.uniform(1, 10, (n, n))
        M = np.triu(M, 1)
        M = M + M.T
        assert K.triangle_violation_numba(M) == K.triangle_violation_numpy(M)


def test_triangle_detects_violation():
    M = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    assert K.triangle_violation(M) == (0, 1, 2)
    M[0, 2] = M[2, 0] = 2
    assert K.triangle_violation(M) is None


def test_env_flag_selects_numpy():
    code = ("from normclust import kernels as K; "
            "print(K.USE_NUMBA, K.ky_weighted_center is K.ky_weighted_center_numpy)")
    env = dict(os.environ, NORMCLUST_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out == ["False", "True"]
