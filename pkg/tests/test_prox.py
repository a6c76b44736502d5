import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from l1homotopy.analysis import kkt_oracle
from l1homotopy.core import gradient, objective
from l1homotopy.prox import (local_lipschitz, optimality_residue, prox_step,
                             soft_threshold)
from l1homotopy.core import ProblemInstance

from conftest import random_problem
from oracles import grid_residue_oracle, scalar_prox_oracle

floats = st.floats(-50, 50, allow_nan=False)


def test_soft_threshold_examples():
    np.testing.assert_array_equal(soft_threshold([3.0, -1.0, 0.5], 1.0), [2.0, 0.0, 0.0])
    v = np.array([0.1, -7.0, 0.0, 2.5])
    np.testing.assert_array_equal(soft_threshold(v, 0.0), v)


def test_soft_threshold_tie_maps_to_zero():
    out = soft_threshold([1.0, -1.0, 1.0 + 1e-15], 1.0)
    assert out[0] == 0.0 and out[1] == 0.0


def test_soft_threshold_negative_alpha():
    with pytest.raises(ValueError):
        soft_threshold([1.0], -0.1)


@pytest.mark.parametrize("lam,L", [(1.0, 1.0), (0.3, 2.5), (4.0, 0.7)])
def test_soft_threshold_is_scalar_prox(lam, L):
    v = np.random.default_rng(0).uniform(-6, 6, 200)
    np.testing.assert_allclose(soft_threshold(v, lam / L), scalar_prox_oracle(v, lam, L), atol=1e-8)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 5, elements=floats), arrays(np.float64, 5, elements=floats),
       st.floats(0, 20))
def test_soft_threshold_nonexpansive(u, v, alpha):
    d = np.linalg.norm(soft_threshold(u, alpha) - soft_threshold(v, alpha))
    assert d <= np.linalg.norm(u - v) * (1 + 1e-12) + 1e-12


def test_prox_step_examples():
    out = prox_step(1.0, 2.0, [1.0, 0.0], [0.0, 2.0], f_x=0.0)
    np.testing.assert_array_equal(out.x_plus, [0.5, -0.5])
    np.testing.assert_array_equal(out.g_map, [1.0, 1.0])

    x = np.array([0.3, -0.2])
    out = prox_step(1.0, 2.0, x, np.zeros(2), f_x=0.0)
    np.testing.assert_array_equal(out.x_plus, 0.0)
    np.testing.assert_array_equal(out.g_map, 2.0 * x)

    p = ProblemInstance.from_arrays(np.eye(2), [0.0, 0.0])
    g, r = gradient(p, np.array([1.0, 0.0]))
    out = prox_step(1.0, 1.0, [1.0, 0.0], g, 0.5 * r @ r)
    np.testing.assert_array_equal(out.x_plus, 0.0)
    assert out.psi_value == 0.0


def test_prox_step_rejects_bad_L():
    with pytest.raises(ValueError):
        prox_step(1.0, 0.0, [1.0], [0.0], 0.0)


def test_prox_step_consumes_no_matvec(small_problem):
    g, r = gradient(small_problem, np.zeros(small_problem.n))
    before = small_problem.op.total_count
    prox_step(0.1, 5.0, np.zeros(small_problem.n), g, 0.5 * r @ r)
    assert small_problem.op.total_count == before


def test_residue_examples():
    assert optimality_residue(1.0, [0.0, 0.0], [-3.0, 0.5]) == 2.0
    assert optimality_residue(1.0, [1.0, 0.0], [-1.0, 0.2]) == 0.0


@pytest.mark.parametrize("seed", range(12))
def test_residue_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 1 + seed % 3
    x = rng.standard_normal(n) * (rng.random(n) < 0.5)
    if seed % 3 == 2 and np.all(x == 0):
        x[0] = 0.7  # keep the 3-D grid two-dimensional
    grad = rng.uniform(-3, 3, n)
    lam = rng.uniform(0.2, 2.0)
    omega = optimality_residue(lam, x, grad)
    grid = grid_residue_oracle(lam, x, grad, step=1e-3)
    assert grid >= omega - 1e-12
    assert grid - omega <= lam * 1e-3


def test_residue_all_free_three_coords_coarse_grid():
    grad = np.array([1.7, -0.2, -2.4])
    omega = optimality_residue(1.1, np.zeros(3), grad)
    grid = grid_residue_oracle(1.1, np.zeros(3), grad, step=1e-2)
    assert omega == pytest.approx(1.3)
    assert 0 <= grid - omega <= 1.1e-2


@pytest.mark.parametrize("seed", range(6))
def test_residue_zero_iff_kkt_optimal(seed):
    p = random_problem(4, 6, seed)
    lam = 0.3 * np.max(np.abs(p.A.T @ p.b))
    x_star, phi_star = kkt_oracle(p.A, p.b, lam)
    g, _ = gradient(p, x_star)
    assert optimality_residue(lam, x_star, g) <= 1e-9
    rng = np.random.default_rng(seed)
    for _ in range(10):
        x = x_star + 1e-3 * rng.standard_normal(p.n)
        g, _ = gradient(p, x)
        assert optimality_residue(lam, x, g) > 1e-6
        assert objective(p, lam, x) > phi_star


@pytest.mark.parametrize("seed", range(8))
def test_decrement_and_residue_bounds(seed):
    p = random_problem(10, 15, seed)
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.05, 0.8) * np.max(np.abs(p.A.T @ p.b))
    x = rng.standard_normal(p.n) * (rng.random(p.n) < 0.4)
    g, r = gradient(p, x)
    f_x = 0.5 * r @ r
    phi_x = f_x + lam * np.abs(x).sum()
    for L in rng.uniform(0.5, 60.0, 5):
        out = prox_step(lam, L, x, g, f_x)
        gm = np.linalg.norm(out.g_map)
        assert out.psi_value <= phi_x - gm**2 / (2 * L) + 1e-10 * (1 + abs(phi_x))
        if np.any(out.x_plus != x):
            S = local_lipschitz(p, x, out.x_plus)
            g_plus = p.A.T @ (p.A @ out.x_plus - p.b)
            assert optimality_residue(lam, out.x_plus, g_plus) <= (1 + S / L) * gm * (1 + 1e-12)
