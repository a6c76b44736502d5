import math

import numpy as np
import pytest

from l1homotopy.analysis import (CapacityError, RestrictedSpectrum, check_assumption,
                                 kkt_oracle, lipschitz_constant, restricted_eigs)
from l1homotopy.core import ProblemInstance, gradient, objective
from l1homotopy.prox import optimality_residue

from conftest import random_problem
from oracles import phi, power_iteration_gram, sparse_rayleigh_extremes


def test_restricted_eigs_identity():
    for s in (1, 2, 3):
        sp = restricted_eigs(np.eye(3), s)
        assert (sp.rho_minus, sp.rho_plus, sp.kappa) == (1.0, 1.0, 1.0)


def test_restricted_eigs_rank_one():
    sp = restricted_eigs(np.array([[1.0, 1.0], [0.0, 0.0]]), 2)
    assert sp.rho_minus == pytest.approx(0.0, abs=1e-15)
    assert sp.rho_plus == pytest.approx(2.0)
    assert math.isinf(sp.kappa)
    assert sp.to_dict()["kappa"] is None


def test_restricted_eigs_capacity_and_range():
    with pytest.raises(CapacityError):
        restricted_eigs(np.ones((3, 30)), 15, budget=1000)
    with pytest.raises(ValueError):
        restricted_eigs(np.eye(3), 0)
    with pytest.raises(ValueError):
        restricted_eigs(np.eye(3), 4)


@pytest.mark.parametrize("seed", range(3))
def test_restricted_eigs_against_per_support_eigh(seed):
    A = np.random.default_rng(seed).standard_normal((5, 8))
    for s in (1, 3, 6):
        sp = restricted_eigs(A, s, chunk=7)
        lo, hi = sparse_rayleigh_extremes(A, s)
        assert sp.rho_plus == pytest.approx(hi, rel=1e-12)
        assert sp.rho_minus == pytest.approx(max(lo, 0.0), abs=1e-10)


def test_rip_relation():
    rng = np.random.default_rng(4)
    for _ in range(10):
        A = rng.standard_normal((60, 10)) / math.sqrt(60)
        sp = restricted_eigs(A, 3)
        nu = max(1 - sp.rho_minus, sp.rho_plus - 1)
        if nu < 1:
            assert sp.kappa <= (1 + nu) / (1 - nu) * (1 + 1e-12)


def test_lipschitz_examples():
    assert lipschitz_constant(np.eye(4)) == pytest.approx(1.0, rel=1e-12)
    assert lipschitz_constant(np.ones((2, 2))) == pytest.approx(4.0, rel=1e-12)
    assert lipschitz_constant(np.zeros((3, 2))) == 0.0
    # all-ones start lies in the null space here
    A = np.array([[1.0, -1.0]])
    assert lipschitz_constant(A) == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_lipschitz_vs_enumeration_and_power_oracle(seed):
    A = np.random.default_rng(seed).standard_normal((6, 10))
    L = lipschitz_constant(A)
    assert abs(L - restricted_eigs(A, 10).rho_plus) <= 1e-8
    assert abs(L - power_iteration_gram(A)) <= 1e-8


def test_kkt_oracle_scalar_examples():
    x, p = kkt_oracle([[1.0]], [2.0], 1.0)
    np.testing.assert_allclose(x, [1.0])
    assert p == pytest.approx(1.5)
    x, p = kkt_oracle([[1.0]], [0.5], 1.0)
    np.testing.assert_array_equal(x, [0.0])
    assert p == pytest.approx(0.125)


def test_kkt_oracle_capacity():
    with pytest.raises(CapacityError):
        kkt_oracle(np.ones((2, 11)), np.ones(2), 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_kkt_oracle_residue_self_consistency(seed):
    p = random_problem(4, 6, seed)
    lam = np.random.default_rng(seed).uniform(0.05, 0.9) * np.max(np.abs(p.A.T @ p.b))
    x, phi_star = kkt_oracle(p.A, p.b, lam)
    g, _ = gradient(p, x)
    assert optimality_residue(lam, x, g) <= 1e-8
    assert phi_star == pytest.approx(objective(p, lam, x), rel=1e-14)


@pytest.mark.parametrize("seed", range(3))
def test_kkt_oracle_is_global_minimizer(seed):
    p = random_problem(5, 7, seed)
    lam = 0.2 * np.max(np.abs(p.A.T @ p.b))
    x, phi_star = kkt_oracle(p.A, p.b, lam)
    rng = np.random.default_rng(seed)
    for scale in (1e-4, 1e-2, 1.0):
        for _ in range(333 if scale != 1.0 else 334):
            y = x + scale * rng.standard_normal(p.n)
            assert phi(p.A, p.b, lam, y) >= phi_star - 1e-12


def _labelled(A, xbar, z):
    A = np.asarray(A, dtype=float)
    return ProblemInstance.from_arrays(A, A @ xbar + z, xbar, z)


def test_check_noise_free():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 8))
    xbar = np.zeros(8)
    xbar[2] = 1.0
    rep = check_assumption(_labelled(A, xbar, np.zeros(6)), 1e-6, gamma=4.0,
                           delta_prime=0.5, s_tilde=1)
    assert rep.noise_inf == 0.0
    assert rep.lambda_floor == 0.0
    assert rep.lambda_ok and rep.gamma_ok


def test_check_identity_mixed_re():
    n = 6
    xbar = np.zeros(n)
    xbar[0] = 1.0
    for s_tilde in range(1, n + 1):
        rep = check_assumption(_labelled(np.eye(n), xbar, np.zeros(n)), 1.0, gamma=3.0,
                               delta_prime=0.2, s_tilde=s_tilde, gamma_inc=2.0)
        assert rep.mixed_re_rhs == 256.0
        assert not rep.re_ok
        assert rep.l_min_ok


def test_check_gamma_condition_and_floor():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((6, 8))
    xbar = np.zeros(8)
    xbar[1] = 2.0
    z = rng.uniform(-0.1, 0.1, 6)
    p = _labelled(A, xbar, z)
    rep = check_assumption(p, 10.0, gamma=4.0, delta_prime=0.5, s_tilde=1)
    assert rep.gamma_ok
    noise = np.max(np.abs(A.T @ z))
    # (gamma+1)/((1-d')gamma-(1+d')) = 5/0.5 = 10 > 4
    assert rep.lambda_floor == pytest.approx(10.0 * noise)
    assert rep.lambda_ok == (10.0 >= rep.lambda_floor)
    bad = check_assumption(p, 10.0, gamma=2.0, delta_prime=0.5, s_tilde=1)
    assert not bad.gamma_ok and not bad.lambda_ok
    assert bad.to_dict()["lambda_floor"] is None


def test_check_needs_ground_truth():
    with pytest.raises(ValueError):
        check_assumption(random_problem(3, 4, 0), 1.0, 4.0, 0.5, 1)


def test_spectrum_kappa():
    assert RestrictedSpectrum(2, 0.5, 2.0).kappa == 4.0
