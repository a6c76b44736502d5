"""Brute-force oracles for tiny instances.

Everything here works on the raw matrix rather than the counting operator,
so running a check never perturbs a solver's matvec accounting.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import as_dense_matrix, default_l_min


class CapacityError(ValueError):
    """The requested enumeration is larger than the allowed budget."""


class OracleFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class RestrictedSpectrum:
    s: int
    rho_minus: float
    rho_plus: float

    @property
    def kappa(self) -> float:
        if self.rho_minus > 0:
            return self.rho_plus / self.rho_minus
        return math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kappa"] = None if math.isinf(self.kappa) else self.kappa
        return d


def restricted_eigs(A, s: int, budget: int = 10**6, chunk: int = 4096) -> RestrictedSpectrum:
    """Extreme eigenvalues of ``A_S^T A_S`` over all supports with ``|S| = s``.

    By eigenvalue interlacing this equals the sup/inf of the Rayleigh
    quotient of ``A^T A`` over all vectors with at most ``s`` nonzeros.
    """
    A = as_dense_matrix(A)
    n = A.shape[1]
    if not 1 <= s <= n:
        raise ValueError(f"s must lie in [1, {n}], got {s}")
    total = math.comb(n, s)
    if total > budget:
        raise CapacityError(f"C({n}, {s}) = {total} supports exceeds budget {budget}")
    G = A.T @ A
    lo, hi = math.inf, -math.inf
    combos = itertools.combinations(range(n), s)
    while True:
        idx = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp)
        if idx.size == 0:
            break
        sub = G[idx[:, :, None], idx[:, None, :]]
        w = np.linalg.eigvalsh(sub)
        lo = min(lo, float(w[:, 0].min()))
        hi = max(hi, float(w[:, -1].max()))
    # roundoff can push a singular Gram slightly negative
    return RestrictedSpectrum(s, max(lo, 0.0), hi)


def lipschitz_constant(A, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of ``A^T A`` by power iteration from the all-ones vector.

    Stops once ``||G v - mu v|| <= tol * mu``; for a symmetric matrix the
    Rayleigh quotient error is then second order in that residual.
    """
    A = as_dense_matrix(A)
    n = A.shape[1]
    v = np.ones(n) / math.sqrt(n)
    mu = 0.0
    restarted = False
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        mu = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            if restarted or not np.any(A):
                return 0.0
            # start vector in the null space; retry from a fixed random one
            v = np.random.default_rng(0).standard_normal(n)
            v /= np.linalg.norm(v)
            restarted = True
            continue
        if np.linalg.norm(w - mu * v) <= tol * mu:
            return mu
        v = w / nw
    return mu


def kkt_oracle(A, b, lam: float, max_n: int = 10):
    """Exact l1-LS minimizer by enumerating every sign pattern in {-1, 0, +1}^n.

    For each support ``S`` and signs ``sigma`` the stationarity system
    ``A_S^T (A_S x_S - b) + lam * sigma = 0`` is solved (minimum-norm least
    squares if singular). A candidate is kept when its signs match ``sigma``,
    stationarity holds on ``S`` and ``|A_j^T (A x - b)| <= lam (1 + 1e-9)``
    off ``S``. Returns ``(x_star, phi_star)`` for the best kept candidate.
    """
    A = as_dense_matrix(A)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if n > max_n:
        raise CapacityError(f"kkt_oracle enumerates 3^n patterns; n={n} > {max_n}")
    G = A.T @ A
    Atb = A.T @ b
    stat_tol = 1e-9 * (lam + float(np.max(np.abs(Atb), initial=0.0)))

    best_x = np.zeros(n)
    best_phi = 0.5 * float(b @ b)
    # the empty support is optimal iff lam >= ||A^T b||_inf
    found = bool(np.all(np.abs(Atb) <= lam * (1 + 1e-9)))
    if not found:
        best_phi = math.inf

    for size in range(1, n + 1):
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=size))).T
        for support in itertools.combinations(range(n), size):
            S = np.array(support, dtype=np.intp)
            rhs = Atb[S, None] - lam * signs
            xs = np.linalg.lstsq(G[np.ix_(S, S)], rhs, rcond=None)[0]
            ok = np.all(np.sign(xs) == signs, axis=0)
            if not ok.any():
                continue
            xs, sg = xs[:, ok], signs[:, ok]
            r = A[:, S] @ xs - b[:, None]
            g = A.T @ r
            ok = np.all(np.abs(g[S] + lam * sg) <= stat_tol, axis=0)
            off = np.ones(n, dtype=bool)
            off[S] = False
            ok &= np.all(np.abs(g[off]) <= lam * (1 + 1e-9), axis=0)
            if not ok.any():
                continue
            phis = 0.5 * np.einsum("ij,ij->j", r, r) + lam * np.abs(xs).sum(axis=0)
            phis[~ok] = math.inf
            j = int(np.argmin(phis))
            # strict comparison keeps the lexicographically first support on ties
            if phis[j] < best_phi:
                best_phi = float(phis[j])
                best_x = np.zeros(n)
                best_x[S] = xs[:, j]
                found = True
    if not found:
        raise OracleFailure("no sign pattern satisfied the optimality conditions")
    return best_x, best_phi


@dataclass
class AssumptionReport:
    gamma: float
    delta_prime: float
    s_tilde: int
    sbar: int
    noise_inf: float
    lambda_tgt: float
    lambda_floor: float
    mixed_re_lhs: float
    mixed_re_rhs: float
    rho_minus_2: float
    gamma_ok: bool
    lambda_ok: bool
    re_ok: bool
    l_min: float
    l_min_ok: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and math.isinf(v):
                d[k] = None
        return d


def check_assumption(problem, lambda_tgt: float, gamma: float, delta_prime: float,
                     s_tilde: int, gamma_inc: float = 2.0, budget: int = 10**6,
                     l_min: Optional[float] = None) -> AssumptionReport:
    """Evaluate both sides of the noise-level and mixed restricted-eigenvalue conditions.

    Sparsity levels above ``n`` are clamped to ``n`` (the Rayleigh quotient
    bounds are the same for every ``s >= n``).
    """
    if problem.xbar is None or problem.z is None:
        raise ValueError("assumption check needs an instance with known xbar and z")
    if not 0 < delta_prime < 1:
        raise ValueError("delta_prime must lie in (0, 1)")
    if s_tilde < 1:
        raise ValueError("s_tilde must be positive")
    A = problem.A
    n = problem.n
    sbar = int(np.count_nonzero(problem.xbar))
    noise_inf = float(np.max(np.abs(A.T @ problem.z)))

    gamma_ok = gamma > (1 + delta_prime) / (1 - delta_prime)
    if gamma_ok:
        factor = max(4.0, (gamma + 1) / ((1 - delta_prime) * gamma - (1 + delta_prime)))
        lambda_floor = factor * noise_inf
    else:
        lambda_floor = math.inf

    def spec(s):
        return restricted_eigs(A, min(max(s, 1), n), budget)

    sp_2 = spec(sbar + 2 * s_tilde)
    sp_t = spec(s_tilde)
    sp_1 = spec(sbar + s_tilde)
    numer = 16.0 * (gamma_inc * sp_2.rho_plus + 2.0 * sp_t.rho_plus)
    if sp_1.rho_minus > 0:
        rhs = numer / sp_1.rho_minus * (1 + gamma) * sbar
    else:
        rhs = math.inf
    if l_min is None:
        l_min = default_l_min(A)

    return AssumptionReport(
        gamma=float(gamma), delta_prime=float(delta_prime), s_tilde=int(s_tilde),
        sbar=sbar, noise_inf=noise_inf, lambda_tgt=float(lambda_tgt),
        lambda_floor=lambda_floor, mixed_re_lhs=float(s_tilde), mixed_re_rhs=rhs,
        rho_minus_2=sp_2.rho_minus, gamma_ok=gamma_ok,
        lambda_ok=bool(gamma_ok and lambda_tgt >= lambda_floor),
        re_ok=bool(s_tilde > rhs and sp_2.rho_minus > 0),
        l_min=float(l_min), l_min_ok=bool(l_min <= gamma_inc * sp_2.rho_plus),
    )
