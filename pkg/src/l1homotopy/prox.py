"""Proximal primitives for ``lambda * ||x||_1``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def soft_threshold(v, alpha: float) -> np.ndarray:
    """Coordinatewise ``sgn(v) * max(|v| - alpha, 0)``.

    Entries with ``|v_i| <= alpha`` map to exactly zero.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - alpha, 0.0)


@dataclass
class ProxStepOutput:
    x_plus: np.ndarray
    g_map: np.ndarray
    psi_value: float


def prox_step(lam: float, L: float, x, grad, f_x: float) -> ProxStepOutput:
    """Minimize the local model ``psi_{lam,L}(x; .)`` in closed form.

    Parameters
    ----------
    lam : float
        Regularization weight.
    L : float
        Curvature of the quadratic model (inverse step size).
    x : array
        Expansion point.
    grad : array
        ``grad f(x)``.
    f_x : float
        ``f(x)``.

    Returns
    -------
    ProxStepOutput
        ``x_plus = T(x)``, gradient mapping ``L (x - x_plus)`` and the model
        value at ``x_plus``. No matrix products are performed.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    x_plus = soft_threshold(x - grad / L, lam / L)
    d = x_plus - x
    psi = f_x + float(grad @ d) + 0.5 * L * float(d @ d) + lam * float(np.abs(x_plus).sum())
    return ProxStepOutput(x_plus, L * (x - x_plus), psi)


def optimality_residue(lam: float, x, grad) -> float:
    """Infinity-norm distance from ``grad`` to ``-lam * subdiff ||x||_1``.

    On the support the subgradient is fixed at ``sgn(x_i)``; off the support
    the best choice in ``[-1, 1]`` leaves ``max(|grad_i| - lam, 0)``.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if x.size == 0:
        return 0.0
    on = x != 0
    r = np.where(on, np.abs(grad + lam * np.sign(x)),
                 np.maximum(np.abs(grad) - lam, 0.0))
    return float(r.max())


def local_lipschitz(problem, x, x_plus) -> float:
    """``||grad f(x_plus) - grad f(x)|| / ||x_plus - x||``.

    Diagnostic only: it goes through the raw matrix, so solver counters
    are untouched.
    """
    A = problem.A
    d = np.asarray(x_plus, dtype=np.float64) - np.asarray(x, dtype=np.float64)
    nd = np.linalg.norm(d)
    if nd == 0:
        return 0.0
    # grad f is affine, so the difference only depends on d
    return float(np.linalg.norm(A.T @ (A @ d)) / nd)
