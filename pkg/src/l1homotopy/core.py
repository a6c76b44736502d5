"""Problem data, counted matrix-vector products, and the smooth part of the objective.

The objective throughout the package is

    phi_lambda(x) = 0.5 * ||A x - b||_2^2 + lambda * ||x||_1

with ``f(x) = 0.5 * ||A x - b||_2^2`` its smooth part.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Optional

import numpy as np


def as_dense_matrix(A) -> np.ndarray:
    """Validate and return ``A`` as a C-contiguous float64 2-D array."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"matrix must be 2-D with positive dimensions, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def _as_vector(v, length, name):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != length:
        raise ValueError(f"{name} must have shape ({length},), got {v.shape}")
    return v


class CountingOperator:
    """Dense matrix wrapper that counts applications of ``A`` and ``A^T``.

    The counters are the unit of cost used in all solver traces.
    """

    def __init__(self, matrix):
        self.matrix = as_dense_matrix(matrix)
        self.forward_count = 0
        self.adjoint_count = 0

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def total_count(self) -> int:
        return self.forward_count + self.adjoint_count

    def matvec(self, v) -> np.ndarray:
        v = _as_vector(v, self.matrix.shape[1], "v")
        self.forward_count += 1
        return self.matrix @ v

    def rmatvec(self, u) -> np.ndarray:
        u = _as_vector(u, self.matrix.shape[0], "u")
        self.adjoint_count += 1
        return self.matrix.T @ u

    def fresh(self) -> "CountingOperator":
        """Return an operator sharing the matrix but with zeroed counters."""
        return CountingOperator(self.matrix)

    def __repr__(self):
        m, n = self.matrix.shape
        return (f"CountingOperator({m}x{n}, forward={self.forward_count}, "
                f"adjoint={self.adjoint_count})")


@dataclass
class ProblemInstance:
    """An l1-LS instance ``b = A xbar + z``.

    ``xbar`` and ``z`` are only known for synthetic instances.
    """

    op: CountingOperator
    b: np.ndarray
    xbar: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.op, CountingOperator):
            self.op = CountingOperator(self.op)
        m, n = self.op.shape
        self.b = _as_vector(self.b, m, "b")
        if self.xbar is not None:
            self.xbar = _as_vector(self.xbar, n, "xbar")
        if self.z is not None:
            self.z = _as_vector(self.z, m, "z")

    @classmethod
    def from_arrays(cls, A, b, xbar=None, z=None, seed=None) -> "ProblemInstance":
        return cls(CountingOperator(A), b, xbar, z, seed)

    @property
    def A(self) -> np.ndarray:
        return self.op.matrix

    @property
    def m(self) -> int:
        return self.op.shape[0]

    @property
    def n(self) -> int:
        return self.op.shape[1]

    def fresh(self) -> "ProblemInstance":
        """Copy with an independent operator whose counters start at zero."""
        return ProblemInstance(self.op.fresh(), self.b, self.xbar, self.z, self.seed)


@dataclass(frozen=True)
class SolverConfig:
    """Tunables for the line search, the inner solver and the homotopy loop.

    ``l_min=None`` means the largest squared column norm of ``A``, which is
    ``rho_+(A, 1)`` and never exceeds the global Lipschitz constant.
    """

    lambda_tgt: float
    eps: float = 1e-5
    eta: float = 0.7
    delta: float = 0.2
    l_min: Optional[float] = None
    gamma_inc: float = 2.0
    gamma_dec: float = 2.0
    max_inner_iters: int = 100_000
    max_linesearch_steps: int = 200

    def __post_init__(self):
        if not self.lambda_tgt > 0:
            raise ValueError("lambda_tgt must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.l_min is not None and not self.l_min > 0:
            raise ValueError("l_min must be positive")
        if not self.gamma_inc > 1:
            raise ValueError("gamma_inc must be > 1")
        if not self.gamma_dec >= 1:
            raise ValueError("gamma_dec must be >= 1")
        if self.max_inner_iters < 1 or self.max_linesearch_steps < 1:
            raise ValueError("iteration caps must be positive")

    def replace(self, **changes) -> "SolverConfig":
        kw = copy.copy(self.__dict__)
        kw.update(changes)
        return SolverConfig(**kw)

    def resolve_l_min(self, A) -> float:
        if self.l_min is not None:
            return float(self.l_min)
        return default_l_min(A)


def default_l_min(A) -> float:
    """Largest squared column norm, i.e. ``rho_+(A, 1)``."""
    A = np.asarray(A, dtype=np.float64)
    L = float(np.max(np.einsum("ij,ij->j", A, A)))
    if L <= 0:
        # zero matrix: any positive constant is a valid optimistic estimate
        return 1.0
    return L


def smooth_value(residual) -> float:
    return 0.5 * float(residual @ residual)


def objective(problem: ProblemInstance, lam: float, x, residual=None) -> float:
    """phi_lambda(x); one forward matvec unless ``residual = A x - b`` is given."""
    x = _as_vector(x, problem.n, "x")
    if residual is None:
        residual = problem.op.matvec(x) - problem.b
    return smooth_value(residual) + lam * float(np.abs(x).sum())


def gradient(problem: ProblemInstance, x):
    """Return ``(A^T (A x - b), A x - b)`` at the cost of one matvec each way."""
    residual = problem.op.matvec(x) - problem.b
    return problem.op.rmatvec(residual), residual


# -- problem file I/O -------------------------------------------------------

def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def format_problem(problem: ProblemInstance) -> str:
    A = problem.A
    lines = [f"{problem.m} {problem.n}"]
    lines.extend(_fmt(row) for row in A)
    lines.append(_fmt(problem.b))
    if problem.xbar is not None:
        lines.append("xbar")
        lines.append(_fmt(problem.xbar))
    if problem.z is not None:
        lines.append("z")
        lines.append(_fmt(problem.z))
    return "\n".join(lines) + "\n"


def parse_problem(text: str) -> ProblemInstance:
    tokens = text.split()
    try:
        m, n = int(tokens[0]), int(tokens[1])
    except (IndexError, ValueError) as exc:
        raise ValueError("problem file must start with 'm n'") from exc
    pos = 2

    def take(count, what):
        nonlocal pos
        chunk = tokens[pos:pos + count]
        if len(chunk) != count:
            raise ValueError(f"problem file truncated while reading {what}")
        pos += count
        return np.array([float(t) for t in chunk], dtype=np.float64)

    A = take(m * n, "matrix").reshape(m, n)
    b = take(m, "b")
    extras = {}
    while pos < len(tokens):
        tag = tokens[pos]
        pos += 1
        if tag == "xbar":
            extras["xbar"] = take(n, "xbar")
        elif tag == "z":
            extras["z"] = take(m, "z")
        else:
            raise ValueError(f"unexpected token {tag!r} in problem file")
    return ProblemInstance.from_arrays(A, b, **extras)


def read_problem(path) -> ProblemInstance:
    with open(path, "r", encoding="ascii") as fh:
        return parse_problem(fh.read())


def write_problem(problem: ProblemInstance, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_problem(problem))
