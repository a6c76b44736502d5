"""Adaptive line search, proximal gradient inner solver and the homotopy driver."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import ProblemInstance, SolverConfig, smooth_value
from .prox import optimality_residue, prox_step

# relative slack on the sufficient-decrease test, guards against float ties
LINESEARCH_SLACK = 1e-12


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    LINE_SEARCH_FAILED = "LineSearchFailed"


class LineSearchFailed(RuntimeError):
    """Raised when no acceptable ``L`` is found within the step cap."""


TRACE_FIELDS = ("stage", "k", "lambda", "M", "phi", "omega", "nnz",
                "matvecs", "linesearch_steps")


@dataclass
class IterateRecord:
    stage: int
    k: int
    lam: float
    M: float
    phi: float
    omega: float
    nnz: int
    matvecs: int
    linesearch_steps: int

    def row(self):
        return (self.stage, self.k, self.lam, self.M, self.phi, self.omega,
                self.nnz, self.matvecs, self.linesearch_steps)


@dataclass
class StageReport:
    """Summary of one ProxGrad call.

    ``start_omega`` is the residue of the warm start measured at this
    stage's lambda, before any step is taken.
    """
    lambda_K: float
    eps_hat: float
    inner_iterations: int
    final_omega: float
    start_omega: float
    status: Status = Status.CONVERGED
    x_snapshot: Optional[np.ndarray] = None


@dataclass
class SolveResult:
    x: np.ndarray
    M: float
    stages: List[StageReport]
    trace: List[IterateRecord]
    status: Status
    lambda0: float
    matvecs: int

    @property
    def phi(self) -> float:
        return self.trace[-1].phi

    @property
    def omega(self) -> float:
        return self.trace[-1].omega

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def summary(self, wall_time=None) -> dict:
        out = {
            "status": self.status.value,
            "phi": self.phi,
            "omega": self.omega,
            "lambda0": self.lambda0,
            "iterations": self.iterations,
            "matvecs": self.matvecs,
            "stages": [{"lambda": s.lambda_K, "eps_hat": s.eps_hat,
                        "iterations": s.inner_iterations} for s in self.stages],
        }
        if wall_time is not None:
            out["wall_time"] = wall_time
        return out


@dataclass
class AcceptedStep:
    """Everything known about one accepted prox step; passed to callbacks."""
    stage: int
    k: int
    lam: float
    M: float
    x: np.ndarray
    x_plus: np.ndarray
    grad: np.ndarray
    grad_plus: np.ndarray
    phi_x: float
    phi_plus: float
    psi: float
    g_map: np.ndarray
    linesearch_steps: int


@dataclass
class LineSearchOutput:
    x_plus: np.ndarray
    M: float
    steps: int
    phi_plus: float
    residual_plus: np.ndarray
    psi: float
    g_map: np.ndarray


@dataclass
class ProxGradOutput:
    x: np.ndarray
    M: float
    records: List[IterateRecord]
    status: Status
    grad: np.ndarray
    residual: np.ndarray
    omega: float = field(default=math.inf)


def line_search(problem: ProblemInstance, lam, x, grad, f_x, L0,
                gamma_inc=2.0, max_steps=200) -> LineSearchOutput:
    """Increase ``L`` geometrically from ``L0`` until the model upper-bounds phi.

    Each trial costs one forward matvec. ``residual_plus = A x_plus - b`` is
    returned so the caller can form the next gradient with a single adjoint.
    """
    if not L0 > 0:
        raise ValueError("L0 must be positive")
    op, b = problem.op, problem.b
    L = float(L0)
    for steps in range(1, max_steps + 1):
        step = prox_step(lam, L, x, grad, f_x)
        residual = op.matvec(step.x_plus) - b
        phi_plus = smooth_value(residual) + lam * float(np.abs(step.x_plus).sum())
        if phi_plus <= step.psi_value + LINESEARCH_SLACK * (1.0 + abs(phi_plus)):
            return LineSearchOutput(step.x_plus, L, steps, phi_plus, residual,
                                    step.psi_value, step.g_map)
        if not math.isfinite(phi_plus):
            break
        L *= gamma_inc
    raise LineSearchFailed(f"no sufficient decrease after {max_steps} trials (L={L:g})")


def prox_grad(problem: ProblemInstance, lam, eps_hat, x0, L0, config: SolverConfig,
              stage_id=0, *, grad0=None, residual0=None, l_min=None,
              matvec_base=None, callback: Optional[Callable[[AcceptedStep], None]] = None
              ) -> ProxGradOutput:
    """Proximal gradient method with adaptive line search for fixed ``lam``.

    Runs ``x <- T_{lam, M_k}(x)`` until the optimality residue of the new
    iterate is at most ``eps_hat``. ``grad0``/``residual0`` may carry a cached
    gradient at ``x0`` (e.g. from the previous homotopy stage); otherwise it
    is computed for two matvecs. The gradient at each new iterate is reused
    by the next line search, so a step with one trial costs two matvecs.
    """
    op = problem.op
    if l_min is None:
        l_min = config.resolve_l_min(problem.A)
    if L0 < l_min:
        raise ValueError(f"L0={L0} is below l_min={l_min}")
    if matvec_base is None:
        matvec_base = op.total_count

    x = np.array(x0, dtype=np.float64)
    if grad0 is None or residual0 is None:
        residual = op.matvec(x) - problem.b
        grad = op.rmatvec(residual)
    else:
        grad, residual = grad0, residual0
    f_x = smooth_value(residual)
    L = float(L0)
    M = L
    omega = math.inf
    records: List[IterateRecord] = []

    for k in range(config.max_inner_iters):
        try:
            ls = line_search(problem, lam, x, grad, f_x, L,
                             config.gamma_inc, config.max_linesearch_steps)
        except LineSearchFailed:
            return ProxGradOutput(x, M, records, Status.LINE_SEARCH_FAILED,
                                  grad, residual, omega)
        grad_plus = op.rmatvec(ls.residual_plus)
        omega = optimality_residue(lam, ls.x_plus, grad_plus)
        records.append(IterateRecord(
            stage_id, k, lam, ls.M, ls.phi_plus, omega,
            int(np.count_nonzero(ls.x_plus)), op.total_count - matvec_base, ls.steps))
        if callback is not None:
            phi_x = f_x + lam * float(np.abs(x).sum())
            callback(AcceptedStep(stage_id, k, lam, ls.M, x, ls.x_plus, grad,
                                  grad_plus, phi_x, ls.phi_plus, ls.psi,
                                  ls.g_map, ls.steps))
        x, grad, residual, M = ls.x_plus, grad_plus, ls.residual_plus, ls.M
        f_x = smooth_value(residual)
        if omega <= eps_hat:
            return ProxGradOutput(x, M, records, Status.CONVERGED, grad, residual, omega)
        L = max(l_min, M / config.gamma_dec)
    return ProxGradOutput(x, M, records, Status.MAX_ITERATIONS, grad, residual, omega)


def num_stages(lambda0, lambda_tgt, eta) -> int:
    """Number of continuation stages run before the target stage."""
    if not lambda0 > lambda_tgt:
        return 0
    return int(math.floor(math.log(lambda0 / lambda_tgt) / math.log(1.0 / eta)))


def _stage_report(lam, eps_hat, out, start_omega, keep_snapshot):
    return StageReport(lam, eps_hat, len(out.records), out.omega, start_omega,
                       out.status, out.x.copy() if keep_snapshot else None)


def homotopy(problem: ProblemInstance, config: SolverConfig, *, callback=None,
             keep_snapshots=True) -> SolveResult:
    """Proximal-gradient homotopy (PGH).

    Starts at ``lambda0 = ||A^T b||_inf`` where zero is optimal, shrinks
    lambda by ``eta`` per stage and solves each stage to residue
    ``delta * lambda``, warm-starting from the previous stage's iterate and
    line-search constant. The last stage solves ``lambda_tgt`` to ``eps``.
    """
    op = problem.op
    base = op.total_count
    Atb = op.rmatvec(problem.b)
    lambda0 = float(np.max(np.abs(Atb)))
    # gradient at the zero start comes for free from A^T b
    grad, residual = -Atb, -problem.b
    l_min = config.resolve_l_min(problem.A)
    n_stages = num_stages(lambda0, config.lambda_tgt, config.eta)

    x = np.zeros(problem.n)
    M = l_min
    lam = lambda0
    stages: List[StageReport] = []
    trace: List[IterateRecord] = []

    def run(stage_id, lam_stage, eps_hat):
        start_omega = optimality_residue(lam_stage, x, grad)
        out = prox_grad(problem, lam_stage, eps_hat, x, M, config, stage_id,
                        grad0=grad, residual0=residual, l_min=l_min,
                        matvec_base=base, callback=callback)
        stages.append(_stage_report(lam_stage, eps_hat, out, start_omega, keep_snapshots))
        trace.extend(out.records)
        return out

    for K in range(n_stages):
        lam = config.eta * lam
        out = run(K, lam, config.delta * lam)
        x, M, grad, residual = out.x, out.M, out.grad, out.residual
        if out.status is not Status.CONVERGED:
            return SolveResult(x, M, stages, trace, out.status, lambda0,
                               op.total_count - base)

    out = run(n_stages, config.lambda_tgt, config.eps)
    return SolveResult(out.x, out.M, stages, trace, out.status, lambda0,
                       op.total_count - base)


def proximal_gradient(problem: ProblemInstance, config: SolverConfig, *,
                      callback=None, keep_snapshots=True) -> SolveResult:
    """Plain PG: one ProxGrad call at ``lambda_tgt`` from zero with ``L0 = l_min``."""
    op = problem.op
    base = op.total_count
    Atb = op.rmatvec(problem.b)
    lambda0 = float(np.max(np.abs(Atb)))
    l_min = config.resolve_l_min(problem.A)
    x = np.zeros(problem.n)
    grad = -Atb
    start_omega = optimality_residue(config.lambda_tgt, x, grad)
    out = prox_grad(problem, config.lambda_tgt, config.eps, x, l_min, config, 0,
                    grad0=grad, residual0=-problem.b, l_min=l_min,
                    matvec_base=base, callback=callback)
    stage = _stage_report(config.lambda_tgt, config.eps, out, start_omega, keep_snapshots)
    return SolveResult(out.x, out.M, [stage], list(out.records), out.status,
                       lambda0, op.total_count - base)


SOLVERS = {"pg": proximal_gradient, "pgh": homotopy}


def write_trace_csv(records, fh) -> None:
    """One row per inner iteration; floats use shortest round-trip repr."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for rec in records:
        w.writerow([repr(v) if isinstance(v, float) else v for v in rec.row()])
