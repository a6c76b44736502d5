"""Random instances, PG-vs-PGH comparisons and noise-free basis pursuit runs.

Instances are drawn from numpy's PCG64 generator. A single
``SeedSequence(seed)`` is spawned into four child streams, used in order
for: the matrix ``A``, the support of ``xbar``, the values of ``xbar`` and
the noise ``z``. Changing one of the sizes therefore never reshuffles the
draws of an unrelated component.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import ProblemInstance, SolverConfig
from .solver import SolveResult, Status, homotopy, proximal_gradient

REFERENCE_EPS = 1e-12
DESK_SHAPE = dict(m=200, n=1000, sbar=20)


@dataclass(frozen=True)
class InstanceSpec:
    m: int
    n: int
    sbar: int
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if not 1 <= self.sbar <= self.n:
            raise ValueError(f"sbar must lie in [1, n={self.n}], got {self.sbar}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


def _streams(seed):
    children = np.random.SeedSequence(seed).spawn(4)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def generate_instance(spec: InstanceSpec) -> ProblemInstance:
    """Uniform random instance: ``A_ij, xbar_S ~ U[-1, 1]``, ``z_i ~ U[-sigma, sigma]``."""
    rng_a, rng_s, rng_v, rng_z = _streams(spec.seed)
    A = rng_a.uniform(-1.0, 1.0, size=(spec.m, spec.n))
    support = np.sort(rng_s.choice(spec.n, size=spec.sbar, replace=False))
    values = rng_v.uniform(-1.0, 1.0, size=spec.sbar)
    while np.any(values == 0.0):
        values[values == 0.0] = rng_v.uniform(-1.0, 1.0, size=int(np.sum(values == 0.0)))
    xbar = np.zeros(spec.n)
    xbar[support] = values
    if spec.sigma > 0:
        z = rng_z.uniform(-spec.sigma, spec.sigma, size=spec.m)
    else:
        z = np.zeros(spec.m)
    b = A @ xbar + z
    return ProblemInstance.from_arrays(A, b, xbar, z, seed=spec.seed)


def recovery_error(x, xbar) -> float:
    x = np.asarray(x, dtype=np.float64)
    xbar = np.asarray(xbar, dtype=np.float64)
    if x.shape != xbar.shape:
        raise ValueError("x and xbar must have the same shape")
    return float(np.linalg.norm(x - xbar))


def desk_lambda_tgt(problem: ProblemInstance) -> float:
    """Target lambda for desk-scale runs: ``4 ||A^T z||_inf``.

    The factor 4 is the smallest multiple of the noise level accepted by the
    sparse-recovery assumption. Noise-free or unlabeled instances fall back
    to 1.
    """
    noise = 0.0 if problem.z is None else float(np.max(np.abs(problem.A.T @ problem.z)))
    return 4.0 * noise if noise > 0 else 1.0


def polish(problem: ProblemInstance, lam: float, x):
    """Re-solve the stationarity system on the support and sign pattern of ``x``.

    Returns whichever of ``x`` and the polished point has the smaller
    objective, together with that objective.
    """
    A, b = problem.A, problem.b

    def phi(v):
        r = A @ v - b
        return 0.5 * float(r @ r) + lam * float(np.abs(v).sum())

    best, best_phi = np.asarray(x, dtype=np.float64), phi(x)
    S = np.flatnonzero(best)
    if S.size == 0 or S.size > problem.m:
        return best, best_phi
    AS = A[:, S]
    sig = np.sign(best[S])
    try:
        xs = np.linalg.solve(AS.T @ AS, AS.T @ b - lam * sig)
    except np.linalg.LinAlgError:
        return best, best_phi
    if np.all(np.sign(xs) == sig):
        cand = np.zeros(problem.n)
        cand[S] = xs
        p = phi(cand)
        if p < best_phi:
            best, best_phi = cand, p
    return best, best_phi


def reference_objective(problem: ProblemInstance, config: SolverConfig):
    """High-accuracy ``(x_star, phi_star)`` via PGH at ``eps = 1e-12`` plus a polish."""
    ref = homotopy(problem.fresh(), config.replace(eps=REFERENCE_EPS), keep_snapshots=False)
    return polish(problem, config.lambda_tgt, ref.x)


@dataclass
class MethodReport:
    method: str
    status: str
    iterations: int
    matvecs: int
    phi: float
    omega: float
    gap: float
    recovery_error: Optional[float]
    max_nnz: int
    stage_iterations: List[int]
    result: SolveResult = field(repr=False, compare=False)

    @property
    def matvecs_per_iteration(self) -> float:
        return self.matvecs / self.iterations

    def to_dict(self) -> dict:
        return {
            "method": self.method, "status": self.status,
            "iterations": self.iterations, "matvecs": self.matvecs,
            "phi": self.phi, "omega": self.omega, "gap": self.gap,
            "recovery_error": self.recovery_error, "max_nnz": self.max_nnz,
            "stage_iterations": self.stage_iterations,
        }


@dataclass
class ComparisonReport:
    lambda_tgt: float
    lambda0: float
    phi_star: float
    methods: Dict[str, MethodReport]
    spec: Optional[InstanceSpec] = None

    def to_dict(self) -> dict:
        out = {"lambda_tgt": self.lambda_tgt, "lambda0": self.lambda0,
               "phi_star": self.phi_star,
               "methods": [self.methods[k].to_dict() for k in sorted(self.methods)]}
        if self.spec is not None:
            out["instance"] = dict(m=self.spec.m, n=self.spec.n, sbar=self.spec.sbar,
                                   sigma=self.spec.sigma, seed=self.spec.seed)
        return out


_METHODS = {"PG": proximal_gradient, "PGH": homotopy}


def run_comparison(spec: Optional[InstanceSpec], config: Optional[SolverConfig] = None,
                   methods: Sequence[str] = ("PG", "PGH"), *,
                   problem: Optional[ProblemInstance] = None, callback=None,
                   **config_kw) -> ComparisonReport:
    """Solve one instance with each method on independent counters.

    Either ``spec`` (the instance is generated) or ``problem`` must be given.
    With ``config=None`` the target lambda comes from :func:`desk_lambda_tgt`
    and the remaining settings are the defaults, overridable by keyword.
    ``callback`` is forwarded to every solver run (not to the reference solve).
    """
    names = [m.upper() for m in methods]
    if not names:
        raise ValueError("at least one method is required")
    for name in names:
        if name not in _METHODS:
            raise ValueError(f"unknown method {name!r}; choose from PG, PGH")
    if problem is None:
        if spec is None:
            raise ValueError("either spec or problem is required")
        problem = generate_instance(spec)
    if config is None:
        config = SolverConfig(lambda_tgt=desk_lambda_tgt(problem), **config_kw)

    _, phi_star = reference_objective(problem, config)
    reports = {}
    for name in sorted(set(names)):
        res = _METHODS[name](problem.fresh(), config, callback=callback,
                             keep_snapshots=False)
        err = None if problem.xbar is None else recovery_error(res.x, problem.xbar)
        reports[name] = MethodReport(
            method=name, status=res.status.value, iterations=res.iterations,
            matvecs=res.matvecs, phi=res.phi, omega=res.omega,
            gap=res.phi - phi_star, recovery_error=err,
            max_nnz=max(r.nnz for r in res.trace),
            stage_iterations=[s.inner_iterations for s in res.stages],
            result=res)
    lambda0 = next(iter(reports.values())).result.lambda0
    return ComparisonReport(config.lambda_tgt, lambda0, phi_star, reports, spec)


LONG_FIELDS = ("method", "stage", "k", "metric", "value")
LONG_METRICS = ("phi", "gap", "omega", "M", "nnz", "matvecs")


def write_long_csv(report: ComparisonReport, fh) -> None:
    """Plot-ready long format; ``k`` counts inner iterations across all stages."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(LONG_FIELDS)
    for name in sorted(report.methods):
        for k, rec in enumerate(report.methods[name].result.trace):
            values = {"phi": rec.phi, "gap": rec.phi - report.phi_star,
                      "omega": rec.omega, "M": rec.M, "nnz": rec.nnz,
                      "matvecs": rec.matvecs}
            for metric in LONG_METRICS:
                v = values[metric]
                w.writerow([name, rec.stage, k, metric,
                            repr(v) if isinstance(v, float) else v])


@dataclass
class BasisPursuitRun:
    result: SolveResult
    errors: List[float]
    lambda_tgt: float

    def to_dict(self) -> dict:
        out = self.result.summary()
        out["lambda_tgt"] = self.lambda_tgt
        out["recovery_errors"] = self.errors
        return out


def run_bp(spec: InstanceSpec, config: Optional[SolverConfig] = None,
           eps: float = 1e-9, ratio: float = 1e-10, callback=None,
           **config_kw) -> BasisPursuitRun:
    """Noise-free recovery with a vanishing target ``lambda_tgt = ratio * lambda0``.

    ``errors[j]`` is the distance from ``xbar`` to the iterate returned by
    stage ``j`` (the last entry belongs to the target stage).
    """
    if spec.sigma != 0:
        raise ValueError("basis pursuit runs need a noise-free instance (sigma = 0)")
    problem = generate_instance(spec)
    lambda0 = float(np.max(np.abs(problem.A.T @ problem.b)))
    lambda_tgt = ratio * lambda0
    if config is None:
        config = SolverConfig(lambda_tgt=lambda_tgt, eps=eps, **config_kw)
    else:
        config = config.replace(lambda_tgt=lambda_tgt)
    res = homotopy(problem, config, callback=callback, keep_snapshots=True)
    errors = [recovery_error(s.x_snapshot, problem.xbar) for s in res.stages]
    return BasisPursuitRun(res, errors, lambda_tgt)


def converged(report: MethodReport) -> bool:
    return report.status == Status.CONVERGED.value
