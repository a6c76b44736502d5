"""Proximal-gradient homotopy (PGH) for l1-regularized least squares."""

from .core import (CountingOperator, ProblemInstance, SolverConfig, gradient,
                   objective, read_problem, write_problem)
from .prox import optimality_residue, prox_step, soft_threshold
from .solver import (IterateRecord, LineSearchFailed, SolveResult, StageReport,
                     Status, homotopy, line_search, prox_grad, proximal_gradient)
from .analysis import (RestrictedSpectrum, check_assumption, kkt_oracle,
                       lipschitz_constant, restricted_eigs)
from .experiments import (InstanceSpec, generate_instance, recovery_error,
                          run_bp, run_comparison)

__version__ = "0.1.0"
