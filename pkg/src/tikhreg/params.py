"""Regularization parameter selection: two a-priori rules and the adaptive
fixed-point iteration.

Both a-priori rules solve lambda^{(alpha+1)/(2 alpha)} = C sigma n^{-1/2} / q
for lambda, where q is either the scaled solution norm n^{-1/2} ||x*||_W or
that norm plus sigma n^{-1/2}. The adaptive iteration replaces the two
unknowns by empirical quantities of the current iterate: sigma by the scaled
residual n^{-1/2} ||A x_k - b|| and the solution norm by n^{-1/2} ||x_k||_W,
starting from lambda_0^{(alpha+1)/(2 alpha)} = n^{-1/2}.
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import DegenerateSolution, DomainError, ZeroSolutionNorm
from .tikhonov import RegularizedSolution

# Updates below this are treated as vanished; solving there is pointless.
_LAMBDA_FLOOR = 1e-300


@dataclass(frozen=True)
class PriorRuleInput:
    alpha: float                 # spectral decay exponent, > 1
    n: int
    sigma: float                 # absolute noise strength, >= 0
    x_norm_w_scaled: float       # n^{-1/2} ||x*||_W
    constant_c: float = 1.0

    def __post_init__(self):
        if not self.alpha > 1:
            raise DomainError(f"alpha must exceed 1, got {self.alpha}")
        if not self.constant_c > 0:
            raise DomainError(f"constant_c must be positive, got {self.constant_c}")
        if self.sigma < 0 or not math.isfinite(self.sigma):
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma}")


@dataclass(frozen=True)
class AdaptiveConfig:
    alpha: float
    constant_c: float = 1.0
    tol: float = 1e-10
    stop_mode: str = "absolute"      # "absolute" | "relative"
    max_iters: int = 100

    def __post_init__(self):
        if not self.alpha > 1:
            raise DomainError(f"alpha must exceed 1, got {self.alpha}")
        if not self.constant_c > 0:
            raise DomainError(f"constant_c must be positive, got {self.constant_c}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.stop_mode not in ("absolute", "relative"):
            raise DomainError(f"stop_mode must be absolute or relative, got {self.stop_mode!r}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class AdaptiveTrace:
    """Every iterate of the adaptive run plus how it ended.

    lambdas[k] pairs with residuals[k] = n^{-1/2} ||A x_k - b|| and
    w_norms[k] = n^{-1/2} ||x_k||_W. terminated is one of "converged",
    "max_iters", "nonfinite"; final is the solution at the last solved lambda.
    """

    lambdas: List[float] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    w_norms: List[float] = field(default_factory=list)
    terminated: str = "max_iters"
    final: RegularizedSolution = None

    @property
    def iters(self):
        """Number of fixed-point updates performed (trace length minus one)."""
        return len(self.lambdas) - 1


def prior_rule_w(inp):
    """lambda = (C sigma n^{-1/2} / (n^{-1/2} ||x*||_W))^{2 alpha/(alpha+1)}."""
    if inp.x_norm_w_scaled == 0.0:
        raise ZeroSolutionNorm("x_norm_w_scaled is zero")
    base = inp.constant_c * inp.sigma / (math.sqrt(inp.n) * inp.x_norm_w_scaled)
    return base ** (2.0 * inp.alpha / (inp.alpha + 1.0))


def prior_rule_rho0(inp):
    """Same rule with the norm replaced by rho_0 = n^{-1/2}||x*||_W + sigma n^{-1/2}."""
    rho0 = inp.x_norm_w_scaled + inp.sigma / math.sqrt(inp.n)
    if rho0 == 0.0:
        raise ZeroSolutionNorm("x_norm_w_scaled + sigma * n^{-1/2} is zero")
    base = inp.constant_c * inp.sigma / (math.sqrt(inp.n) * rho0)
    return base ** (2.0 * inp.alpha / (inp.alpha + 1.0))


def initial_lambda(alpha, n):
    """Starting parameter: lambda_0 = n^{-alpha/(alpha+1)}."""
    return float(n) ** (-alpha / (alpha + 1.0))


def adaptive_select(instance, b, cfg, solver):
    """Run the adaptive fixed-point iteration and return its full trace.

    solver is any callable lam -> RegularizedSolution for this (instance, b)
    pair; see tikhonov.direct_solver and tikhonov.spectral_solver. Each
    update is

        lambda_{k+1}^{(alpha+1)/(2 alpha)} =
            C * (n^{-1/2} ||A x_k - b||) * n^{-1/2} * (n^{-1/2} ||x_k||_W)^{-1}

    and the run stops once |lambda_{k+1} - lambda_k| <= tol (absolute mode)
    or |lambda_{k+1} - lambda_k| / lambda_{k+1} <= tol (relative mode), the
    iteration cap is hit, or an update underflows or turns nonfinite (the
    trace then carries terminated = "nonfinite" and the last solved iterate).
    """
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise DomainError("b must be finite")
    root_n = math.sqrt(instance.n)
    exponent = 2.0 * cfg.alpha / (cfg.alpha + 1.0)

    trace = AdaptiveTrace()
    lam = initial_lambda(cfg.alpha, instance.n)
    sol = solver(lam)
    trace.lambdas.append(lam)
    trace.residuals.append(sol.residual_b / root_n)
    trace.w_norms.append(sol.w_norm / root_n)
    trace.final = sol

    for _ in range(cfg.max_iters):
        r_scaled = trace.residuals[-1]
        w_scaled = trace.w_norms[-1]
        if w_scaled == 0.0:
            raise DegenerateSolution(
                f"iterate at lambda = {lam:.6e} has zero W-norm; the update is undefined"
            )
        base = cfg.constant_c * r_scaled / (root_n * w_scaled)
        lam_next = base**exponent
        if not math.isfinite(lam_next) or lam_next < _LAMBDA_FLOOR:
            trace.terminated = "nonfinite"
            return trace
        sol = solver(lam_next)
        trace.lambdas.append(lam_next)
        trace.residuals.append(sol.residual_b / root_n)
        trace.w_norms.append(sol.w_norm / root_n)
        trace.final = sol
        change = abs(lam_next - lam)
        converged = change <= cfg.tol if cfg.stop_mode == "absolute" else change / lam_next <= cfg.tol
        lam = lam_next
        if converged:
            trace.terminated = "converged"
            return trace
    trace.terminated = "max_iters"
    return trace
