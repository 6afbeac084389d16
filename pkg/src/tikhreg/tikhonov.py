"""Weighted Tikhonov solvers and error functionals.

The minimizer of ||A x - b||^2 + lambda ||x||_W^2 is computed by two
independent routes: the normal equations (A^T A + lambda W) x = A^T b via a
Cholesky solve, and the spectral filter x = sum_k (b, A psi_k)/(lambda+rho_k)
psi_k over the retained generalized eigenpairs. The two agree to solver
precision and the test suite holds them against each other.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NonFiniteLambda
from .linalg import spd_solve, w_norm

__all__ = [
    "RegularizedSolution",
    "ErrorReport",
    "solve_direct",
    "solve_spectral",
    "error_report",
    "direct_solver",
    "spectral_solver",
]


@dataclass
class RegularizedSolution:
    lam: float
    x: np.ndarray
    residual_b: float                 # ||A x - b||
    w_norm: float                     # ||x||_W
    output_err: Optional[float] = None    # ||A x - A x*||
    b_err_sq: Optional[float] = None      # ||B (x - x*)||^2


@dataclass
class ErrorReport:
    rel_x: float
    rel_ax: float
    rel_res: float
    scaled_output: float              # n^{-1/2} ||A x - A x*||
    scaled_b: Optional[float] = None  # n^{-1/2} ||B (x - x*)||, needs a decomposition


def _check_lambda(lam):
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise NonFiniteLambda(f"lambda must be finite and positive, got {lam!r}")
    return lam


def _check_rhs(instance, b):
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (instance.n,):
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({instance.n},)")
    return b


def _regularized_matrix(gram, lam, w):
    m = gram + lam * w.matrix if not w.is_identity else gram.copy()
    if w.is_identity:
        m[np.diag_indices_from(m)] += lam
    return m


def solve_direct(instance, b, lam):
    """Solve the normal equations (A^T A + lambda W) x = A^T b."""
    lam = _check_lambda(lam)
    b = _check_rhs(instance, b)
    a = instance.a
    gram = a.T @ a
    x = spd_solve(_regularized_matrix(gram, lam, instance.w), a.T @ b)
    ax = a @ x
    return RegularizedSolution(
        lam=lam,
        x=x,
        residual_b=float(np.linalg.norm(ax - b)),
        w_norm=w_norm(x, instance.w),
        output_err=float(np.linalg.norm(ax - instance.y)),
    )


def solve_spectral(decomp, instance, b, lam):
    """Apply the spectral filter c_k = (b, A psi_k) / (lambda + rho_k)."""
    lam = _check_lambda(lam)
    b = _check_rhs(instance, b)
    if decomp.n != instance.n:
        raise DimensionMismatch(f"decomposition is for n = {decomp.n}, instance has n = {instance.n}")
    c = (decomp.a_psi.T @ b) / (lam + decomp.rho)
    x = decomp.psi @ c
    ax = decomp.a_psi @ c
    s = decomp.psi.T @ instance.w.apply(instance.x_star)
    b_err_sq = float(np.sum(np.sqrt(decomp.rho) * (c - s) ** 2))
    return RegularizedSolution(
        lam=lam,
        x=x,
        residual_b=float(np.linalg.norm(ax - b)),
        w_norm=w_norm(x, instance.w),
        output_err=float(np.linalg.norm(ax - instance.y)),
        b_err_sq=b_err_sq,
    )


def error_report(instance, decomp, sol, b):
    """All error functionals of a solution against the instance's truth."""
    b = _check_rhs(instance, b)
    x_err = float(np.linalg.norm(sol.x - instance.x_star))
    x_norm = float(np.linalg.norm(instance.x_star))
    if sol.output_err is not None:
        output_err = sol.output_err
    else:
        output_err = float(np.linalg.norm(instance.a @ sol.x - instance.y))
    y_norm = float(np.linalg.norm(instance.y))
    b_norm = float(np.linalg.norm(b))
    root_n = math.sqrt(instance.n)
    if sol.b_err_sq is not None:
        scaled_b = math.sqrt(max(sol.b_err_sq, 0.0)) / root_n
    elif decomp is not None:
        from .spectral import b_seminorm_sq

        scaled_b = math.sqrt(b_seminorm_sq(decomp, sol.x - instance.x_star, instance.w)) / root_n
    else:
        scaled_b = None
    return ErrorReport(
        rel_x=x_err / x_norm,
        rel_ax=output_err / y_norm,
        rel_res=sol.residual_b / b_norm,
        scaled_output=output_err / root_n,
        scaled_b=scaled_b,
    )


def direct_solver(instance, b):
    """Callable lam -> RegularizedSolution with A^T A and A^T b cached.

    Intended for the adaptive iteration, where the same (instance, b) is
    solved at a sequence of parameters.
    """
    b = _check_rhs(instance, b)
    a = instance.a
    gram = a.T @ a
    atb = a.T @ b

    def solve(lam):
        lam_ = _check_lambda(lam)
        x = spd_solve(_regularized_matrix(gram, lam_, instance.w), atb)
        ax = a @ x
        return RegularizedSolution(
            lam=lam_,
            x=x,
            residual_b=float(np.linalg.norm(ax - b)),
            w_norm=w_norm(x, instance.w),
            output_err=float(np.linalg.norm(ax - instance.y)),
        )

    return solve


def spectral_solver(decomp, instance, b):
    """Callable lam -> RegularizedSolution with the spectral projections cached."""
    b = _check_rhs(instance, b)
    d = decomp.a_psi.T @ b
    s = decomp.psi.T @ instance.w.apply(instance.x_star)
    sqrt_rho = np.sqrt(decomp.rho)

    def solve(lam):
        lam_ = _check_lambda(lam)
        c = d / (lam_ + decomp.rho)
        x = decomp.psi @ c
        ax = decomp.a_psi @ c
        return RegularizedSolution(
            lam=lam_,
            x=x,
            residual_b=float(np.linalg.norm(ax - b)),
            w_norm=w_norm(x, instance.w),
            output_err=float(np.linalg.norm(ax - instance.y)),
            b_err_sq=float(np.sum(sqrt_rho * (c - s) ** 2)),
        )

    return solve
