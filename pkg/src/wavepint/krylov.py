"""Preconditioned MINRES (Paige and Saunders) with residual bookkeeping.

The Lanczos recurrence runs in the ``P^{-1}`` inner product, so only
``P^{-1} v`` is ever needed. The stopping test uses the ``P^{-1}``-norm
residual ``||r_k||_{P^{-1}} = sqrt(r_k^T P^{-1} r_k)`` that the recurrence
produces for free.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

BREAKDOWN_TOL = 1e-14


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    residual_history: list[float] = field(repr=False)
    final_relative_residual: float
    true_relative_residual: float
    wall_time: float
    breakdown: bool = False
    method: str = "none"

    @property
    def relative_history(self) -> np.ndarray:
        h = np.asarray(self.residual_history)
        return h / h[0] if h.size and h[0] > 0 else h


def _as_apply(op):
    if hasattr(op, "apply"):
        return op.apply
    if callable(op):
        return op
    raise TypeError(f"{type(op).__name__} is neither callable nor has .apply")


def _as_inverse(precond):
    if precond is None:
        return lambda v: v
    if hasattr(precond, "apply_inverse"):
        return precond.apply_inverse
    if callable(precond):
        return precond
    raise TypeError(f"{type(precond).__name__} has no apply_inverse")


def _check_finite(value: float, what: str, itn: int) -> None:
    if not math.isfinite(value):
        raise FloatingPointError(f"MINRES: {what} became {value} at iteration {itn}")


def minres(op, precond, b: np.ndarray, tol: float = 1e-10, maxit: int = 200):
    """Solve ``A x = b`` from ``x0 = 0`` with an SPD preconditioner.

    Returns ``(x, SolveReport)``. ``residual_history[k]`` is
    ``||r_k||_{P^{-1}}`` with ``k = 0`` the initial residual.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if maxit < 0:
        raise ValueError(f"maxit must be nonnegative, got {maxit}")
    A = _as_apply(op)
    Minv = _as_inverse(precond)
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise FloatingPointError("MINRES: right-hand side is not finite")
    method = getattr(precond, "method", "none")

    start = time.perf_counter()
    x = np.zeros_like(b)
    bnorm = float(np.linalg.norm(b))

    r1 = b.copy()
    y = Minv(r1)
    beta1_sq = float(r1 @ y)
    if beta1_sq < 0:
        raise ValueError("preconditioner is not positive definite")
    beta1 = math.sqrt(beta1_sq)
    history = [beta1]
    if beta1 == 0.0:
        return x, SolveReport(0, True, history, 0.0, 0.0, time.perf_counter() - start, False, method)

    r2 = r1
    oldb, beta = 0.0, beta1
    dbar = epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = np.zeros_like(b)
    w2 = np.zeros_like(b)
    eps = np.finfo(float).eps

    converged = breakdown = False
    itn = 0
    while itn < maxit:
        itn += 1
        v = y / beta
        y = A(v)
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = float(v @ y)
        _check_finite(alfa, "alpha", itn)
        y = y - (alfa / beta) * r2
        r1, r2 = r2, y
        y = Minv(r2)
        oldb = beta
        beta_sq = float(r2 @ y)
        _check_finite(beta_sq, "beta", itn)
        if beta_sq < -eps * oldb ** 2:
            raise ValueError("preconditioner is not positive definite")
        beta = math.sqrt(max(beta_sq, 0.0))

        # apply the previous rotation, then build the next one
        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(math.hypot(gbar, beta), eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1, w2 = w2, w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        history.append(phibar)

        if phibar <= tol * beta1:
            converged = True
            break
        if beta <= BREAKDOWN_TOL * beta1:
            converged = breakdown = True
            break

    resid = b - A(x)
    true_rel = float(np.linalg.norm(resid)) / bnorm
    _check_finite(true_rel, "true residual", itn)
    report = SolveReport(
        iterations=itn,
        converged=converged,
        residual_history=history,
        final_relative_residual=phibar / beta1,
        true_relative_residual=true_rel,
        wall_time=time.perf_counter() - start,
        breakdown=breakdown,
        method=method,
    )
    return x, report


def minres_unpreconditioned(op, b: np.ndarray, tol: float = 1e-10, maxit: int = 200):
    """MINRES with ``P = I``; the stopping norm is then the 2-norm."""
    return minres(op, None, b, tol=tol, maxit=maxit)
