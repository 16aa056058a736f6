"""Conjugate-gradient solver shared by projection, Poisson, and smoothing."""

from __future__ import annotations

import numpy as np

from .errors import SolverDivergence

__all__ = ["solve_spsd"]


def solve_spsd(system, rhs, tol: float = 1e-10, max_iter: int | None = None,
               atol: float = 0.0) -> np.ndarray:
    """Solve ``system @ x = rhs`` for symmetric positive-semidefinite systems.

    Plain conjugate gradients from a zero initial guess with a fixed
    iteration order, so repeated calls are bit-identical.  Convergence is
    declared when ``||rhs - system @ x||_2 <= max(tol * ||rhs||_2, atol)``.
    Singular systems are fine as long as ``rhs`` lies in the range of
    ``system``; the returned iterate then carries an arbitrary gauge which
    callers pin themselves.

    Raises SolverDivergence when the budget (default ``10 * n``) is
    exhausted; the exception carries the best iterate and residual.
    """
    b = np.asarray(rhs, dtype=float).ravel()
    n = b.size
    if max_iter is None:
        max_iter = 10 * n
    x = np.zeros(n)
    r = b.copy()
    bnorm = float(np.linalg.norm(b))
    limit = max(tol * bnorm, atol)
    rnorm = bnorm
    if rnorm <= limit:
        return x
    p = r.copy()
    rr = float(r @ r)
    best_x = x.copy()
    best_rnorm = rnorm
    for k in range(int(max_iter)):
        ap = system @ p
        pap = float(p @ ap)
        if pap <= 0.0:
            # Round-off ate the curvature along p; no further progress.
            break
        alpha = rr / pap
        x = x + alpha * p
        if (k + 1) % 50 == 0:
            r = b - system @ x   # periodic refresh against recursion drift
        else:
            r = r - alpha * ap
        rr_new = float(r @ r)
        rnorm = np.sqrt(rr_new)
        if rnorm < best_rnorm:
            best_rnorm = rnorm
            best_x = x.copy()
        if rnorm <= limit:
            return x
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise SolverDivergence(
        "conjugate gradients stopped at residual %.3e (target %.3e, n=%d)"
        % (best_rnorm, limit, n), x=best_x, residual=best_rnorm)
