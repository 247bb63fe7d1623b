"""Reference ridge path solvers: SVD, per-lambda direct solve, warm CG, warm IHS."""

from __future__ import annotations

import logging
import time

import numpy as np

from . import preconditioner as pc
from .errors import NumericalFailure
from .matrix import apply_transpose, gram_apply, thin_svd, to_dense
from .results import assemble
from .sketch import sketch_apply
from .spectrum import RhoBounds, tune_interval

log = logging.getLogger(__name__)


def _rhs(A, b):
    b = np.asarray(b, dtype=np.float64)
    return b, apply_transpose(A, b)


def svd_path(A, b, config, A_test=None, b_test=None):
    """``x(lam) = V (S^2 + lam)^-1 S U^T b`` from one thin SVD of A."""
    b = np.asarray(b, dtype=np.float64)
    t0 = time.perf_counter()
    f = thin_svd(to_dense(A))
    Utb = f.U.T @ b
    setup = time.perf_counter() - t0
    sols, times = [], np.zeros(len(config.lambdas))
    for i, lam in enumerate(config.lambdas):
        t1 = time.perf_counter()
        w = f.sigma / (f.sigma**2 + lam)
        scaled = w[:, None] * Utb if Utb.ndim == 2 else w * Utb
        sols.append(f.Vt.T @ scaled)
        times[i] = time.perf_counter() - t1
    return assemble("svd", config.lambdas, sols, times, A, b, A_test, b_test, setup)


def direct_path(A, b, config, A_test=None, b_test=None):
    """Form ``A^T A`` once, then NumPy's dense LU solve per lambda."""
    b, c = _rhs(A, b)
    t0 = time.perf_counter()
    G = to_dense(A.T @ A)
    setup = time.perf_counter() - t0
    d = G.shape[0]
    sols, times = [], np.zeros(len(config.lambdas))
    for i, lam in enumerate(config.lambdas):
        t1 = time.perf_counter()
        H = G + lam * np.eye(d)
        sols.append(np.linalg.solve(H, c))
        times[i] = time.perf_counter() - t1
    return assemble("direct", config.lambdas, sols, times, A, b, A_test, b_test, setup)


def _cg(A, c, lam, x, tol, max_iter):
    """CG on ``(A^T A + lam I) x = c`` from ``x``; returns (x, iterations)."""
    r = c - gram_apply(A, x) - lam * x
    bnorm = np.linalg.norm(c)
    if bnorm == 0:
        return np.zeros_like(c), 0
    p = r.copy()
    rr = float(r @ r)
    for it in range(max_iter + 1):
        if np.sqrt(rr) <= tol * bnorm:
            return x, it
        if it == max_iter:
            break
        q = gram_apply(A, p) + lam * p
        step = rr / float(p @ q)
        x = x + step * p
        r = r - step * q
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise NumericalFailure(f"CG hit the iteration cap {max_iter} at lambda={lam:g}")


def _sweep(lams):
    """Grid indices in decreasing-lambda order."""
    return np.argsort(-np.asarray(lams), kind="stable")


def warm_cg_path(A, b, config, A_test=None, b_test=None, x0=None):
    """CG on the normal equations, largest lambda first, each solve warm
    started from the previous solution. Vector right-hand sides only."""
    b, c = _rhs(A, b)
    d = c.shape[0]
    lams = config.lambdas
    sols = [None] * len(lams)
    iters = np.zeros(len(lams), dtype=int)
    times = np.zeros(len(lams))
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    for i in _sweep(lams):
        t1 = time.perf_counter()
        x, iters[i] = _cg(A, c, lams[i], x, config.epsilon, 10 * d)
        times[i] = time.perf_counter() - t1
        sols[i] = x
    return assemble("cg", lams, sols, times, A, b, A_test, b_test, 0.0, {"iterations": iters})


def warm_ihs_path(A, b, config, spec, rho, A_test=None, b_test=None, x0=None, max_iter=500):
    """Per-lambda IHS with ``lam0 = lam``, warm started along a decreasing sweep.

    The sketch is factored once and re-shifted for every lambda. A solve
    stops once the gradient norm is below ``epsilon`` times ``||A^T b||``.
    """
    if not isinstance(rho, RhoBounds):
        raise TypeError("warm_ihs_path needs explicit RhoBounds")
    b, c = _rhs(A, b)
    lams = config.lambdas
    t0 = time.perf_counter()
    P0 = pc.build(sketch_apply(spec, A), float(lams[0]))
    setup = time.perf_counter() - t0
    cnorm = np.linalg.norm(c)
    sols = [None] * len(lams)
    iters = np.zeros(len(lams), dtype=int)
    times = np.zeros(len(lams))
    x = np.zeros(c.shape) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    for i in _sweep(lams):
        lam = float(lams[i])
        t1 = time.perf_counter()
        P = P0.reshift(lam)
        tau = tune_interval(lam, lam, rho).alpha
        x, iters[i] = _ihs_solve(A, c, lam, P, tau, x, config.epsilon * cnorm, max_iter)
        times[i] = time.perf_counter() - t1
        sols[i] = x
    return assemble("ihs", lams, sols, times, A, b, A_test, b_test, setup, {"iterations": iters})


def _ihs_solve(A, c, lam, P, tau, x, tol, max_iter):
    for attempt in range(2):
        y = x
        g0 = None
        for it in range(max_iter + 1):
            g = gram_apply(A, y) + lam * y - c
            gnorm = np.linalg.norm(g)
            g0 = gnorm if g0 is None else g0
            if not np.isfinite(gnorm) or gnorm > 1e8 * max(g0, tol):
                break
            if gnorm <= tol:
                return y, it
            if it == max_iter:
                raise NumericalFailure(f"IHS hit the iteration cap {max_iter} at lambda={lam:g}")
            y = y - tau * P.apply(g)
        if attempt == 0:
            tau /= 2
            log.warning("IHS diverged at lambda=%g; retrying with tau=%g", lam, tau)
    raise NumericalFailure(f"IHS diverged at lambda={lam:g} after halving tau")
