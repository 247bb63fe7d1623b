"""Binomial bases for the ridge path and the interval-wise path solvers.

With a fixed step ``tau`` and ``x_0 = 0``, k steps of gradient descent or of
the sketched Newton iteration

    x_{t+1} = x_t - tau P (A^T (A x_t - b) + lam x_t)

produce an iterate that is a degree-(k-1) polynomial in ``lam``. Its
coefficient vectors do not depend on ``lam``, so once they are built, every
point of the path costs k axpy updates of length d.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from . import preconditioner as pc
from .errors import DimensionError, NumericalFailure
from .matrix import _tick, apply_transpose, gram_apply, thin_svd, to_dense
from .results import assemble, losses  # noqa: F401  (re-exported)
from .sketch import SketchSpec, sketch_apply
from .spectrum import (
    IDENTITY_RHO,
    PathConfig,
    RhoBounds,
    estimate_rho_many,
    interval_split,
    iteration_budget,
    tune_interval,
)

log = logging.getLogger(__name__)

GD_K_LIMIT = 60


@dataclass(frozen=True)
class BinomialBasis:
    """Coefficient vectors of ``x_k(lam)``; ``vectors[j]`` multiplies ``(c lam)^j``.

    ``c`` is ``tau`` for the sketched flavor and ``-tau`` for plain GD.
    ``vectors`` has shape ``(k, d)`` or ``(k, d, K)``.
    """

    vectors: np.ndarray
    tau: float
    flavor: str
    interval: tuple = (None, None)

    @property
    def k(self):
        return self.vectors.shape[0]


def _check_rhs(A, b):
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != A.shape[0]:
        raise DimensionError(f"right-hand side has {b.shape[0]} rows, A has {A.shape[0]}")
    return b


def _linear_term(A, b):
    """``A^T b``, column by column for matrix ``b`` so each column rounds
    exactly as the vector product does."""
    if b.ndim == 1:
        return apply_transpose(A, b)
    return np.stack([apply_transpose(A, b[:, col]) for col in range(b.shape[1])], axis=1)


def gd_basis(A, b, tau, k, interval=(None, None)):
    """Basis ``u_j = sum_i C(i+j, j) (I - tau A^T A)^i A^T b`` for j < k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > GD_K_LIMIT:
        raise NumericalFailure(f"k={k} > {GD_K_LIMIT}: binomial weights exceed double precision")
    b = _check_rhs(A, b)
    w = apply_transpose(A, b)
    powers = [w]
    for _ in range(k - 1):
        w = w - tau * gram_apply(A, w)
        powers.append(w)
    W = np.stack(powers)  # (k, d[, K])
    coef = np.zeros((k, k))
    for j in range(k):
        for i in range(k - j):
            coef[j, i] = math.comb(i + j, j)
    U = np.tensordot(coef, W, axes=(1, 0))
    return BinomialBasis(U, float(tau), "gd", tuple(interval))


def _lockstep_bases(A, c, Ps, taus, ks):
    """Build several sketched bases for one right-hand side in lockstep.

    Generation i holds ``u_{i,0..i}``; every column of a new generation reads
    only the previous generation, which is exactly what the descending
    in-place loop over j achieves. All active columns of all bases go
    through ``A^T A`` as one block per generation, so A is streamed
    ``max(ks)`` times in total. Returns one ``(k, d)`` array per basis.
    """
    d = c.shape[0]
    U = [P.apply(c)[:, None] for P in Ps]
    totals = [np.zeros((d, k)) for k in ks]
    for t, u in zip(totals, U):
        t[:, 0] = u[:, 0]
    for i in range(1, max(ks)):
        active = [l for l, k in enumerate(ks) if k > i]
        G = gram_apply(A, np.hstack([U[l] for l in active]))
        for pos, l in enumerate(active):
            rhs = np.zeros((d, i + 1))
            rhs[:, :i] = taus[l] * G[:, pos * i : (pos + 1) * i]
            rhs[:, 1:] += U[l]
            u_new = -Ps[l].apply(rhs)
            u_new[:, :i] += U[l]
            U[l] = u_new
            totals[l][:, : i + 1] += u_new
    return [np.ascontiguousarray(t.T) for t in totals]


def _bases_for_rhs(A, c, Ps, taus, ks):
    """Per-basis coefficient arrays; matrix ``c`` is handled column by column
    so every column is bit-identical to the corresponding vector run.
    Overflow is left to the callers' finiteness checks."""
    with np.errstate(over="ignore", invalid="ignore"):
        if c.ndim == 1:
            return _lockstep_bases(A, c, Ps, taus, ks)
        per_col = [_lockstep_bases(A, c[:, col], Ps, taus, ks) for col in range(c.shape[1])]
    return [np.stack([cols[l] for cols in per_col], axis=-1) for l in range(len(Ps))]


def _ihs_basis_from_rhs(A, c, P, tau, k, interval):
    if k < 1:
        raise ValueError("k must be >= 1")
    (vecs,) = _bases_for_rhs(A, c, [P], [tau], [k])
    if not np.all(np.isfinite(vecs)):
        raise NumericalFailure("non-finite basis entry; step size outside the stable range")
    return BinomialBasis(vecs, float(tau), "ihs", tuple(interval))


def ihs_basis(A, b, P, tau, k, interval=(None, None)):
    """Basis vectors of the sketched iteration with preconditioner ``P``.

    ``u_{0,0} = P A^T b``;
    ``u_{i+1,j} = (I - tau P A^T A) u_{i,j} - P u_{i,j-1}`` (missing terms zero);
    returns ``u~_j = sum_i u_{i,j}``.
    """
    b = _check_rhs(A, b)
    return _ihs_basis_from_rhs(A, _linear_term(A, b), P, tau, k, interval)


def ihs_basis_matrix(A, B, P, tau, k, interval=(None, None)):
    """Matrix right-hand side ``B`` (n x K); vectors have shape ``(k, d, K)``."""
    B = _check_rhs(A, B)
    if B.ndim != 2:
        raise DimensionError("B must be an n x K matrix")
    return ihs_basis(A, B, P, tau, k, interval)


def compose(basis, lam):
    """Evaluate the basis polynomial at ``lam`` by Horner's rule (k axpys)."""
    c = basis.tau * lam if basis.flavor == "ihs" else -basis.tau * lam
    vecs = basis.vectors
    x = np.zeros(vecs.shape[1:])
    for j in range(basis.k - 1, -1, -1):
        x = vecs[j] + c * x
    _tick("axpy", basis.k)
    return basis.tau * x


def gd_compose(basis, lam):
    if basis.flavor != "gd":
        raise ValueError("gd_compose needs a GD basis")
    return compose(basis, lam)


def ihs_compose(basis, lam):
    if basis.flavor != "ihs":
        raise ValueError("ihs_compose needs an IHS basis")
    return compose(basis, lam)


def _assign(lambdas, intervals):
    """Index of the interval owning each grid point (boundaries go left)."""
    his = np.array([hi for _, hi in intervals])
    idx = np.searchsorted(his, lambdas, side="left")
    return np.minimum(idx, len(intervals) - 1)


def _as_rho(rho):
    if rho is None or (isinstance(rho, str) and rho == "auto"):
        return "auto"
    if isinstance(rho, RhoBounds):
        return rho
    raise TypeError("rho must be RhoBounds or 'auto'")


def _diverged(vecs, tau, interval):
    """Non-finite coefficients, or a polynomial whose norm bound overflows on the interval."""
    if not np.all(np.isfinite(vecs)):
        return True
    with np.errstate(over="ignore", invalid="ignore"):
        norms = np.linalg.norm(vecs.reshape(vecs.shape[0], -1), axis=1)
        bound = np.polyval(norms[::-1], tau * max(interval))
    return not np.isfinite(tau * bound)


def _ihs_core(op, c, config, spec, rho, sigma_d, lift=None, seed=0):
    """Shared IHS-BIN driver over the operator ``op`` with linear term ``c``.

    Returns solutions (T, d[, K]), per-lambda times, setup time and info.
    """
    rho = _as_rho(rho)
    lams = config.lambdas
    t0 = time.perf_counter()
    SA = sketch_apply(spec, op)
    P0 = pc.build(SA, math.sqrt(config.lambda_min * config.lambda_max))
    intervals = interval_split(config.lambda_min, config.lambda_max, config.num_intervals)
    owner = _assign(lams, intervals)
    used = [i for i in range(len(intervals)) if np.any(owner == i)]

    # one SVD of SA, re-shifted to each interval's lambda0
    lam0s = [tune_interval(*intervals[i], IDENTITY_RHO, sigma_d).lambda0 for i in used]
    probes = [P0.reshift(l0) for l0 in lam0s]
    if rho == "auto":
        rhos = estimate_rho_many(op, probes, seed=seed)
    else:
        rhos = [rho] * len(used)
    params = [tune_interval(*intervals[i], r, sigma_d, config.epsilon) for i, r in zip(used, rhos)]
    taus = [p.alpha for p in params]
    ks = [p.k for p in params]
    vecs = _bases_for_rhs(op, c, probes, taus, ks)
    bases = {}
    for pos, i in enumerate(used):
        v, tau = vecs[pos], taus[pos]
        if _diverged(v, tau, intervals[i]):
            tau = tau / 2
            log.warning("interval [%g, %g] diverged; retrying with tau=%g", *intervals[i], tau)
            (v,) = _bases_for_rhs(op, c, [probes[pos]], [tau], [ks[pos]])
            if _diverged(v, tau, intervals[i]):
                raise NumericalFailure(f"interval [{intervals[i][0]:g}, {intervals[i][1]:g}] failed after halving tau")
            taus[pos] = tau
        if lift is not None:
            v = lift(v)
        bases[i] = BinomialBasis(v, float(tau), "ihs", intervals[i])
    setup = time.perf_counter() - t0

    info = {"sketch": spec, "intervals": []}
    for pos, i in enumerate(used):
        p, r = params[pos], rhos[pos]
        info["intervals"].append(
            {"interval": intervals[i], "lambda0": p.lambda0, "tau": taus[pos], "k": p.k,
             "kappa": p.kappa, "contraction": p.contraction, "rho1": r.rho1, "rho2": r.rho2}
        )
    info["bases"] = bases

    sols = [None] * len(lams)
    times = np.zeros(len(lams))
    for i, lam in enumerate(lams):
        t1 = time.perf_counter()
        sols[i] = compose(bases[owner[i]], lam)
        times[i] = time.perf_counter() - t1
    return np.stack(sols), times, setup, info


def ihs_bin_path(A, b, config, spec, rho="auto", sigma_d=None, A_test=None, b_test=None, seed=0):
    """Ridge path by the sketched binomial basis, one basis per interval.

    ``b`` may be a vector or an ``n x K`` matrix (matrix-valued ridge).
    ``rho="auto"`` estimates the eigenvalue bounds of each interval's
    sketched Hessian by Lanczos instead of taking them from theory.
    """
    b = _check_rhs(A, b)
    if spec.n != A.shape[0]:
        raise DimensionError(f"sketch spec has n={spec.n}, A has {A.shape[0]} rows")
    sols, times, setup, info = _ihs_core(A, _linear_term(A, b), config, spec, rho, sigma_d, seed=seed)
    return assemble("ihs-bin", config.lambdas, sols, times, A, b, A_test, b_test, setup, info)


def ihs_bin_path_matrix(A, B, config, spec, rho="auto", sigma_d=None, A_test=None, B_test=None, seed=0):
    B = _check_rhs(A, B)
    if B.ndim != 2:
        raise DimensionError("B must be an n x K matrix")
    return ihs_bin_path(A, B, config, spec, rho, sigma_d, A_test, B_test, seed)


def _transpose(A):
    return A.T.tocsr() if sp.issparse(A) else np.ascontiguousarray(A.T)


def dual_path(A, b, config, spec, rho="auto", sigma_d=None, A_test=None, b_test=None, seed=0):
    """Ridge path through the n-dimensional dual ``(A A^T + lam I) z = b``.

    The sketch acts on ``A^T`` (``spec.n`` must equal ``A.shape[1]``); basis
    vectors are mapped back by ``v = A^T z`` before composition, so each
    path point still costs k axpys of length d.
    """
    b = _check_rhs(A, b)
    At = _transpose(A)
    if spec.n != At.shape[0]:
        raise DimensionError(f"dual sketch needs n={At.shape[0]}, spec has {spec.n}")

    def lift(vecs):
        if vecs.ndim == 2:
            return np.ascontiguousarray(apply_transpose(A, vecs.T).T)
        return np.stack([apply_transpose(A, v) for v in vecs])

    sols, times, setup, info = _ihs_core(At, b, config, spec, rho, sigma_d, lift=lift, seed=seed)
    info["route"] = "dual"
    return assemble("ihs-bin", config.lambdas, sols, times, A, b, A_test, b_test, setup, info)


def solve_path(A, b, config, spec_for, rho="auto", sigma_d=None, A_test=None, b_test=None, dual="auto", seed=0):
    """Pick the primal or dual route; ``spec_for(n_rows)`` builds the sketch spec."""
    use_dual = dual == "dual" or (dual == "auto" and A.shape[0] < A.shape[1])
    if use_dual:
        return dual_path(A, b, config, spec_for(A.shape[1]), rho, sigma_d, A_test, b_test, seed)
    return ihs_bin_path(A, b, config, spec_for(A.shape[0]), rho, sigma_d, A_test, b_test, seed)


def extreme_singular_values(A, exact_limit=2048):
    """``(sigma_max, sigma_min)``; sigma_min is 0 when not computed exactly."""
    if min(A.shape) <= exact_limit:
        s = thin_svd(to_dense(A)).sigma
        smin = s[-1] if A.shape[0] >= A.shape[1] else 0.0
        return float(s[0]), float(smin)
    v = np.ones(A.shape[1]) / math.sqrt(A.shape[1])
    est = 0.0
    for _ in range(100):
        w = gram_apply(A, v)
        est = float(np.linalg.norm(w))
        v = w / est
    return math.sqrt(est) * 1.01, 0.0


def gd_bin_path(A, b, config, A_test=None, b_test=None, k=None, max_iter=2000):
    """Plain-GD binomial path over the whole lambda range.

    ``tau = 2/(L + mu)`` with ``L = sigma_max^2 + lambda_max`` and
    ``mu = sigma_min^2 + lambda_min``. When the required k exceeds what the
    binomial weights tolerate, falls back to k plain GD steps per lambda
    (capped at ``max_iter``).
    """
    b = _check_rhs(A, b)
    t0 = time.perf_counter()
    smax, smin = extreme_singular_values(A)
    L = smax**2 + config.lambda_max
    mu = smin**2 + config.lambda_min
    tau = 2.0 / (L + mu)
    if k is None:
        k = iteration_budget(((L - mu) / (L + mu)) ** 2, config.epsilon, k_cap=10**9)
    info = {"tau": tau, "k": k, "degraded": k > GD_K_LIMIT}
    lams = config.lambdas
    times = np.zeros(len(lams))
    if k <= GD_K_LIMIT:
        basis = gd_basis(A, b, tau, k, (config.lambda_min, config.lambda_max))
        setup = time.perf_counter() - t0
        sols = []
        for i, lam in enumerate(lams):
            t1 = time.perf_counter()
            sols.append(compose(basis, lam))
            times[i] = time.perf_counter() - t1
    else:
        steps = min(k, max_iter)
        if steps < k:
            log.warning("gd-bin needs k=%d; running %d plain GD steps per lambda", k, steps)
        info["steps"] = steps
        setup = time.perf_counter() - t0
        c = apply_transpose(A, b)
        sols = []
        for i, lam in enumerate(lams):
            t1 = time.perf_counter()
            x = np.zeros(c.shape)
            for _ in range(steps):
                x = x - tau * (gram_apply(A, x) - c + lam * x)
            sols.append(x)
            times[i] = time.perf_counter() - t1
    return assemble("gd-bin", lams, sols, times, A, b, A_test, b_test, setup, info)
