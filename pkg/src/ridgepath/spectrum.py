"""Tuning math: effective dimension, eigenvalue bounds, step sizes, intervals.

The sketched Hessian ``A^T S^T S A + lam0 I`` approximates ``A^T A + lam0 I``;
the relative eigenvalues of the two lie in ``[rho2, rho1]`` whenever the
sketch is a good subspace embedding. Everything downstream (shift, step
size, iteration budget) is a function of those two numbers and the
interval ``[lambda_lo, lambda_hi]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .matrix import gram_apply, make_rng

K_FLOOR = 2
K_CAP = 64


@dataclass(frozen=True)
class PathConfig:
    lambda_min: float
    lambda_max: float
    lambdas: np.ndarray
    epsilon: float = 1e-6
    num_intervals: Union[int, str] = "auto"

    def __post_init__(self):
        lams = np.asarray(self.lambdas, dtype=np.float64)
        object.__setattr__(self, "lambdas", lams)
        if not (0 < self.lambda_min <= self.lambda_max):
            raise ValueError("need 0 < lambda_min <= lambda_max")
        if lams.ndim != 1 or lams.size == 0:
            raise ValueError("lambda grid must be a non-empty 1-D sequence")
        if np.any(np.diff(lams) < 0):
            raise ValueError("lambda grid must be sorted ascending")
        tol = 1e-12 * self.lambda_max
        if lams[0] < self.lambda_min - tol or lams[-1] > self.lambda_max + tol:
            raise ValueError("lambda grid leaves [lambda_min, lambda_max]")
        if not (0 < self.epsilon < 1):
            raise ValueError("epsilon must lie in (0, 1)")
        if self.num_intervals != "auto" and int(self.num_intervals) < 1:
            raise ValueError("num_intervals must be positive or 'auto'")

    @classmethod
    def grid(cls, lambda_min, lambda_max, num, spacing="log", **kw):
        if spacing == "log":
            lams = np.geomspace(lambda_min, lambda_max, num)
        elif spacing == "linear":
            lams = np.linspace(lambda_min, lambda_max, num)
        else:
            raise ValueError(f"unknown grid spacing {spacing!r}")
        lams[0], lams[-1] = lambda_min, lambda_max
        return cls(lambda_min, lambda_max, lams, **kw)


@dataclass(frozen=True)
class RhoBounds:
    """Bounds ``rho2 <= eig <= rho1`` on the sketched/exact Hessian ratio.

    ``source`` names where the numbers came from. The optional fields carry
    what the matching embedding result recommends alongside the bounds.
    """

    rho1: float
    rho2: float
    source: str = "manual"
    probability: Optional[float] = None
    min_sketch_dim: Optional[int] = None
    sparsity: Optional[int] = None

    def __post_init__(self):
        if not (self.rho2 > 0 and self.rho1 >= self.rho2):
            raise ValueError(f"need 0 < rho2 <= rho1, got rho1={self.rho1}, rho2={self.rho2}")


IDENTITY_RHO = RhoBounds(1.0, 1.0, "identity")


@dataclass(frozen=True)
class RateParams:
    lambda0: float
    alpha: float
    kappa: float
    contraction: float
    k: int
    interval: tuple = field(default=(None, None))


def effective_dimension(sigma, lambda0):
    """``||D||_F^2 / ||D||_2^2`` with ``D = diag(sigma_i / sqrt(sigma_i^2 + lambda0))``."""
    s2 = np.asarray(sigma, dtype=np.float64) ** 2
    if s2.size == 0 or np.any(s2 < 0) or not np.any(s2 > 0):
        raise ValueError("effective_dimension needs at least one positive singular value")
    if lambda0 < 0:
        raise ValueError("lambda0 must be non-negative")
    dsq = s2 / (s2 + lambda0)
    return float(dsq.sum() / dsq.max())


def dnorm_squared(sigma, lambda0):
    """``||D||_2^2 = sigma_1^2 / (sigma_1^2 + lambda0)``."""
    s1 = float(np.max(sigma)) ** 2
    return s1 / (s1 + lambda0)


def rho_gaussian(rho, eta, dnorm_sq, m=None):
    """Eigenvalue bounds for a Gaussian sketch with ``m >= d_e / rho``.

    ``probability`` is ``1 - 16 exp(-eta^2 rho m / 2)`` when ``m`` is given.
    """
    if not (0 < rho < 1):
        raise ValueError("rho must lie in (0, 1)")
    if not (0 < eta < (1 - math.sqrt(rho)) ** 2 / 4):
        raise ValueError("eta outside (0, (1 - sqrt(rho))^2 / 4)")
    if not (0 < dnorm_sq <= 1):
        raise ValueError("||D||^2 must lie in (0, 1]")
    c = ((1 + math.sqrt(eta)) / (1 - math.sqrt(eta))) ** 2
    r1 = 1 - dnorm_sq + dnorm_sq * (1 + math.sqrt(rho)) ** 2 * (1 + math.sqrt(eta)) ** 2
    r2 = 1 - dnorm_sq + dnorm_sq * (1 - math.sqrt(c * rho)) ** 2
    prob = None if m is None else 1 - 16 * math.exp(-(eta**2) * rho * m / 2)
    return RhoBounds(r1, r2, "gaussian", probability=prob)


def srht_constant(n, d_e):
    return 16 / 3 * (1 + math.sqrt(8 * math.log(d_e * n) / d_e)) ** 2


def rho_srht(rho, dnorm_sq, n=None, d_e=None):
    """SRHT bounds ``1 +- ||D||^2 rho``; recommends ``m >= C d_e log(d_e) / rho``."""
    if not (0 < rho < 1):
        raise ValueError("rho must lie in (0, 1)")
    if dnorm_sq * rho >= 1:
        raise ValueError("||D||^2 rho >= 1 leaves no positive lower bound")
    m_min = None
    if n is not None and d_e is not None:
        m_min = math.ceil(srht_constant(n, d_e) * d_e * math.log(d_e) / rho)
    return RhoBounds(1 + dnorm_sq * rho, 1 - dnorm_sq * rho, "srht", min_sketch_dim=m_min)


def rho_sjlt(eps, alpha=None, delta=None, d_e=None):
    """SJLT bounds ``1 +- eps``.

    With ``alpha, delta, d_e`` also returns the sparsity and sketch size from
    the embedding result, all implied constants set to one.
    """
    if not (0 < eps < 0.5):
        raise ValueError("eps must lie in (0, 1/2)")
    m_min = s_min = None
    if None not in (alpha, delta, d_e):
        if alpha <= 2 or not (0 < delta < 0.5):
            raise ValueError("need alpha > 2 and 0 < delta < 1/2")
        log_term = math.log(d_e / delta) / math.log(alpha)
        s_min = math.ceil(log_term / eps)
        m_min = math.ceil(alpha * d_e * log_term / eps**2)
    return RhoBounds(1 + eps, 1 - eps, "sjlt", min_sketch_dim=m_min, sparsity=s_min)


def iteration_budget(contraction, eps, k_floor=K_FLOOR, k_cap=K_CAP):
    """Smallest k with ``sqrt(contraction)^k <= eps``, clipped to [k_floor, k_cap]."""
    rate = math.sqrt(contraction)
    if rate <= 0:
        k = 0
    elif rate >= 1:
        k = k_cap
    else:
        k = math.ceil(math.log(1 / eps) / math.log(1 / rate) - 1e-12)
    return int(min(max(k, k_floor), k_cap))


def tune_interval(lambda_lo, lambda_hi, rho, sigma_d=None, eps=1e-6, k_floor=K_FLOOR, k_cap=K_CAP):
    """Shift, step size and iteration budget for one lambda interval.

    The step balances the two extreme residuals so that
    ``|1 - alpha hi'/(lam0' rho2)| == |1 - alpha lo'/(lam0' rho1)|`` where
    primes denote the optional shift by ``sigma_d**2``.
    """
    if not (0 < lambda_lo <= lambda_hi):
        raise ValueError("need 0 < lambda_lo <= lambda_hi")
    if sigma_d is not None and sigma_d < 0:
        raise ValueError("sigma_d must be non-negative")
    shift = 0.0 if sigma_d is None else float(sigma_d) ** 2
    lo, hi = lambda_lo + shift, lambda_hi + shift
    lam0_shifted = math.sqrt(lo * hi)
    lambda0 = lam0_shifted - shift
    alpha = 2 * lam0_shifted / (lo / rho.rho1 + hi / rho.rho2)
    kappa = rho.rho1 * hi / (rho.rho2 * lo)
    contraction = ((kappa - 1) / (kappa + 1)) ** 2
    k = iteration_budget(contraction, eps, k_floor, k_cap)
    return RateParams(lambda0, alpha, kappa, contraction, k, (lambda_lo, lambda_hi))


def balanced_residuals(params, rho, sigma_d=None):
    """The two extreme residuals that ``tune_interval`` equalizes."""
    shift = 0.0 if sigma_d is None else float(sigma_d) ** 2
    lo, hi = params.interval
    lam0 = params.lambda0 + shift
    return (
        abs(1 - params.alpha * (hi + shift) / lam0 / rho.rho2),
        abs(1 - params.alpha * (lo + shift) / lam0 / rho.rho1),
    )


def auto_interval_count(lambda_min, lambda_max):
    return max(1, int(math.floor(2 * math.log(lambda_max / lambda_min))))


def interval_split(lambda_min, lambda_max, L="auto") -> Sequence[tuple]:
    """Split ``[lambda_min, lambda_max]`` into L geometric pieces."""
    if not (0 < lambda_min <= lambda_max):
        raise ValueError("need 0 < lambda_min <= lambda_max")
    L = auto_interval_count(lambda_min, lambda_max) if L == "auto" else int(L)
    if L < 1:
        raise ValueError("interval count must be positive")
    beta = lambda_max / lambda_min
    ends = [lambda_min * beta ** (i / L) for i in range(L + 1)]
    ends[0], ends[-1] = lambda_min, lambda_max
    return list(zip(ends[:-1], ends[1:]))


def estimate_rho(A, precond, steps=10, margin=0.05, seed=0):
    """Empirical ``RhoBounds`` from Lanczos on the pencil (H, H_S).

    ``H = A^T A + lam0 I`` and ``H_S`` is the sketched Hessian held by
    ``precond``. The extreme generalized eigenvalues of ``H_S^{-1} H`` are
    ``1/gamma``; Ritz values sit inside the spectrum, so the bounds are
    widened by ``margin`` on each side.
    """
    return estimate_rho_many(A, [precond], steps, margin, seed)[0]


def estimate_rho_many(A, preconds, steps=10, margin=0.05, seed=0):
    """``estimate_rho`` for several shifts at once, sharing each pass over A."""
    d = preconds[0].d
    L = len(preconds)
    steps = int(min(steps, d))
    start = make_rng(seed).standard_normal(d)

    V = [[] for _ in range(L)]  # H_S-orthonormal Lanczos vectors
    HSV = [[] for _ in range(L)]  # H_S times each of them
    alphas = [[] for _ in range(L)]
    betas = [[] for _ in range(L)]
    live = list(range(L))
    for l, P in enumerate(preconds):
        hs = P.sketched_hessian_apply(start)
        scale = math.sqrt(start @ hs)
        V[l].append(start / scale)
        HSV[l].append(hs / scale)
    for j in range(steps):
        if not live:
            break
        block = np.column_stack([V[l][j] for l in live])
        G = gram_apply(A, block)
        still = []
        for col, l in enumerate(live):
            P = preconds[l]
            v = V[l][j]
            Hv = G[:, col] + P.lambda0 * v
            alphas[l].append(float(v @ Hv))
            w = P.apply(Hv)
            Q = np.column_stack(V[l])
            HQ = np.column_stack(HSV[l])
            for _ in range(2):  # full re-orthogonalization, H_S inner product
                w = w - Q @ (HQ.T @ w)
            hs = P.sketched_hessian_apply(w)
            beta = math.sqrt(max(float(w @ hs), 0.0))
            if j == steps - 1 or beta <= 1e-10 * max(abs(alphas[l][-1]), 1e-300):
                continue
            betas[l].append(beta)
            V[l].append(w / beta)
            HSV[l].append(hs / beta)
            still.append(l)
        live = still
    out = []
    for l in range(L):
        a, b = alphas[l], betas[l][: len(alphas[l]) - 1]
        theta = np.linalg.eigvalsh(np.diag(a) + np.diag(b, 1) + np.diag(b, -1))
        theta = theta[theta > 0]
        gamma_max, gamma_min = 1 / theta.min(), 1 / theta.max()
        out.append(RhoBounds(gamma_max * (1 + margin), gamma_min / (1 + margin), "estimated"))
    return out
