"""Pick a sketch size by running sketched Newton steps at the smallest lambda.

Each step moves along ``d = P grad f`` with an Armijo backtracking step.
When the Newton decrement ``delta = d . grad f`` stops shrinking fast
enough, the sketch is too coarse: m doubles and S is redrawn.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import preconditioner as pc
from .errors import NumericalFailure
from .matrix import apply, apply_transpose
from .sketch import sketch_apply

log = logging.getLogger(__name__)

ARMIJO_MAX_J = 50


@dataclass(frozen=True)
class AdaptiveConfig:
    gamma1: float = 0.5  # backtracking factor
    gamma2: float = 1e-4  # sufficient decrease
    gamma3: float = 0.9  # stall threshold on the decrement ratio
    epsilon: float = 1e-8
    m_initial: Optional[int] = None  # default max(16, d // 64)
    m_cap: Optional[int] = None  # default d
    max_iter: int = 200

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "gamma3"):
            g = getattr(self, name)
            if not 0 < g < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {g}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.m_initial is not None and self.m_initial < 1:
            raise ValueError("m_initial must be >= 1")
        if self.m_cap is not None and self.m_cap < 1:
            raise ValueError("m_cap must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def sizes(self, d):
        """Resolved ``(m_initial, m_cap)`` for dimension d."""
        cap = d if self.m_cap is None else min(self.m_cap, d)
        m0 = max(16, d // 64) if self.m_initial is None else self.m_initial
        return min(m0, cap), cap


@dataclass
class AdaptiveResult:
    m: int
    x: np.ndarray
    iterations: int
    doublings: int
    stalled_at_cap: bool = False
    trace: list = field(default_factory=list)  # (m, delta) after every step

    def __iter__(self):
        return iter((self.m, self.x))


def armijo_step(f, x, direction, grad, gamma1=0.5, gamma2=1e-4):
    """Largest ``gamma1**j`` with ``f(x - t d) <= f(x) - gamma2 t d.grad``."""
    slope = float(np.dot(direction, grad))
    if not slope > 0:
        raise ValueError("direction is not a descent direction for x - t d")
    fx = f(x)
    for j in range(ARMIJO_MAX_J + 1):
        t = gamma1**j
        if f(x - t * direction) <= fx - gamma2 * t * slope:
            return t
    raise NumericalFailure("Armijo search exhausted its backtracking budget")


def _objective(A, b, lam):
    def f(x):
        r = apply(A, x) - b
        return 0.5 * float(r @ r) + 0.5 * lam * float(x @ x)

    def grad(x):
        return apply_transpose(A, apply(A, x) - b) + lam * x

    return f, grad


def _aligned(m, spec):
    """Round m down to a size the sketch family accepts."""
    if spec.kind == "sjlt":
        m = max(spec.s, m - m % spec.s)
    return m


def adaptive_sketch_dim(A, b, lambda_min, config=None, spec_template=None, x0=None):
    """Run sketched Newton steps at ``lambda_min`` and grow m until the
    decrement contracts by at least ``gamma3`` per step.

    ``spec_template`` fixes the sketch family, ``n``, sparsity and seed; its
    ``m`` is ignored. The k-th redraw uses seed ``template.seed + k``.
    Identity sketches keep ``m = n`` throughout.
    """
    if not lambda_min > 0:
        raise ValueError("lambda_min must be positive")
    config = config or AdaptiveConfig()
    if spec_template is None:
        raise ValueError("a sketch template is required")
    b = np.asarray(b, dtype=np.float64)
    d = A.shape[1]
    f, grad = _objective(A, b, lambda_min)

    identity = spec_template.kind == "identity"
    if identity:
        m = m_cap = spec_template.n
    else:
        m, m_cap = config.sizes(d)
        m, m_cap = _aligned(m, spec_template), _aligned(m_cap, spec_template)
    doublings = 0

    def precond(m, redraw):
        spec = spec_template if identity else spec_template.with_m(m, seed=spec_template.seed + redraw)
        return pc.build(sketch_apply(spec, A), lambda_min)

    P = precond(m, 0)
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    g = grad(x)
    direction = P.apply(g)
    delta = float(direction @ g)
    trace = [(m, delta)]
    iterations = 0
    stalled = False
    while delta >= config.epsilon:
        if iterations >= config.max_iter:
            raise NumericalFailure(f"no convergence within {config.max_iter} iterations (m={m})")
        tau = armijo_step(f, x, direction, g, config.gamma1, config.gamma2)
        x = x - tau * direction
        iterations += 1
        g = grad(x)
        direction = P.apply(g)
        new = float(direction @ g)
        if new >= config.gamma3 * delta and new >= config.epsilon:
            if m < m_cap:
                m = min(2 * m, m_cap)
                doublings += 1
                log.info("decrement stalled; doubling sketch size to %d", m)
                P = precond(m, doublings)
                direction = P.apply(g)
                new = float(direction @ g)
            elif not stalled:
                stalled = True
                log.warning("decrement stalled at the sketch size cap m=%d", m)
        delta = new
        trace.append((m, delta))
    return AdaptiveResult(m, x, iterations, doublings, stalled, trace)
