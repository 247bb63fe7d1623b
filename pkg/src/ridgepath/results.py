from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError
from .matrix import apply


@dataclass
class RegPathResult:
    """Solutions and diagnostics for one solver over a lambda grid.

    ``times`` holds the per-lambda evaluation cost; one-off work (sketching,
    factorizations, basis construction) is in ``setup_time``.
    """

    solver: str
    lambdas: np.ndarray
    solutions: np.ndarray  # (T, d) or (T, d, K)
    train_loss: np.ndarray
    test_loss: Optional[np.ndarray]
    times: np.ndarray
    setup_time: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def total_time(self):
        return self.setup_time + float(np.sum(self.times))


def losses(A, b, x, lam, A_test=None, b_test=None):
    """Training objective and (optional) held-out squared error.

    ``train = 0.5 ||A x - b||^2 + 0.5 lam ||x||^2`` and
    ``test = 0.5 ||A_test x - b_test||^2``; Frobenius norms for matrix ``x``.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != A.shape[0]:
        raise DimensionError("labels and data rows differ")
    r = apply(A, x) - b
    train = 0.5 * float(np.sum(r * r)) + 0.5 * lam * float(np.sum(x * x))
    if A_test is None or b_test is None:
        return train, None
    if A_test.shape[1] != A.shape[1]:
        raise DimensionError("test matrix has a different feature count")
    rt = apply(A_test, x) - np.asarray(b_test, dtype=np.float64)
    return train, 0.5 * float(np.sum(rt * rt))


def assemble(solver, lambdas, solutions, times, A, b, A_test=None, b_test=None, setup_time=0.0, info=None):
    sols = np.asarray(solutions)
    train, test = [], []
    for lam, x in zip(lambdas, sols):
        tr, te = losses(A, b, x, lam, A_test, b_test)
        train.append(tr)
        test.append(te)
    test_arr = None if A_test is None or b_test is None else np.asarray(test, dtype=np.float64)
    return RegPathResult(
        solver=solver,
        lambdas=np.asarray(lambdas, dtype=np.float64),
        solutions=sols,
        train_loss=np.asarray(train, dtype=np.float64),
        test_loss=test_arr,
        times=np.asarray(times, dtype=np.float64),
        setup_time=float(setup_time),
        info=info or {},
    )
