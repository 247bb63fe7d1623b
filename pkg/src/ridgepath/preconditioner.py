"""``P_S = (A^T S^T S A + lam0 I)^{-1}`` applied through the SVD of ``S A``."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .matrix import thin_svd
from .sketch import SketchedMatrix


@dataclass(frozen=True)
class Preconditioner:
    Vt: np.ndarray  # r x d right singular vectors of SA
    sigma: np.ndarray  # r singular values, tiny ones zeroed
    lambda0: float
    m: int
    d: int

    @property
    def full_rank(self):
        """True when ``Vt`` is square and every singular value is kept."""
        return self.Vt.shape[0] == self.d and bool(np.all(self.sigma > 0))

    def apply(self, v):
        """``P_S @ v`` for a vector or a ``d x K`` block, in O(m d K)."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape[0] != self.d:
            raise DimensionError(f"preconditioner is {self.d}-dimensional, got {v.shape[0]}")
        if self.full_rank:
            return self._apply_square(v)
        return self._apply_lowrank(v)

    def _scale(self, w, diag):
        return diag[:, None] * w if w.ndim == 2 else diag * w

    def _apply_lowrank(self, v):
        coef = 1.0 / (self.sigma**2 + self.lambda0) - 1.0 / self.lambda0
        return v / self.lambda0 + self.Vt.T @ self._scale(self.Vt @ v, coef)

    def _apply_square(self, v):
        coef = 1.0 / (self.sigma**2 + self.lambda0)
        return self.Vt.T @ self._scale(self.Vt @ v, coef)

    def sketched_hessian_apply(self, v):
        """``(A^T S^T S A + lam0 I) @ v``."""
        v = np.asarray(v, dtype=np.float64)
        return self.Vt.T @ self._scale(self.Vt @ v, self.sigma**2) + self.lambda0 * v

    def reshift(self, new_lambda0):
        if not new_lambda0 > 0:
            raise ValueError("preconditioner shift must be positive")
        return dataclasses.replace(self, lambda0=float(new_lambda0))


def build(SA, lambda0):
    """Factor ``SA`` once; the result applies ``(SA^T SA + lambda0 I)^{-1}``."""
    if not lambda0 > 0:
        raise ValueError("preconditioner shift must be positive")
    if isinstance(SA, SketchedMatrix):
        SA = SA.product
    SA = np.asarray(SA, dtype=np.float64)
    m, d = SA.shape
    f = thin_svd(SA)
    sigma = f.sigma.copy()
    sigma[sigma < f.rank_tol] = 0.0
    return Preconditioner(Vt=f.Vt, sigma=sigma, lambda0=float(lambda0), m=m, d=d)
