"""Dense/CSR matrix plumbing shared by every solver.

Matrices are plain ``numpy.ndarray`` (dense, float64) or
``scipy.sparse.csr_matrix`` with canonical (sorted, de-duplicated) indices.
The products here are the only place the solvers touch ``A`` so that the
operation counter sees every Gram application.
"""

from __future__ import annotations

import contextlib
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, NumericalFailure

# Global operation tally; read through ``count_ops``.
_COUNTS: Counter = Counter()


@contextlib.contextmanager
def count_ops():
    """Count Gram-column applications and axpy updates inside the block.

    Yields a ``Counter`` with keys ``"gram"`` (number of vectors pushed
    through ``A^T A``) and ``"axpy"`` (vector updates made while composing
    path solutions).
    """
    saved = _COUNTS.copy()
    _COUNTS.clear()
    tally = Counter()
    try:
        yield tally
    finally:
        tally.update(_COUNTS)
        _COUNTS.clear()
        _COUNTS.update(saved)
        _COUNTS.update(tally)


def _tick(key, amount=1):
    _COUNTS[key] += amount


def as_matrix(M):
    """Return ``M`` as float64 dense array or canonical CSR.

    Duplicate sparse entries are summed. Non-finite entries are rejected.
    """
    if sp.issparse(M):
        out = sp.csr_matrix(M, dtype=np.float64, copy=True)
        out.sum_duplicates()
        out.sort_indices()
        if not np.all(np.isfinite(out.data)):
            raise ValueError("matrix has non-finite entries")
        return out
    out = np.asarray(M, dtype=np.float64)
    if out.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("matrix has non-finite entries")
    return out


def csr_from_rows(rows, n_cols):
    """Build a CSR matrix from ``[(indices, values), ...]`` with 0-based indices."""
    indptr = [0]
    indices = []
    data = []
    for idx, val in rows:
        indices.extend(idx)
        data.extend(val)
        indptr.append(len(indices))
    M = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(rows), n_cols),
    )
    M.sum_duplicates()
    M.sort_indices()
    return M


def nnz(A):
    return A.nnz if sp.issparse(A) else int(np.count_nonzero(A))


def _check(n_expected, x, what):
    if x.shape[0] != n_expected:
        raise DimensionError(f"{what}: operand has {x.shape[0]} rows, expected {n_expected}")


def apply(A, x):
    """``A @ x`` for a vector or a block of column vectors."""
    x = np.asarray(x, dtype=np.float64)
    _check(A.shape[1], x, "apply")
    return np.asarray(A @ x)


def apply_transpose(A, y):
    """``A.T @ y``; CSR inputs go through the transposed (CSC) view."""
    y = np.asarray(y, dtype=np.float64)
    _check(A.shape[0], y, "apply_transpose")
    return np.asarray(A.T @ y)


def gram_apply(A, x):
    """``A.T @ (A @ x)`` without forming the Gram matrix."""
    x = np.asarray(x, dtype=np.float64)
    _tick("gram", 1 if x.ndim == 1 else x.shape[1])
    return apply_transpose(A, apply(A, x))


def to_dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A)


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray
    sigma: np.ndarray
    Vt: np.ndarray

    @property
    def rank_tol(self):
        return 1e-12 * (self.sigma[0] if self.sigma.size else 0.0)


def thin_svd(M):
    """Thin SVD ``M = U diag(sigma) Vt`` with sigma non-increasing.

    Backed by LAPACK ``gesdd``; falls back to ``gesvd`` when the
    divide-and-conquer driver fails to converge.
    """
    M = to_dense(M)
    if M.ndim != 2 or min(M.shape) < 1:
        raise DimensionError(f"thin_svd needs a non-empty 2-D matrix, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("thin_svd: non-finite entries")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError:
        import scipy.linalg

        try:
            U, s, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return SvdFactors(U=U, sigma=s, Vt=Vt)


def make_rng(seed):
    """Seeded PCG64 stream; identical seeds give identical draws."""
    return np.random.Generator(np.random.PCG64(seed))
