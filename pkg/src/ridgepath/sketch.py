"""Random sketching matrices S and the product S @ A.

Every family draws from a PCG64 stream seeded by ``SketchSpec.seed`` in a
fixed order, so a spec always realizes the same S:

* gaussian: ``m x n`` standard normals in row-major order, scaled by 1/sqrt(m).
* countsketch: one (bucket, sign-bit) pair per column, columns in order.
* sjlt: ``s`` independent countsketch blocks of ``m/s`` rows, block by block,
  every nonzero equal to +-1/sqrt(s).
* srht: n sign bits, then m distinct rows of the padded Hadamard matrix;
  ``S = sqrt(n_pad/m) P H D`` with ``H`` the orthonormal Sylvester Hadamard.
* identity: S = I (requires m == n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError
from .matrix import make_rng, to_dense

KINDS = ("gaussian", "countsketch", "sjlt", "srht", "identity")


@dataclass(frozen=True)
class SketchSpec:
    kind: str
    m: int
    n: int
    s: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sketch kind {self.kind!r}; choose from {KINDS}")
        if self.m < 1 or self.n < 1:
            raise ValueError("sketch dimensions must be positive")
        if self.kind == "sjlt":
            if self.s < 1:
                raise ValueError("SJLT sparsity must be >= 1")
            if self.m % self.s:
                raise ValueError(f"SJLT sparsity s={self.s} does not divide m={self.m}")
        if self.kind == "identity" and self.m != self.n:
            raise ValueError("identity sketch needs m == n")
        if self.kind == "srht" and self.m > padded_length(self.n):
            raise ValueError("SRHT cannot sample more rows than the padded length")

    def with_m(self, m, seed=None):
        return SketchSpec(self.kind, m, self.n, self.s, self.seed if seed is None else seed)


@dataclass(frozen=True)
class SketchedMatrix:
    product: np.ndarray
    spec: SketchSpec


def padded_length(n):
    return 1 << max(0, int(n - 1).bit_length())


def fwht(X):
    """Orthonormal fast Walsh-Hadamard transform along axis 0 (Sylvester order).

    The row count must be a power of two. Returns a new array.
    """
    X = np.array(X, dtype=np.float64, copy=True)
    n = X.shape[0]
    if n & (n - 1):
        raise ValueError("fwht needs a power-of-two length")
    tail = X.shape[1:]
    h = 1
    while h < n:
        Y = X.reshape((n // (2 * h), 2, h) + tail)
        top = Y[:, 0].copy()
        Y[:, 0] += Y[:, 1]
        Y[:, 1] = top - Y[:, 1]
        h *= 2
    return X / np.sqrt(n)


def _hash_pairs(rng, n, m):
    pairs = rng.integers(0, [m, 2], size=(n, 2))
    return pairs[:, 0], 2.0 * pairs[:, 1] - 1.0


def _sparse_sketch(spec):
    rng = make_rng(spec.seed)
    n = spec.n
    if spec.kind == "countsketch":
        rows, vals = _hash_pairs(rng, n, spec.m)
        cols = np.arange(n)
    else:
        block = spec.m // spec.s
        rows_l, vals_l = [], []
        for b in range(spec.s):
            r, v = _hash_pairs(rng, n, block)
            rows_l.append(r + b * block)
            vals_l.append(v / np.sqrt(spec.s))
        rows = np.concatenate(rows_l)
        vals = np.concatenate(vals_l)
        cols = np.tile(np.arange(n), spec.s)
    return sp.csr_matrix((vals, (rows, cols)), shape=(spec.m, n))


def _srht_apply(spec, A):
    rng = make_rng(spec.seed)
    n_pad = padded_length(spec.n)
    signs = 2.0 * rng.integers(0, 2, size=spec.n) - 1.0
    rows = rng.choice(n_pad, size=spec.m, replace=False)
    X = np.zeros((n_pad, A.shape[1]))
    X[: spec.n] = signs[:, None] * to_dense(A)
    return np.sqrt(n_pad / spec.m) * fwht(X)[rows]


def sketch_apply(spec, A):
    """Return ``S @ A`` as a dense ``m x d`` array wrapped with its spec."""
    if A.shape[0] != spec.n:
        raise DimensionError(f"sketch expects {spec.n} rows, matrix has {A.shape[0]}")
    kind = spec.kind
    if kind == "identity":
        SA = np.array(to_dense(A), dtype=np.float64)
    elif kind == "gaussian":
        S = make_rng(spec.seed).standard_normal((spec.m, spec.n)) / np.sqrt(spec.m)
        SA = np.asarray(A.T @ S.T).T if sp.issparse(A) else S @ A
    elif kind in ("countsketch", "sjlt"):
        SA = to_dense(_sparse_sketch(spec) @ A)
    else:
        SA = _srht_apply(spec, A)
    return SketchedMatrix(product=np.ascontiguousarray(SA, dtype=np.float64), spec=spec)


def realize_dense(spec):
    """Materialize S explicitly (test oracle; ``m * n <= 1e6``)."""
    if spec.m * spec.n > 10**6:
        raise ValueError("realize_dense is limited to m*n <= 1e6")
    if spec.kind in ("countsketch", "sjlt"):
        return _sparse_sketch(spec).toarray()
    return sketch_apply(spec, np.eye(spec.n)).product
