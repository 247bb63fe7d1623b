"""Datasets: LIBSVM text files, the AR-covariance synthetic generator, Gaussian
kernel matrices, feature rescaling and random train/test splits."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.signal
import scipy.sparse as sp

from .errors import DataFormatError, DimensionError
from .matrix import csr_from_rows, make_rng

DENSE_COVARIANCE_LIMIT = 4096


@dataclass
class Dataset:
    A_train: object
    b_train: np.ndarray
    A_test: object = None
    b_test: Optional[np.ndarray] = None
    provenance: str = ""

    def __post_init__(self):
        if self.A_train.shape[0] != len(self.b_train):
            raise DimensionError("training rows and labels differ in length")
        if (self.A_test is None) != (self.b_test is None):
            raise DimensionError("test matrix and test labels must come together")
        if self.A_test is not None:
            if self.A_test.shape[0] != len(self.b_test):
                raise DimensionError("test rows and labels differ in length")
            if self.A_test.shape[1] != self.A_train.shape[1]:
                raise DimensionError("train and test feature counts differ")

    @property
    def feature_count(self):
        return self.A_train.shape[1]


# --- LIBSVM -----------------------------------------------------------------


def _parse_line(text, lineno):
    tokens = text.split()
    try:
        label = float(tokens[0])
    except ValueError:
        raise DataFormatError(f"bad label {tokens[0]!r}", lineno) from None
    idx, val = [], []
    last = 0
    for col, tok in enumerate(tokens[1:], start=1):
        key, sep, value = tok.partition(":")
        try:
            if not sep:
                raise ValueError
            j = int(key)
            v = float(value)
        except ValueError:
            raise DataFormatError(f"malformed token {tok!r}", lineno, col) from None
        if j < 1:
            raise DataFormatError(f"feature index {j} < 1", lineno, col)
        if j <= last:
            raise DataFormatError(f"non-increasing index {j} after {last}", lineno, col)
        if not math.isfinite(v):
            raise DataFormatError(f"non-finite value {value!r}", lineno, col)
        idx.append(j - 1)
        val.append(v)
        last = j
    return label, idx, val


def parse_libsvm(stream, n_features=None):
    """Read ``label idx:val ...`` lines into ``(csr_matrix, labels)``.

    Indices are 1-based and strictly increasing within a line. Blank lines
    and ``#`` comments are skipped. The column count is the largest index
    seen unless ``n_features`` fixes it.
    """
    rows, labels = [], []
    width = 0
    for lineno, raw in enumerate(stream, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        label, idx, val = _parse_line(text, lineno)
        if idx:
            width = max(width, idx[-1] + 1)
            if n_features is not None and idx[-1] >= n_features:
                raise DataFormatError(f"index {idx[-1] + 1} exceeds the declared {n_features} features", lineno, len(idx))
        rows.append((idx, val))
        labels.append(label)
    return csr_from_rows(rows, width if n_features is None else n_features), np.asarray(labels, dtype=np.float64)


def write_libsvm(stream, A, b):
    """Write stored entries of ``A`` (dense zeros are skipped) with 17 digits."""
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=np.float64)
    if A.shape[0] != b.shape[0]:
        raise DimensionError("rows and labels differ in length")
    for i in range(A.shape[0]):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        pairs = (f"{j + 1}:{v:.17g}" for j, v in zip(A.indices[lo:hi], A.data[lo:hi]))
        stream.write(" ".join([f"{b[i]:.17g}", *pairs]) + "\n")


def load_libsvm(path, n_features=None):
    with open(path) as fh:
        A, b = parse_libsvm(fh, n_features)
    return Dataset(A, b, provenance=f"file:{path}")


# --- synthetic data -----------------------------------------------------------


def ar_covariance(d, alpha):
    """``Sigma[i, j] = alpha ** |i - j|``."""
    k = np.arange(d)
    return alpha ** np.abs(np.subtract.outer(k, k))


def _mix(Z, alpha):
    """``Z @ Sigma`` with the AR matrix; O(n d) two-sided filter for large d."""
    d = Z.shape[1]
    if d <= DENSE_COVARIANCE_LIMIT:
        return Z @ ar_covariance(d, alpha)
    fwd = scipy.signal.lfilter([1.0], [1.0, -alpha], Z, axis=1)
    bwd = scipy.signal.lfilter([1.0], [1.0, -alpha], Z[:, ::-1], axis=1)[:, ::-1]
    return fwd + bwd - Z


def gen_synthetic(n, d, alpha=0.99, sigma=0.02, seed=0, n_test=None):
    """Rows ``~ N(0, Sigma^2 / sqrt(n d))`` for training and ``N(0, Sigma^2 / (n d))``
    for test, labels ``A v + noise`` with ``v ~ N(0, I/d)`` and noise ``N(0, sigma^2)``.

    Draw order: v, train rows, train noise, test rows, test noise.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    n_test = n if n_test is None else n_test
    rng = make_rng(seed)
    v = rng.standard_normal(d) / math.sqrt(d)
    A = _mix(rng.standard_normal((n, d)), alpha) / (n * d) ** 0.25
    b = A @ v + sigma * rng.standard_normal(n)
    A_test = b_test = None
    if n_test > 0:
        A_test = _mix(rng.standard_normal((n_test, d)), alpha) / math.sqrt(n * d)
        b_test = A_test @ v + sigma * rng.standard_normal(n_test)
    return Dataset(A, b, A_test, b_test, provenance=f"synthetic:n={n},d={d},alpha={alpha},sigma={sigma},seed={seed}")


# --- kernels ------------------------------------------------------------------


def _sq_dists(X, Y):
    D = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
    return np.maximum(D, 0.0)


def gaussian_kernel(F_train, F_test=None, h=1000.0, normalize=True):
    """Kernel matrices ``K = c exp(-|x - y|^2 / (2h))`` over the training points.

    ``c = (2 pi h)^(-p/2)`` for p-dimensional points when ``normalize``; it
    underflows for large p, so ``normalize=False`` uses ``c = 1``.
    Returns ``(K_train, K_test)``; ``K_test`` is None without test points.
    """
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    X = np.atleast_2d(np.asarray(F_train, dtype=np.float64))
    p = X.shape[1]
    c = (2 * math.pi * h) ** (-p / 2) if normalize else 1.0
    D = _sq_dists(X, X)
    np.fill_diagonal(D, 0.0)
    D = 0.5 * (D + D.T)
    K = c * np.exp(-D / (2 * h))
    K_test = None
    if F_test is not None:
        Y = np.atleast_2d(np.asarray(F_test, dtype=np.float64))
        if Y.shape[1] != p:
            raise DimensionError(f"test points have {Y.shape[1]} coordinates, training points {p}")
        K_test = c * np.exp(-_sq_dists(Y, X) / (2 * h))
    return K, K_test


def kernel_dataset(F_train, y_train, F_test=None, y_test=None, h=1000.0, normalize=True):
    K, K_test = gaussian_kernel(F_train, F_test, h, normalize)
    y_test = None if y_test is None else np.asarray(y_test, dtype=np.float64)
    return Dataset(K, np.asarray(y_train, dtype=np.float64), K_test, y_test, provenance=f"kernel:h={h}")


# --- preprocessing --------------------------------------------------------------


def rescale_features(M):
    """Map entries into [-1, 1].

    Dense input gets the affine map sending the global min/max to -1/1. CSR
    input is divided by its largest absolute entry so zeros stay zeros.
    """
    if sp.issparse(M):
        M = sp.csr_matrix(M, dtype=np.float64, copy=True)
        top = np.abs(M.data).max() if M.nnz else 0.0
        if top == 0:
            raise ValueError("cannot rescale an all-zero matrix")
        M.data /= top
        return M
    M = np.asarray(M, dtype=np.float64)
    lo, hi = M.min(), M.max()
    if lo == hi:
        raise ValueError("cannot rescale a constant matrix")
    if lo == -1 and hi == 1:
        return M.copy()  # the map is the identity; skip its rounding
    return 2.0 * (M - lo) / (hi - lo) - 1.0


def rescale_jointly(A, A_test=None):
    """Rescale train and test with the one map fitted on both."""
    if A_test is None:
        return rescale_features(A), None
    n = A.shape[0]
    both = sp.vstack([A, A_test]).tocsr() if sp.issparse(A) else np.vstack([A, A_test])
    out = rescale_features(both)
    return out[:n], out[n:]


def split_half(dataset, seed=0):
    """Random permutation; the first ceil(n/2) rows train, the rest test."""
    n = dataset.A_train.shape[0]
    if n < 2:
        raise ValueError("need at least two rows to split")
    perm = make_rng(seed).permutation(n)
    cut = (n + 1) // 2
    tr, te = np.sort(perm[:cut]), np.sort(perm[cut:])
    A, b = dataset.A_train, dataset.b_train
    return replace(dataset, A_train=A[tr], b_train=b[tr], A_test=A[te], b_test=b[te],
                   provenance=f"{dataset.provenance};split={seed}")


# --- binary cache ---------------------------------------------------------------


def save_npz(path, dataset):
    parts = {"b_train": dataset.b_train, "provenance": np.array(dataset.provenance)}
    for name in ("A_train", "A_test"):
        M = getattr(dataset, name)
        if M is None:
            continue
        if sp.issparse(M):
            M = sp.csr_matrix(M)
            parts.update({f"{name}_data": M.data, f"{name}_indices": M.indices,
                          f"{name}_indptr": M.indptr, f"{name}_shape": np.array(M.shape)})
        else:
            parts[name] = M
    if dataset.b_test is not None:
        parts["b_test"] = dataset.b_test
    np.savez(path, **parts)


def load_npz(path):
    with np.load(path) as z:
        def matrix(name):
            if name in z:
                return z[name]
            if f"{name}_data" in z:
                return sp.csr_matrix((z[f"{name}_data"], z[f"{name}_indices"], z[f"{name}_indptr"]),
                                     shape=tuple(z[f"{name}_shape"]))
            return None

        return Dataset(matrix("A_train"), z["b_train"], matrix("A_test"),
                       z["b_test"] if "b_test" in z else None, str(z["provenance"]))
