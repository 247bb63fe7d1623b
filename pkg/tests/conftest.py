import numpy as np
import pytest


def ridge_solve(A, b, lam):
    """Dense normal-equations oracle."""
    A = np.asarray(A.todense()) if hasattr(A, "todense") else np.asarray(A)
    return np.linalg.solve(A.T @ A + lam * np.eye(A.shape[1]), A.T @ b)


def rel_err(x, ref):
    return np.linalg.norm(x - ref) / max(np.linalg.norm(ref), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_problem(rng):
    n, d = 60, 12
    A = rng.standard_normal((n, d)) / np.sqrt(n)
    b = rng.standard_normal(n)
    return A, b
