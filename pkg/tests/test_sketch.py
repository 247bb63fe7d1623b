import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ridgepath.errors import DimensionError
from ridgepath.sketch import KINDS, SketchSpec, fwht, padded_length, realize_dense, sketch_apply


def hadamard(n):
    H = np.array([[1.0]])
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H / np.sqrt(n)


def test_identity_returns_a(rng):
    A = rng.standard_normal((5, 3))
    assert np.array_equal(sketch_apply(SketchSpec("identity", 5, 5), A).product, A)
    np.testing.assert_array_equal(realize_dense(SketchSpec("identity", 3, 3)), np.eye(3))


def test_countsketch_structure(rng):
    spec = SketchSpec("countsketch", 2, 3, seed=4)
    S = realize_dense(spec)
    assert np.all((S != 0).sum(axis=0) == 1)
    assert set(np.abs(S[S != 0])) == {1.0}
    A = rng.standard_normal((3, 2))
    np.testing.assert_allclose(sketch_apply(spec, A).product, S @ A, atol=1e-14)
    S4 = realize_dense(SketchSpec("countsketch", 2, 4, seed=1))
    assert np.all((S4 != 0).sum(axis=0) == 1) and set(np.unique(S4[S4 != 0])) <= {-1.0, 1.0}


def test_gaussian_variance_over_seeds():
    A = np.ones((1, 1))
    m = 4
    vals = np.concatenate([sketch_apply(SketchSpec("gaussian", m, 1, seed=s), A).product.ravel() for s in range(10_000 // m)])
    assert abs(vals.var() - 1 / m) < 0.05 / m


def test_srht_order_two():
    spec = SketchSpec("srht", 2, 2, seed=3)
    S = realize_dense(spec)
    # S = P H D with n = m, so undoing the column signs leaves rows of H
    D = np.sign(S[0]) * np.sign(hadamard(2)[0])
    rows = {tuple(np.round(r, 12)) for r in S * D}
    assert rows == {tuple(np.round(r, 12)) for r in hadamard(2)}
    np.testing.assert_allclose(S @ S.T, np.eye(2), atol=1e-14)


def test_fwht_matches_dense_hadamard(rng):
    for n in (1, 2, 8, 64):
        X = rng.standard_normal((n, 3))
        np.testing.assert_allclose(fwht(X), hadamard(n) @ X, atol=1e-12)
    H = fwht(np.eye(64))
    assert np.abs(H @ H.T - np.eye(64)).max() < 1e-12
    with pytest.raises(ValueError):
        fwht(np.ones(3))


def test_padded_length():
    assert [padded_length(n) for n in (1, 2, 3, 4, 5, 1000)] == [1, 2, 4, 4, 8, 1024]


@pytest.mark.parametrize("kind,m,s", [("gaussian", 7, 1), ("countsketch", 5, 1), ("sjlt", 8, 4), ("srht", 16, 1), ("identity", 40, 1)])
@pytest.mark.parametrize("sparse", [False, True])
def test_oracle_equality(rng, kind, m, s, sparse):
    n = 40
    A = rng.standard_normal((n, 6))
    if sparse:
        A[rng.random(A.shape) < 0.6] = 0
        A = sp.csr_matrix(A)
    spec = SketchSpec(kind, m, n, s, seed=11)
    S = realize_dense(spec)
    np.testing.assert_allclose(sketch_apply(spec, A).product, S @ (A.toarray() if sparse else A), atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_determinism(rng, kind):
    A = rng.standard_normal((16, 3))
    spec = SketchSpec(kind, 16 if kind == "identity" else 8, 16, 2 if kind == "sjlt" else 1, seed=9)
    assert np.array_equal(sketch_apply(spec, A).product, sketch_apply(spec, A).product)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(1, 50), st.integers(0, 10**6))
def test_sjlt_columns(s, blocks, n, seed):
    m = s * blocks
    S = realize_dense(SketchSpec("sjlt", m, n, s, seed))
    nz = S != 0
    assert np.all(nz.sum(axis=0) == s)
    np.testing.assert_allclose(np.abs(S[nz]), 1 / np.sqrt(s))
    per_block = nz.reshape(s, blocks, n).sum(axis=1)
    assert np.all(per_block == 1)


def test_spec_validation():
    with pytest.raises(ValueError):
        SketchSpec("sjlt", 10, 20, s=3)
    with pytest.raises(ValueError):
        SketchSpec("identity", 3, 4)
    with pytest.raises(ValueError):
        SketchSpec("fourier", 3, 4)
    with pytest.raises(ValueError):
        SketchSpec("gaussian", 0, 4)
    with pytest.raises(ValueError):
        SketchSpec("srht", 9, 5)
    with pytest.raises(DimensionError):
        sketch_apply(SketchSpec("gaussian", 2, 4), np.ones((5, 2)))
    with pytest.raises(ValueError):
        realize_dense(SketchSpec("gaussian", 1001, 1000))


def test_with_m_keeps_family():
    spec = SketchSpec("sjlt", 4, 10, 2, seed=3)
    assert spec.with_m(8) == SketchSpec("sjlt", 8, 10, 2, 3)
    assert spec.with_m(8, seed=5).seed == 5
