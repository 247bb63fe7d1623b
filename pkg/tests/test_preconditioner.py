import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ridgepath import preconditioner as pc
from ridgepath.errors import DimensionError
from ridgepath.sketch import SketchSpec, sketch_apply


def dense_inverse(SA, lam0):
    return np.linalg.inv(SA.T @ SA + lam0 * np.eye(SA.shape[1]))


def test_scalar_examples():
    P = pc.build(np.array([[1.0]]), 1.0)
    assert P.sigma.tolist() == [1.0]
    assert P.apply(np.array([2.0])) == pytest.approx([1.0])


def test_zero_sketch_is_pure_shift():
    P = pc.build(np.zeros((3, 4)), 2.0)
    v = np.arange(4.0)
    np.testing.assert_allclose(P.apply(v), v / 2)
    np.testing.assert_allclose(P.reshift(4.0).apply(v), v / 4)


def test_sketched_matrix_input(rng):
    A = rng.standard_normal((20, 5))
    SA = sketch_apply(SketchSpec("gaussian", 8, 20, seed=1), A)
    P = pc.build(SA, 0.5)
    v = rng.standard_normal(5)
    np.testing.assert_allclose(P.apply(v), dense_inverse(SA.product, 0.5) @ v, rtol=1e-10)


@pytest.mark.parametrize("m,d", [(8, 20), (6, 4), (5, 5)])
def test_dense_inverse_oracle(rng, m, d):
    SA = rng.standard_normal((m, d))
    P = pc.build(SA, 0.5)
    V = rng.standard_normal((d, 3))
    np.testing.assert_allclose(P.apply(V), dense_inverse(SA, 0.5) @ V, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(P.sketched_hessian_apply(P.apply(V[:, 0])), V[:, 0], rtol=1e-8)


def test_nullspace_branch(rng):
    SA = rng.standard_normal((3, 6))
    P = pc.build(SA, 0.7)
    _, _, Vt = np.linalg.svd(SA)
    v = Vt[-1]  # orthogonal to the row space
    np.testing.assert_allclose(P.apply(v), v / 0.7, atol=1e-12)


def test_branches_agree_when_square(rng):
    SA = rng.standard_normal((5, 5))
    P = pc.build(SA, 0.3)
    assert P.full_rank
    v = rng.standard_normal(5)
    np.testing.assert_allclose(P._apply_square(v), P._apply_lowrank(v), rtol=1e-10)


def test_rank_deficient_square_uses_lowrank(rng):
    SA = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 4))
    P = pc.build(SA, 1.0)
    assert not P.full_rank
    v = rng.standard_normal(4)
    np.testing.assert_allclose(P.apply(v), dense_inverse(SA, 1.0) @ v, rtol=1e-10)


def test_reshift(rng):
    SA = rng.standard_normal((6, 9))
    P = pc.build(SA, 1.0)
    v = rng.standard_normal(9)
    assert np.array_equal(P.reshift(1.0).apply(v), P.apply(v))
    np.testing.assert_allclose(P.reshift(3.0).apply(v), pc.build(SA, 3.0).apply(v), rtol=1e-12)
    with pytest.raises(ValueError):
        P.reshift(0.0)
    with pytest.raises(ValueError):
        pc.build(SA, -1.0)
    with pytest.raises(DimensionError):
        P.apply(np.ones(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10), st.integers(1, 10), st.floats(1e-3, 10), st.integers(0, 2**31))
def test_symmetric_positive_definite(m, d, lam0, seed):
    g = np.random.default_rng(seed)
    P = pc.build(g.standard_normal((m, d)), lam0)
    v, w = g.standard_normal(d), g.standard_normal(d)
    scale = np.linalg.norm(v) * np.linalg.norm(w) / lam0
    assert abs(v @ P.apply(w) - w @ P.apply(v)) <= 1e-12 * scale
    assert v @ P.apply(v) > 0
