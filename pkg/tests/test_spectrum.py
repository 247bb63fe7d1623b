import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ridgepath import preconditioner as pc
from ridgepath.sketch import SketchSpec, sketch_apply
from ridgepath.spectrum import (
    IDENTITY_RHO,
    K_CAP,
    PathConfig,
    RhoBounds,
    auto_interval_count,
    balanced_residuals,
    effective_dimension,
    estimate_rho,
    estimate_rho_many,
    interval_split,
    iteration_budget,
    rho_gaussian,
    rho_sjlt,
    rho_srht,
    tune_interval,
)


def test_effective_dimension_examples():
    assert effective_dimension([1, 1], 1) == pytest.approx(2)
    assert effective_dimension([2, 1], 3) == pytest.approx(23 / 16, rel=1e-14)
    assert effective_dimension([3, 0], 1) == pytest.approx(1)
    with pytest.raises(ValueError):
        effective_dimension([0, 0], 1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=12), st.floats(0, 50), st.floats(0, 50))
def test_effective_dimension_monotone(sigma, a, b):
    lo, hi = sorted((a, b))
    d_lo, d_hi = effective_dimension(sigma, lo), effective_dimension(sigma, hi)
    assert 1 - 1e-12 <= d_hi <= d_lo + 1e-12 <= len(sigma) + 1e-9
    assert effective_dimension(sigma, 0) == pytest.approx(len(sigma))


def test_rho_gaussian_formula_values():
    r = rho_gaussian(0.25, 0.01, 1.0)
    assert r.rho1 == pytest.approx(2.7225, abs=1e-12)
    c = (1.1 / 0.9) ** 2
    assert r.rho2 == pytest.approx((1 - math.sqrt(0.25 * c)) ** 2, abs=1e-12)
    assert r.rho2 == pytest.approx((0.35 / 0.9) ** 2, abs=1e-12)
    r = rho_gaussian(0.04, 0.04, 0.5)
    assert r.rho1 == pytest.approx(1.5368, abs=1e-12)
    assert r.rho2 == pytest.approx(0.745, abs=1e-12)
    tiny = rho_gaussian(0.25, 0.01, 1e-12)
    assert tiny.rho1 == pytest.approx(1) and tiny.rho2 == pytest.approx(1)
    assert rho_gaussian(0.25, 0.01, 1.0, m=1000).probability == pytest.approx(1 - 16 * math.exp(-0.0125))
    with pytest.raises(ValueError):
        rho_gaussian(0.25, 0.1, 1.0)


def test_rho_srht():
    r = rho_srht(0.5, 1)
    assert (r.rho1, r.rho2) == (1.5, 0.5)
    r = rho_srht(0.2, 0.8)
    assert r.rho1 == pytest.approx(1.16) and r.rho2 == pytest.approx(0.84)
    r = rho_srht(1e-12, 1)
    assert r.rho1 == pytest.approx(1) and r.rho2 == pytest.approx(1)
    assert rho_srht(0.5, 1, n=1000, d_e=10).min_sketch_dim > 0
    with pytest.raises(ValueError):
        rho_srht(0.9, 1.2)


def test_rho_sjlt():
    r = rho_sjlt(0.25)
    assert (r.rho1, r.rho2) == (1.25, 0.75)
    r = rho_sjlt(0.25, alpha=4, delta=0.1, d_e=100)
    assert r.sparsity == 20
    assert r.min_sketch_dim == math.ceil(4 * 100 * math.log(1000, 4) / 0.0625)
    with pytest.raises(ValueError):
        rho_sjlt(0.5)


def test_tune_interval_identity_example():
    p = tune_interval(1, 100, IDENTITY_RHO)
    assert p.lambda0 == pytest.approx(10)
    assert p.kappa == pytest.approx(100)
    assert p.alpha == pytest.approx(20 / 101, rel=1e-14)
    assert math.sqrt(p.contraction) == pytest.approx(99 / 101, rel=1e-14)
    assert p.contraction == pytest.approx(0.960788, abs=1e-6)


def test_tune_interval_degenerate():
    p = tune_interval(3.0, 3.0, IDENTITY_RHO)
    assert p.kappa == 1 and p.contraction == 0
    # the step multiplies (A^T A + lam0 I)^-1 with lam0 = lam, so the exact Newton step is 1
    assert p.alpha == pytest.approx(1.0)
    assert p.k == 2


def test_tune_interval_sigma_d():
    p = tune_interval(1, 100, IDENTITY_RHO, sigma_d=math.sqrt(10))
    assert p.lambda0 == pytest.approx(math.sqrt(1210) - 10, rel=1e-12)
    assert p.kappa == pytest.approx(10)
    assert math.sqrt(p.contraction) == pytest.approx(9 / 11)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 10), st.floats(1.0, 1e3), st.floats(1.0, 3.0), st.floats(0.2, 1.0), st.one_of(st.none(), st.floats(0, 3)))
def test_balanced_residuals_equal(lo, ratio, r1, r2, sigma_d):
    rho = RhoBounds(r1, r2)
    p = tune_interval(lo, lo * ratio, rho, sigma_d)
    a, b = balanced_residuals(p, rho, sigma_d)
    assert a == pytest.approx(b, abs=1e-12)
    assert a == pytest.approx(math.sqrt(p.contraction), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 1e3), st.floats(1.0, 1e3), st.floats(1.0, 2.0), st.floats(0.3, 1.0))
def test_contraction_monotone_in_ratio(x, y, r1, r2):
    a, b = sorted((x, y))
    rho = RhoBounds(r1, r2)
    assert tune_interval(1, a, rho).contraction <= tune_interval(1, b, rho).contraction + 1e-15


def test_tune_interval_rejects_order():
    with pytest.raises(ValueError):
        tune_interval(2, 1, IDENTITY_RHO)


def test_iteration_budget():
    assert iteration_budget(0.25, 1e-6) == math.ceil(math.log(1e6) / math.log(2))
    assert iteration_budget(0.0, 1e-6) == 2
    assert iteration_budget(0.999999, 1e-12) == K_CAP
    assert iteration_budget(0.25, 0.25) == 2


def test_interval_split_examples():
    assert auto_interval_count(1, 100) == 9
    iv = interval_split(1, 100)
    assert len(iv) == 9
    assert iv[0][1] == pytest.approx(100 ** (1 / 9), rel=1e-12)
    assert iv[0][1] == pytest.approx(1.66810, abs=1e-5)
    two = interval_split(1, 100, 2)
    assert two[0] == pytest.approx((1, 10)) and two[1] == pytest.approx((10, 100))
    assert interval_split(1, 1 + 1e-12) == [(1, 1 + 1e-12)]


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 10), st.floats(1.001, 1e5), st.one_of(st.just("auto"), st.integers(1, 30)))
def test_interval_split_geometric(lmin, beta, L):
    iv = interval_split(lmin, lmin * beta, L)
    assert iv[0][0] == lmin and iv[-1][1] == lmin * beta
    for (a, b), (c, _) in zip(iv, iv[1:]):
        assert b == c
    ratios = [b / a for a, b in iv]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)


def test_path_config_validation():
    cfg = PathConfig.grid(1, 100, 5)
    assert cfg.lambdas[0] == 1 and cfg.lambdas[-1] == 100
    assert np.all(np.diff(cfg.lambdas) > 0)
    lin = PathConfig.grid(1, 2, 3, spacing="linear")
    np.testing.assert_allclose(lin.lambdas, [1, 1.5, 2])
    with pytest.raises(ValueError):
        PathConfig(1, 10, [5, 2])
    with pytest.raises(ValueError):
        PathConfig(1, 10, [0.5, 2])
    with pytest.raises(ValueError):
        PathConfig(1, 10, [2], epsilon=2)
    with pytest.raises(ValueError):
        PathConfig.grid(1, 10, 3, spacing="cubic")


def test_rho_bounds_validation():
    with pytest.raises(ValueError):
        RhoBounds(0.5, 1.0)
    with pytest.raises(ValueError):
        RhoBounds(1.0, 0.0)
    assert (IDENTITY_RHO.rho1, IDENTITY_RHO.rho2) == (1.0, 1.0)


def pencil_extremes(A, SA, lam0):
    d = A.shape[1]
    g = scipy.linalg.eigvalsh(SA.T @ SA + lam0 * np.eye(d), A.T @ A + lam0 * np.eye(d))
    return g.max(), g.min()


@pytest.mark.parametrize("kind,m", [("gaussian", 40), ("sjlt", 40), ("srht", 32)])
def test_estimate_rho_brackets_pencil(rng, kind, m):
    A = rng.standard_normal((200, 30)) / 10
    SA = sketch_apply(SketchSpec(kind, m, 200, seed=2), A).product
    for lam0 in (0.1, 1.0):
        est = estimate_rho(A, pc.build(SA, lam0), steps=30, margin=0.0)
        hi, lo = pencil_extremes(A, SA, lam0)
        assert est.rho1 == pytest.approx(hi, rel=1e-6)
        assert est.rho2 == pytest.approx(lo, rel=1e-6)


def test_estimate_rho_identity_sketch(rng):
    A = rng.standard_normal((50, 10))
    est = estimate_rho(A, pc.build(A, 1.0), margin=0.0)
    assert est.rho1 == pytest.approx(1, abs=1e-10) and est.rho2 == pytest.approx(1, abs=1e-10)


def test_estimate_rho_many_matches_single(rng):
    A = rng.standard_normal((120, 20)) / 5
    P = pc.build(sketch_apply(SketchSpec("gaussian", 25, 120, seed=1), A), 1.0)
    Ps = [P.reshift(x) for x in (0.3, 1.0, 4.0)]
    many = estimate_rho_many(A, Ps, steps=8)
    for P, r in zip(Ps, many):
        one = estimate_rho(A, P, steps=8)
        assert r.rho1 == pytest.approx(one.rho1, rel=1e-10)
        assert r.rho2 == pytest.approx(one.rho2, rel=1e-10)


def test_pencil_spread_shrinks_with_shift(rng):
    # justifies reusing one sketch across intervals: larger lam0 only tightens the bounds
    A = rng.standard_normal((150, 25)) / 5
    SA = sketch_apply(SketchSpec("sjlt", 30, 150, seed=3), A).product
    ext = [pencil_extremes(A, SA, lam) for lam in (0.1, 1, 10)]
    assert all(a[0] >= b[0] and a[1] <= b[1] for a, b in zip(ext, ext[1:]))
