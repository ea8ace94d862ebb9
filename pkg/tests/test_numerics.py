import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from cvforge.numerics import (
    RngStream,
    betainc,
    fit_linear,
    least_squares,
    mix64,
    pearson_columns,
    pearson_p,
    pearson_r,
    split_rng,
    sym_eigen,
    t_ppf,
    t_sf,
)


def t_sf_quad(t, df):
    """Upper tail by numerical integration of the t density."""
    dens = lambda x: math.exp(
        math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi) - (df + 1) / 2 * math.log1p(x * x / df)
    )
    val, _ = integrate.quad(dens, t, np.inf, epsabs=1e-14, epsrel=1e-13)
    return val


# least squares


def test_exact_fit_no_intercept():
    coef = least_squares(np.array([[1.0], [2.0], [3.0]]), np.array([2.0, 4.0, 6.0]))
    assert coef == pytest.approx([2.0], abs=1e-14)


def test_zero_column_gives_zero_coef():
    coef = least_squares(np.zeros((4, 1)), np.array([1.0, -2.0, 3.0, 0.5]))
    assert coef.tolist() == [0.0]


def test_matches_normal_equations():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3))
    y = rng.normal(size=20)
    oracle = np.linalg.inv(X.T @ X) @ X.T @ y
    np.testing.assert_allclose(least_squares(X, y), oracle, atol=1e-9)


def test_rank_deficient_is_minimum_norm():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(15, 2))
    X = np.column_stack([A, A[:, 0] + A[:, 1], 2 * A[:, 0]])
    y = rng.normal(size=15)
    np.testing.assert_allclose(least_squares(X, y), np.linalg.pinv(X) @ y, atol=1e-10)


def test_underdetermined_is_minimum_norm():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(3, 7))
    y = rng.normal(size=3)
    np.testing.assert_allclose(least_squares(X, y), np.linalg.pinv(X) @ y, atol=1e-10)


def test_matrix_right_hand_side():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(12, 4))
    Y = rng.normal(size=(12, 3))
    np.testing.assert_allclose(least_squares(X, Y), np.linalg.lstsq(X, Y, rcond=None)[0], atol=1e-10)


def test_least_squares_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        least_squares(np.ones((3, 2)), np.ones(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_residual_orthogonal_to_columns(n, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n + p, p))
    y = rng.normal(size=n + p)
    b = least_squares(X, y)
    bound = 1e-8 * np.linalg.norm(X) * np.linalg.norm(y)
    assert np.max(np.abs(X.T @ (y - X @ b))) <= bound


def test_fit_linear_intercept_matches_augmented_oracle():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 3))
    y = X @ [1.0, -2.0, 0.5] + 3.0 + 0.1 * rng.normal(size=30)
    coef, b = fit_linear(X, y)
    oracle = np.linalg.lstsq(np.column_stack([np.ones(30), X]), y, rcond=None)[0]
    assert b == pytest.approx(oracle[0], abs=1e-10)
    np.testing.assert_allclose(coef, oracle[1:], atol=1e-10)


# eigendecomposition


def test_eigen_diagonal():
    w, V = sym_eigen(np.diag([3.0, 1.0]))
    assert w.tolist() == [3.0, 1.0]
    np.testing.assert_array_equal(V, np.eye(2))


def test_eigen_two_by_two():
    w, V = sym_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(w, [3.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(V[:, 0], np.array([1.0, 1.0]) / math.sqrt(2), atol=1e-12)


def test_eigen_reconstruction_and_orthonormality():
    rng = np.random.default_rng(5)
    B = rng.normal(size=(6, 6))
    A = B + B.T
    w, V = sym_eigen(A)
    assert np.max(np.abs(V @ np.diag(w) @ V.T - A)) <= 1e-8
    assert np.max(np.abs(V.T @ V - np.eye(6))) <= 1e-10
    assert np.all(np.diff(w) <= 0)
    lead = np.abs(V).argmax(axis=0)
    assert np.all(V[lead, range(6)] >= 0)
    np.testing.assert_allclose(w, np.sort(np.linalg.eigvalsh(A))[::-1], atol=1e-10)


def test_eigen_eigenpairs_scaled():
    rng = np.random.default_rng(6)
    B = rng.normal(size=(20, 20)) * 1e3
    A = B @ B.T
    w, V = sym_eigen(A)
    assert np.max(np.abs(A @ V - V * w)) <= 1e-8 * np.linalg.norm(A)


def test_eigen_rejects_asymmetric():
    with pytest.raises(ValueError, match="not symmetric"):
        sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


# correlation and the t distribution


def test_pearson_r_examples():
    assert pearson_r([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert pearson_r([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert pearson_r([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)


def test_pearson_r_errors():
    with pytest.raises(ValueError, match="zero variance"):
        pearson_r([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError, match="at least 3"):
        pearson_r([1, 2], [2, 1])


def test_pearson_columns_matches_scipy():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(25, 5))
    X[:, 2] = 4.0
    y = rng.normal(size=25)
    r = pearson_columns(X, y)
    assert r[2] == 0.0
    for j in (0, 1, 3, 4):
        assert r[j] == pytest.approx(stats.pearsonr(X[:, j], y)[0], abs=1e-12)


def test_pearson_p_limits():
    assert pearson_p(0.0, 10) == 1.0
    assert pearson_p(1.0, 10) == 0.0
    assert pearson_p(-1.0, 10) == 0.0
    with pytest.raises(ValueError):
        pearson_p(0.3, 2)


def test_pearson_p_against_quadrature():
    r, n = 0.5, 12
    t = r * math.sqrt((n - 2) / (1 - r * r))
    assert t == pytest.approx(1.8257, abs=1e-4)
    assert pearson_p(r, n) == pytest.approx(2 * t_sf_quad(t, n - 2), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.999, 0.999), st.integers(3, 500))
def test_pearson_p_matches_scipy(r, n):
    oracle = 2 * stats.t.sf(abs(r) * math.sqrt((n - 2) / (1 - r * r)), n - 2)
    assert pearson_p(r, n) == pytest.approx(oracle, abs=1e-10)


def test_pearson_p_monotone_in_r():
    ps = [pearson_p(r, 20) for r in np.linspace(0, 0.99, 50)]
    assert all(a > b for a, b in zip(ps, ps[1:]))


def test_t_sf_examples():
    assert t_sf(0.0, 3.0) == 0.5
    assert t_sf(math.inf, 3.0) == 0.0
    assert t_sf(2.776, 4) == pytest.approx(t_sf_quad(2.776, 4), abs=1e-12)
    assert t_sf(2.776, 4) == pytest.approx(0.025, abs=5e-5)
    with pytest.raises(ValueError):
        t_sf(1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(0.5, 1000))
def test_t_sf_matches_scipy_and_is_symmetric(t, df):
    assert t_sf(t, df) == pytest.approx(stats.t.sf(t, df), abs=1e-12)
    assert t_sf(t, df) + t_sf(-t, df) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 50), st.floats(0.01, 50), st.floats(0.0, 1.0, allow_subnormal=False))
def test_betainc_matches_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-12)


def test_betainc_subnormal_x_matches_mpmath():
    # scipy loses accuracy for subnormal x, so use arbitrary precision here
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for x in (5e-324, 1e-320, 1e-310):
        ref = float(mpmath.betainc(mpmath.mpf(1) / 64, 0.5, 0, mpmath.mpf(x), regularized=True))
        assert betainc(1 / 64, 0.5, x) == pytest.approx(ref, rel=1e-12)


def test_t_ppf_inverts_sf():
    for q, df in [(0.975, 4), (0.9, 1.5), (0.025, 30), (0.5, 7)]:
        assert t_ppf(q, df) == pytest.approx(stats.t.ppf(q, df), abs=1e-9)


# random streams


def test_split_streams_differ_and_repeat():
    a = split_rng(RngStream(0), 0).draws().uniform(10)
    b = split_rng(RngStream(0), 1).draws().uniform(10)
    assert not np.array_equal(a, b)
    c1 = RngStream(7).split(3).draws().uniform(20)
    c2 = RngStream(7).split(3).draws().uniform(20)
    np.testing.assert_array_equal(c1, c2)


def test_child_streams_are_roughly_uniform():
    root = RngStream(11)
    for i in range(64):
        u = root.split(i).draws().uniform(1000)
        assert 0.45 <= u.mean() <= 0.55
        assert u.min() >= 0.0 and u.max() < 1.0


def test_splitmix_reference_values():
    # published SplitMix64 outputs for seed 1234567
    from cvforge.numerics import SplitMix64

    g = SplitMix64(1234567)
    assert [g.next_u64() for _ in range(3)] == [6457827717110365317, 3203168211198807973, 9817491932198370423]
    assert mix64(0) == 0


def test_permutation_is_permutation():
    p = RngStream(3).draws().permutation(50)
    assert sorted(p.tolist()) == list(range(50))
