import math

import numpy as np
import pytest

from rfedit.core_math import RngStream, cholesky, gauss_logpdf, sample_standard_normal
from rfedit.errors import DimMismatch, NotSpd


def test_cholesky_identity():
    assert np.array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_diagonal_square_roots():
    np.testing.assert_allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), rtol=0, atol=1e-15)


@pytest.mark.parametrize("d", [1, 2, 5, 16, 64])
def test_cholesky_reconstructs_random_spd(d):
    b = np.random.default_rng(d).normal(size=(d, d))
    a = b.T @ b + np.eye(d)
    L = cholesky(a)
    assert np.allclose(np.triu(L, 1), 0.0)
    assert np.linalg.norm(L @ L.T - a) / np.linalg.norm(a) <= 1e-10


def test_cholesky_of_product_returns_factor():
    rng = np.random.default_rng(3)
    L0 = np.tril(rng.normal(size=(6, 6)), -1) + np.diag(rng.uniform(0.5, 2.0, 6))
    L = cholesky(L0 @ L0.T)
    assert np.abs(L - L0).max() <= 1e-10 * np.abs(L0).max()


def test_cholesky_rejects_indefinite_and_asymmetric():
    with pytest.raises(NotSpd):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotSpd):
        cholesky(np.array([[0.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(NotSpd):
        cholesky(np.array([[2.0, 0.1], [0.0, 2.0]]))
    with pytest.raises(DimMismatch):
        cholesky(np.ones((2, 3)))


def test_logpdf_standard_normal_mode():
    assert gauss_logpdf([0.0], [0.0], [[1.0]]) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)
    assert gauss_logpdf(np.zeros(2), np.zeros(2), np.eye(2)) == pytest.approx(-math.log(2 * math.pi), abs=1e-15)


def test_logpdf_1d_integrates_to_one():
    xs = np.linspace(-10.0, 10.0, 40001)
    dens = np.exp([gauss_logpdf([x], [0.3], [[1.7]]) for x in xs])
    assert abs(np.trapezoid(dens, xs) - 1.0) <= 1e-8


def test_logpdf_matches_scipy():
    from scipy.stats import multivariate_normal

    rng = np.random.default_rng(0)
    b = rng.normal(size=(4, 4))
    cov = b @ b.T + np.eye(4)
    x, mu = rng.normal(size=4), rng.normal(size=4)
    assert gauss_logpdf(x, mu, cov) == pytest.approx(multivariate_normal(mu, cov).logpdf(x), rel=1e-12)


def test_logpdf_dimension_mismatch():
    with pytest.raises(DimMismatch):
        gauss_logpdf(np.zeros(2), np.zeros(3), np.eye(2))


def test_same_seed_same_draws_and_position():
    a, b = RngStream(42), RngStream(42)
    va, vb = sample_standard_normal(a, 5), sample_standard_normal(b, 5)
    assert np.array_equal(va, vb)
    assert a.position == 5


def test_different_seeds_differ():
    assert not np.array_equal(sample_standard_normal(RngStream(1), 4), sample_standard_normal(RngStream(2), 4))


def test_rng_is_pcg64():
    ref = np.random.Generator(np.random.PCG64(9)).standard_normal(3)
    assert np.array_equal(RngStream(9).standard_normal(3), ref)


def test_normal_moments_large_sample():
    x = RngStream(2024).standard_normal((10**6, 4))
    assert np.all(np.abs(x.mean(axis=0)) <= 0.01)
    assert np.all(np.abs(x.var(axis=0) - 1.0) <= 0.01)


def test_seed_and_dimension_validation():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)
    with pytest.raises(ValueError):
        sample_standard_normal(RngStream(0), 0)
