"""Special functions, Cholesky whitening, and sampling primitives."""

import math

import numpy as np
import pytest

from chanauth.numerics import (
    HermitianMatrix,
    NotPositiveDefiniteError,
    RngStream,
    chi2_cdf,
    chi2_inv,
    cholesky,
    noncentral_chi2_cdf,
    sample_complex_gaussian,
)

from _oracles import adaptive_simpson, chi2_cdf_by_integration, chi2_pdf


class TestChi2Cdf:
    def test_at_origin(self):
        assert chi2_cdf(0.0, 20) == 0.0

    def test_two_dof_closed_form(self):
        # With 2 dof the CDF is 1 - e^{-x/2}.
        for x in (0.5, 1.0, 9.21034, 40.0):
            assert chi2_cdf(x, 2) == pytest.approx(1.0 - math.exp(-x / 2), abs=1e-12)

    def test_against_quadrature_oracle(self):
        assert chi2_cdf(37.5662, 20) == pytest.approx(0.99, abs=1e-4)
        for x, k in ((37.5662, 20), (5.0, 4), (120.0, 100), (1.0, 1)):
            assert chi2_cdf(x, k) == pytest.approx(chi2_cdf_by_integration(x, k), abs=1e-9)

    def test_monotone_and_bounded(self):
        xs = np.linspace(0.0, 200.0, 400)
        vals = chi2_cdf(xs, 12)
        assert np.all(np.diff(vals) >= 0)
        assert np.all((vals >= 0.0) & (vals <= 1.0))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            chi2_cdf(-1.0, 4)
        with pytest.raises(ValueError):
            chi2_cdf(1.0, 0)


class TestChi2Inv:
    def test_zero_quantile(self):
        assert chi2_inv(0.0, 20) == 0.0

    def test_two_dof_closed_form(self):
        assert chi2_inv(0.99, 2) == pytest.approx(-2.0 * math.log(0.01), abs=1e-9)

    def test_round_trip(self):
        for p in (0.01, 0.5, 0.9, 0.99, 0.999):
            for k in (2, 10, 20, 64):
                assert chi2_cdf(chi2_inv(p, k), k) == pytest.approx(p, abs=1e-9)

    def test_against_quadrature_root(self):
        # Bisect the integrated density to locate the 0.99 quantile for 20 dof.
        lo, hi = 0.0, 200.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if chi2_cdf_by_integration(mid, 20) < 0.99:
                lo = mid
            else:
                hi = mid
        assert chi2_inv(0.99, 20) == pytest.approx(0.5 * (lo + hi), abs=1e-4)
        assert chi2_inv(0.99, 20) == pytest.approx(37.5662, abs=1e-4)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            chi2_inv(1.0, 4)
        with pytest.raises(ValueError):
            chi2_inv(-0.1, 4)


class TestNoncentralChi2Cdf:
    def test_zero_noncentrality_collapses(self):
        for x in (0.0, 3.0, 37.5662):
            assert noncentral_chi2_cdf(x, 20, 0.0) == chi2_cdf(x, 20)

    def test_at_origin(self):
        assert noncentral_chi2_cdf(0.0, 8, 5.0) == 0.0

    def test_strictly_decreasing_in_mu(self):
        mus = np.linspace(0.0, 80.0, 30)
        vals = noncentral_chi2_cdf(37.5662, 20, mus)
        assert np.all(np.diff(vals) < 0)

    def test_against_monte_carlo(self):
        # Sum of k squared unit normals with means carrying total mu.
        k, mu, x = 20, 50.0, 37.5662
        shift = np.float32(math.sqrt(mu / k))
        gen = RngStream(123).generator
        n = 10_000_000
        below = 0
        for _ in range(10):
            z = gen.standard_normal((n // 10, k), dtype=np.float32)
            z += shift
            total = np.sum(np.square(z), axis=1)
            below += int(np.count_nonzero(total < x))
        estimate = below / n
        assert 0.0 < estimate < 1.0
        assert noncentral_chi2_cdf(x, k, mu) == pytest.approx(estimate, abs=2e-3)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            noncentral_chi2_cdf(-1.0, 4, 1.0)
        with pytest.raises(ValueError):
            noncentral_chi2_cdf(1.0, 4, -1.0)


class TestCholesky:
    def test_identity(self):
        f = cholesky(np.eye(5, dtype=complex))
        assert np.allclose(f.chol, np.eye(5))

    def test_diagonal(self):
        d = np.array([1.0, 4.0, 9.0])
        f = cholesky(np.diag(d).astype(complex))
        assert np.allclose(f.chol, np.diag(np.sqrt(d)))

    def test_reconstruction(self):
        gen = RngStream(7).generator
        b = gen.standard_normal((6, 6)) + 1j * gen.standard_normal((6, 6))
        a = b.conj().T @ b + np.eye(6)
        f = cholesky(a)
        # Upper-triangular factor with positive real diagonal.
        assert np.allclose(f.chol, np.triu(f.chol))
        assert np.all(np.real(np.diag(f.chol)) > 0)
        err = np.abs(f.chol.conj().T @ f.chol - a).max()
        assert err <= 1e-10 * np.abs(a).max()

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            cholesky(np.array([[1.0, 2.0], [0.0, 1.0]], dtype=complex))

    def test_rejects_singular(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(np.ones((3, 3), dtype=complex))

    def test_factored_is_idempotent(self):
        f = cholesky(np.eye(3, dtype=complex))
        assert f.factored() is f


class TestWhitening:
    def test_half_whiten_covariance(self):
        # v ~ CN(0, R)  ->  sqrt(2) (R_d^H)^-1 v ~ CN(0, 2I).
        gen = RngStream(11).generator
        b = gen.standard_normal((4, 4)) + 1j * gen.standard_normal((4, 4))
        r = cholesky(b.conj().T @ b + np.eye(4))
        n = 100_000
        w = (gen.standard_normal((n, 4)) + 1j * gen.standard_normal((n, 4))) / math.sqrt(2)
        v = r.sample_offset(w)
        z = r.half_whiten(v)
        cov = z.T @ z.conj() / n
        assert np.abs(cov - 2.0 * np.eye(4)).max() <= 0.05 * 2.0

    def test_sample_offset_covariance(self):
        gen = RngStream(12).generator
        b = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
        a = b.conj().T @ b + np.eye(3)
        r = cholesky(a)
        n = 200_000
        w = (gen.standard_normal((n, 3)) + 1j * gen.standard_normal((n, 3))) / math.sqrt(2)
        v = r.sample_offset(w)
        cov = v.T @ v.conj() / n
        assert np.abs(cov - a).max() <= 0.05 * np.abs(a).max()

    def test_unfactored_raises(self):
        m = HermitianMatrix(entries=np.eye(2, dtype=complex))
        with pytest.raises(ValueError):
            m.half_whiten(np.zeros(2, dtype=complex))


class TestSampling:
    def test_zero_variance(self):
        x = sample_complex_gaussian(RngStream(1), 0.0, size=100)
        assert np.all(x == 0)

    def test_mean_power(self):
        x = sample_complex_gaussian(RngStream(2), 2.0, size=1_000_000)
        assert np.mean(np.abs(x) ** 2) == pytest.approx(2.0, abs=0.01)

    def test_determinism(self):
        a = sample_complex_gaussian(RngStream(5, 3), 1.0, size=64)
        b = sample_complex_gaussian(RngStream(5, 3), 1.0, size=64)
        assert np.array_equal(a, b)

    def test_stream_independence(self):
        a = sample_complex_gaussian(RngStream(5, 0), 1.0, size=100_000)
        b = sample_complex_gaussian(RngStream(5, 1), 1.0, size=100_000)
        rho = np.abs(np.mean(a * b.conj()))
        assert rho < 0.01

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            sample_complex_gaussian(RngStream(1), -1.0)


def test_simpson_oracle_self_check():
    # The quadrature itself must integrate a known polynomial exactly.
    val = adaptive_simpson(lambda t: 3.0 * t**2, 0.0, 2.0)
    assert val == pytest.approx(8.0, abs=1e-12)
    assert chi2_pdf(-1.0, 4) == 0.0
