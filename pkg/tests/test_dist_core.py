import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from evimm.dist_core import (
    GammaParams,
    GpdParams,
    gamma_cdf,
    gamma_logpdf,
    gamma_pdf,
    gamma_quantile,
    gamma_sf,
    gpd_cdf,
    gpd_logpdf,
    gpd_pdf,
    gpd_quantile,
    gpd_sf,
    log_gammainc_p,
    log_gammainc_q,
    regularized_gamma_p,
    regularized_gamma_q,
)
from evimm.exceptions import DomainError

ETAS = (0.5, 1.0, 2.0, 5.0)
XI_GRID = (-0.4, -0.2, 0.0, 0.2, 0.5)
Q_GRID = np.array([1e-6, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 0.999999])


class TestIncompleteGamma:
    @pytest.mark.parametrize("a", [0.05, 0.5, 1.0, 2.5, 10.0, 100.0])
    def test_against_scipy(self, a):
        x = np.concatenate([np.geomspace(1e-8, 1e3, 200), [a, a + 1]])
        P = regularized_gamma_p(a, x)
        Q = regularized_gamma_q(a, x)
        np.testing.assert_allclose(P, special.gammainc(a, x), rtol=1e-12, atol=1e-300)
        np.testing.assert_allclose(Q, special.gammaincc(a, x), rtol=1e-11, atol=1e-300)

    def test_complement(self):
        x = np.linspace(0.01, 30, 100)
        np.testing.assert_allclose(regularized_gamma_p(3.3, x) + regularized_gamma_q(3.3, x), 1.0, atol=1e-14)

    def test_logs_in_the_far_tail(self):
        # Q underflows to 0 in linear space well before its log does.
        assert log_gammainc_q(2.0, 800.0) == pytest.approx(math.log(801.0) - 800.0, rel=1e-12)
        assert log_gammainc_p(3.0, 1e-3) == pytest.approx(math.log(special.gammainc(3.0, 1e-3)), rel=1e-10)

    def test_zero(self):
        assert regularized_gamma_p(2.0, 0.0) == 0.0
        assert regularized_gamma_q(2.0, 0.0) == 1.0


class TestGamma:
    def test_examples(self):
        assert gamma_pdf(5.0, GammaParams(1, 5)) == pytest.approx(math.exp(-1) / 5, rel=1e-14)
        assert gamma_pdf(1e-300, GammaParams(1, 5)) == pytest.approx(0.2)
        assert gamma_pdf(2.0, GammaParams(2, 1)) == pytest.approx(2 * math.exp(-2), rel=1e-14)
        assert gamma_cdf(5.0, GammaParams(1, 5)) == pytest.approx(1 - math.exp(-1), rel=1e-14)
        assert gamma_cdf(0.0, GammaParams(1, 5)) == 0.0
        assert gamma_cdf(5 * math.log(8), GammaParams(1, 5)) == pytest.approx(0.875, abs=1e-14)
        assert gamma_quantile(0.0, GammaParams(2, 3)) == 0.0
        assert gamma_quantile(0.875, GammaParams(1, 5)) == pytest.approx(10.39721, abs=1e-5)
        assert gamma_quantile(5 / 6, GammaParams(1, 5)) == pytest.approx(5 * math.log(6), rel=1e-13)

    def test_params_invariants(self):
        p = GammaParams(2.0, 3.0)
        assert p.mean == 6.0 and p.variance == 18.0
        for bad in [(0, 1), (1, 0), (-1, 2), (math.nan, 1)]:
            with pytest.raises(DomainError):
                GammaParams(*bad)

    @pytest.mark.parametrize("eta", ETAS)
    def test_against_scipy(self, eta):
        p = GammaParams(eta, 5.0)
        x = np.geomspace(1e-4, 200, 300)
        ref = stats.gamma(eta, scale=5.0)
        np.testing.assert_allclose(gamma_pdf(x, p), ref.pdf(x), rtol=1e-12)
        np.testing.assert_allclose(gamma_logpdf(x, p), ref.logpdf(x), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(gamma_cdf(x, p), ref.cdf(x), rtol=1e-12, atol=1e-300)
        np.testing.assert_allclose(gamma_sf(x, p), ref.sf(x), rtol=1e-11, atol=1e-300)
        np.testing.assert_allclose(gamma_quantile(Q_GRID, p), ref.ppf(Q_GRID), rtol=1e-10)

    @pytest.mark.parametrize("eta", ETAS)
    def test_round_trip(self, eta):
        p = GammaParams(eta, 5.0)
        assert np.max(np.abs(gamma_cdf(gamma_quantile(Q_GRID, p), p) - Q_GRID)) < 1e-10

    @pytest.mark.parametrize("eta", ETAS)
    def test_normalization(self, eta):
        p = GammaParams(eta, 5.0)
        total = sum(integrate.quad(lambda t: gamma_pdf(t, p), a, b, limit=200)[0]
                    for a, b in [(0, 1), (1, 50), (50, np.inf)])
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_monotone(self):
        p = GammaParams(0.5, 5.0)
        c = gamma_cdf(np.linspace(0, 100, 10_000), p)
        assert np.all(np.diff(c) >= 0)

    def test_fd_matches_pdf(self):
        p = GammaParams(2.0, 5.0)
        x = np.linspace(0.5, 40, 50)
        h = 1e-5 * x
        fd = (gamma_cdf(x + h, p) - gamma_cdf(x - h, p)) / (2 * h)
        np.testing.assert_allclose(fd, gamma_pdf(x, p), rtol=1e-4)

    def test_domain(self):
        p = GammaParams(1, 5)
        with pytest.raises(DomainError):
            gamma_pdf(0.0, p)
        with pytest.raises(DomainError):
            gamma_pdf(-1.0, p)
        with pytest.raises(DomainError):
            gamma_cdf(-1.0, p)
        for q in (1.0, -0.1, 1.5):
            with pytest.raises(DomainError):
                gamma_quantile(q, p)

    @settings(max_examples=200, deadline=None)
    @given(eta=st.floats(0.05, 50), q=st.floats(1e-9, 1 - 1e-9))
    def test_round_trip_property(self, eta, q):
        p = GammaParams(eta, 2.0)
        assert abs(gamma_cdf(gamma_quantile(q, p), p) - q) < 1e-10


class TestGpd:
    def test_examples(self):
        assert gpd_pdf(3.0, GpdParams(0.3, 2.0, 3.0)) == pytest.approx(0.5)
        assert gpd_pdf(5.0, GpdParams(0.0, 5.0)) == pytest.approx(math.exp(-1) / 5, rel=1e-14)
        assert gpd_pdf(5.0, GpdParams(0.2, 5.0)) == pytest.approx(0.2 * 1.2 ** -6, rel=1e-14)
        assert gpd_pdf(5.0, GpdParams(0.2, 5.0)) == pytest.approx(0.0669796, abs=1e-7)
        assert gpd_cdf(2.0, GpdParams(0.1, 1.0, 2.0)) == 0.0
        assert gpd_cdf(5.0, GpdParams(0.0, 5.0)) == pytest.approx(1 - math.exp(-1), rel=1e-14)
        assert gpd_cdf(25.0, GpdParams(-0.2, 5.0)) == 1.0
        assert gpd_quantile(0.0, GpdParams(0.2, 5.0, 10.3972)) == 10.3972
        assert gpd_quantile(0.5, GpdParams(0.2, 5.0, 10.3972)) == pytest.approx(10.3972 + 25 * (2 ** 0.2 - 1), rel=1e-14)
        assert gpd_quantile(0.5, GpdParams(0.2, 5.0, 10.3972)) == pytest.approx(14.11466, abs=1e-5)
        assert gpd_quantile(0.9, GpdParams(0.0, 5.0)) == pytest.approx(5 * math.log(10), rel=1e-14)

    @pytest.mark.parametrize("xi", XI_GRID)
    def test_against_scipy(self, xi):
        p = GpdParams(xi, 5.0, 2.0)
        ref = stats.genpareto(xi, loc=2.0, scale=5.0)
        top = p.upper_endpoint if xi < 0 else 200.0
        x = np.linspace(2.0, top, 400)[:-1]
        np.testing.assert_allclose(gpd_pdf(x, p), ref.pdf(x), rtol=1e-12)
        np.testing.assert_allclose(gpd_cdf(x, p), ref.cdf(x), rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(gpd_sf(x, p), ref.sf(x), rtol=1e-11, atol=1e-300)
        np.testing.assert_allclose(gpd_quantile(Q_GRID, p), ref.ppf(Q_GRID), rtol=1e-12)

    @pytest.mark.parametrize("xi", XI_GRID)
    def test_round_trip(self, xi):
        p = GpdParams(xi, 5.0, 1.0)
        assert np.max(np.abs(gpd_cdf(gpd_quantile(Q_GRID, p), p) - Q_GRID)) < 1e-10

    @pytest.mark.parametrize("xi", XI_GRID)
    def test_normalization(self, xi):
        p = GpdParams(xi, 5.0, 1.0)
        top = p.upper_endpoint if xi < 0 else np.inf
        total = integrate.quad(lambda t: gpd_pdf(t, p), 1.0, top, limit=200)[0]
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_xi_continuity(self):
        x = np.linspace(0, 200, 2001)
        a = gpd_cdf(x, GpdParams(1e-9, 5.0))
        b = gpd_cdf(x, GpdParams(0.0, 5.0))
        assert np.max(np.abs(a - b)) < 1e-6
        # Either side of the branch switch.
        c = gpd_cdf(x, GpdParams(1.01e-8, 5.0))
        assert np.max(np.abs(c - b)) < 1e-6
        np.testing.assert_allclose(gpd_pdf(x, GpdParams(-1e-9, 5.0)), gpd_pdf(x, GpdParams(0.0, 5.0)), rtol=1e-6)

    def test_endpoint_handling(self):
        p = GpdParams(-0.2, 5.0, 3.0)
        top = p.upper_endpoint
        assert top == pytest.approx(28.0)
        assert gpd_cdf(top - 1e-13, p) == 1.0
        assert gpd_sf(top, p) == 0.0
        with pytest.raises(DomainError):
            gpd_pdf(top + 1e-6, p)
        assert gpd_cdf(top + 10, p) == 1.0

    def test_xi_minus_one(self):
        p = GpdParams(-1.0, 2.0)
        x = np.linspace(0, 1.99, 10)
        np.testing.assert_allclose(gpd_pdf(x, p), 0.5)
        np.testing.assert_allclose(gpd_cdf(x, p), x / 2, atol=1e-15)

    def test_domain(self):
        p = GpdParams(0.1, 1.0, 5.0)
        with pytest.raises(DomainError):
            gpd_cdf(4.9, p)
        with pytest.raises(DomainError):
            gpd_logpdf(4.9, p)
        with pytest.raises(DomainError):
            gpd_quantile(1.0, p)
        with pytest.raises(DomainError):
            GpdParams(0.1, 0.0)

    def test_fd_matches_pdf(self):
        for xi in XI_GRID:
            p = GpdParams(xi, 5.0)
            top = p.upper_endpoint if xi < 0 else 60.0
            x = np.linspace(0.5, 0.9 * top, 40)
            h = 1e-5 * x
            fd = (gpd_cdf(x + h, p) - gpd_cdf(x - h, p)) / (2 * h)
            np.testing.assert_allclose(fd, gpd_pdf(x, p), rtol=1e-4)

    def test_monotone(self):
        for xi in XI_GRID:
            p = GpdParams(xi, 5.0)
            top = p.upper_endpoint if xi < 0 else 500.0
            assert np.all(np.diff(gpd_cdf(np.linspace(0, top, 10_000), p)) >= 0)

    @settings(max_examples=200, deadline=None)
    @given(xi=st.floats(-0.9, 1.5), q=st.floats(0, 1 - 1e-9))
    def test_round_trip_property(self, xi, q):
        p = GpdParams(xi, 3.0, 1.0)
        assert abs(gpd_cdf(gpd_quantile(q, p), p) - q) < 1e-10
