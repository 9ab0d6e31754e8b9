import math

import numpy as np
import pytest
from scipy import stats

from evimm.dist_core import GammaParams, gpd_quantile
from evimm.exceptions import DomainError
from evimm.mixture import EvmmParams, evimm_cdf, evmm_cdf, mass_below_threshold
from evimm.simulate import SeedSpec, evimm_from_uniforms, evmm_from_uniforms, sample, sample_evimm, sample_evmm

from conftest import design


def test_case_one_is_exact_zero(table1):
    x = evimm_from_uniforms([0.5 * table1.alpha, 0.0, table1.alpha], table1)
    assert np.all(x == 0.0) and not np.any(np.signbit(x))


def test_case_three_matches_gpd_quantile(table1):
    cu = mass_below_threshold(table1)
    x = evimm_from_uniforms([cu + 0.5 * (1 - cu)], table1)[0]
    assert x == pytest.approx(gpd_quantile(0.5, table1.tail), rel=1e-14)
    assert x == pytest.approx(table1.u + 25 * (2 ** 0.2 - 1), rel=1e-13)


def test_evmm_injected_median():
    p = EvmmParams.from_values(1, 5, 100.0, 0.1, 5)
    assert evmm_from_uniforms([0.5], p)[0] == pytest.approx(5 * math.log(2), rel=1e-14)


def test_cases_partition_support(table1):
    U = np.linspace(0, 1, 100_001)[:-1]
    x = evimm_from_uniforms(U, table1)
    cu = mass_below_threshold(table1)
    bulk = (U > table1.alpha) & (U <= cu)
    assert np.all((x[bulk] > 0) & (x[bulk] < table1.u))
    assert np.all(x[U > cu] >= table1.u)
    assert np.all(np.diff(x) >= 0)


def test_uniform_domain(table1):
    with pytest.raises(DomainError):
        evimm_from_uniforms([1.0], table1)
    with pytest.raises(DomainError):
        sample_evimm(0, table1)


def test_determinism_and_streams(table1):
    a = sample_evimm(1000, table1, SeedSpec(7, 3)).values
    b = sample_evimm(1000, table1, SeedSpec(7, 3)).values
    c = sample_evimm(1000, table1, SeedSpec(7, 4)).values
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)
    # Integer seeds mean stream 0.
    assert np.array_equal(sample_evimm(50, table1, 7).values, sample_evimm(50, table1, SeedSpec(7, 0)).values)


def test_streams_uncorrelated(table1):
    a = SeedSpec(11, 0).generator().random(20_000)
    b = SeedSpec(11, 1).generator().random(20_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(20_000)


def test_seed_validation():
    with pytest.raises(DomainError):
        SeedSpec(-1, 0)
    with pytest.raises(DomainError):
        SeedSpec(0, -2)
    SeedSpec(2**64 - 1, 0).generator().random()


def test_zero_fraction(table1):
    d = sample_evimm(100_000, table1, SeedSpec(1, 0))
    assert abs(d.n_zero / d.n - 0.2) <= 4 * math.sqrt(0.16 / 1e5)


def test_evmm_ks_and_no_zeros():
    p = EvmmParams.from_values(1, 5, 5 * math.log(10), 0.2, 5)
    d = sample_evmm(100_000, p, SeedSpec(2, 0))
    assert d.n_zero == 0
    ks = stats.kstest(d.values, lambda t: evmm_cdf(t, p))
    assert ks.statistic < 1.63 / math.sqrt(d.n)


def test_evmm_param_mode_sampler():
    p = EvmmParams.from_values(2, 3, 8.0, 0.1, 2, phi_u=0.3)
    d = sample_evmm(50_000, p, SeedSpec(3, 0))
    assert abs(np.mean(d.values >= p.u) - 0.3) < 4 * math.sqrt(0.21 / 5e4)
    assert stats.kstest(d.values, lambda t: evmm_cdf(t, p)).pvalue > 0.01


@pytest.mark.parametrize("alpha,xi", [(0.1, -0.2), (0.4, 0.2)])
def test_positive_part_ks(alpha, xi):
    p = design(alpha, xi)
    d = sample_evimm(20_000, p, SeedSpec(5, 0))
    cond = lambda t: (evimm_cdf(t, p) - alpha) / (1 - alpha)
    assert stats.kstest(d.positives, cond).pvalue > 0.01


def test_generic_sample_dispatch(table1):
    assert sample(10, table1, 1).n == 10
    with pytest.raises(TypeError):
        sample(10, GammaParams(1, 1), 1)
