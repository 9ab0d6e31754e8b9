import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import design
from evimm import EVIMM, EVMM, GPDFixedThreshold
from evimm.diagnostics import fit_gpd_fixed
from evimm.dist_core import GpdParams, gpd_quantile
from evimm.fit import FitConfig, fit_evimm
from evimm.mixture import evimm_quantile, evmm_pdf
from evimm.returnlevel import return_level
from evimm.simulate import SeedSpec, sample_evimm

KW = dict(n_restarts=1, max_candidates=20)


@pytest.fixture(scope="module")
def data():
    return sample_evimm(500, design(0.2, 0.2), SeedSpec(21, 0)).values


@pytest.fixture(scope="module")
def model(data):
    return EVIMM(**KW).fit(data)


def test_params_roundtrip():
    m = EVMM(mode="param", min_tail=7)
    c = clone(m)
    assert c.get_params() == m.get_params()
    assert c.get_params()["mode"] == "param" and c.min_tail == 7
    assert EVIMM().set_params(n_restarts=2).n_restarts == 2


def test_matches_functional_api(model, data):
    r = fit_evimm(data, FitConfig(n_restarts=1, max_candidates=20))
    assert model.params_ == r.params
    assert model.alpha_ == r.estimates["alpha"] and model.u_ == r.estimates["u"]
    assert model.loglik_ == r.loglik and model.converged_
    assert set(model.std_errors_) == set(r.estimates)


def test_score_is_mean_loglik(model, data):
    s = model.score_samples(data)
    assert model.score(data) == pytest.approx(s.mean())
    assert s.sum() == pytest.approx(model.loglik_, rel=1e-10)
    assert model.score_samples(np.array([-1.0]))[0] == -np.inf


def test_quantile_and_return_level(model):
    q = np.array([0.1, 0.5, 0.99])
    np.testing.assert_array_equal(model.quantile(q), evimm_quantile(q, model.params_))
    assert model.return_level(100) == return_level(100, model.params_)
    assert model.cdf(model.quantile(0.95)) == pytest.approx(0.95, abs=1e-10)
    with pytest.raises(Exception):
        model.quantile(1.5)


def test_sample_is_seeded(model):
    a = model.sample(50, random_state=3)
    assert np.array_equal(a, model.sample(50, random_state=3))
    assert a.shape == (50,) and np.all(a >= 0)


def test_input_validation(data):
    m = EVIMM(**KW).fit(data.reshape(-1, 1))
    assert m.n_features_in_ == 1
    with pytest.raises(ValueError):
        EVIMM().fit(np.array([1.0, np.nan, 2.0]))
    with pytest.raises(ValueError):
        EVIMM().fit(np.ones((5, 2)))
    with pytest.raises(NotFittedError):
        EVIMM().quantile(0.5)


def test_evmm_drops_zeros(data):
    m = EVMM(**KW).fit(data)
    assert m.result_.n_dropped_zeros == int(np.sum(data == 0))
    assert not hasattr(m, "alpha_")
    pos = data[data > 0]
    np.testing.assert_allclose(m.score_samples(pos), np.log(evmm_pdf(pos, m.params_)), rtol=1e-14)


def test_gpd_fixed_estimator():
    x = 2.0 + gpd_quantile(np.random.default_rng(2).random(800), GpdParams(0.2, 5.0))
    m = GPDFixedThreshold(u=2.0).fit(x)
    r = fit_gpd_fixed(x, 2.0, FitConfig())
    assert (m.xi_, m.sigma_) == (r.params.xi, r.params.sigma)
    assert m.quantile(0.5) == pytest.approx(gpd_quantile(0.5, r.params))
    assert clone(m).get_params() == {"u": 2.0, "min_tail": 10, "compute_se": True}
