"""Scikit-learn style estimators over the functional fitting API.

>>> from evimm import EVIMM
>>> model = EVIMM().fit(x)                       # doctest: +SKIP
>>> model.return_level(100)                      # doctest: +SKIP
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_probability, check_sample
from .diagnostics import fit_gpd_fixed
from .dist_core import gpd_cdf, gpd_logpdf, gpd_quantile
from .fit import Dataset, FitConfig, fit_evimm, fit_evmm
from .mixture import (
    EvimmParams,
    TailFractionMode,
    evimm_density,
    evmm_pdf,
    quantile,
    cdf,
)
from .returnlevel import return_level
from .simulate import SeedSpec, sample


class _MixtureBase(BaseEstimator):
    def __init__(self, min_bulk=10, min_tail=10, q_lo=0.5, q_hi=0.98, max_candidates=60,
                 n_restarts=4, max_iter=2000, compute_se=True, zero_tol=0.0, random_state=0):
        self.min_bulk = min_bulk
        self.min_tail = min_tail
        self.q_lo = q_lo
        self.q_hi = q_hi
        self.max_candidates = max_candidates
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.compute_se = compute_se
        self.zero_tol = zero_tol
        self.random_state = random_state

    def _config(self) -> FitConfig:
        return FitConfig(min_bulk=self.min_bulk, min_tail=self.min_tail, q_lo=self.q_lo, q_hi=self.q_hi,
                         max_candidates=self.max_candidates, n_restarts=self.n_restarts,
                         max_iter=self.max_iter, seed=int(self.random_state or 0), compute_se=self.compute_se)

    def _store(self, result):
        self.result_ = result
        self.params_ = result.params
        self.n_features_in_ = 1
        for k, v in result.estimates.items():
            setattr(self, f"{k}_", v)
        self.std_errors_ = result.std_errors
        self.loglik_ = result.loglik
        self.converged_ = result.converged
        return self

    def _log_density(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score_samples(self, X) -> np.ndarray:
        """Per-observation log-likelihood contribution."""
        check_is_fitted(self, "params_")
        x = check_sample(X)
        with np.errstate(divide="ignore"):
            return self._log_density(x)

    def score(self, X, y=None) -> float:
        """Mean log-likelihood per observation."""
        return float(np.mean(self.score_samples(X)))

    def cdf(self, x):
        check_is_fitted(self, "params_")
        return cdf(x, self.params_)

    def quantile(self, q):
        check_is_fitted(self, "params_")
        return quantile(check_probability(q), self.params_)

    def return_level(self, T, obs_per_period: float = 1.0):
        check_is_fitted(self, "params_")
        return return_level(T, self.params_, obs_per_period)

    def sample(self, n_samples: int = 1, random_state=None) -> np.ndarray:
        check_is_fitted(self, "params_")
        seed = self.random_state if random_state is None else random_state
        return sample(n_samples, self.params_, SeedSpec(int(seed or 0), 0)).values


class EVIMM(_MixtureBase):
    """Point mass at zero, gamma bulk below ``u``, GPD tail above it.

    Fitted attributes mirror the parameter names with a trailing underscore
    (``alpha_``, ``eta_``, ``beta_``, ``u_``, ``xi_``, ``sigma_``).
    """

    def fit(self, X, y=None):
        x = check_sample(X)
        return self._store(fit_evimm(Dataset(x, self.zero_tol), self._config()))

    def _log_density(self, x):
        p: EvimmParams = self.params_
        out = np.log(evimm_density(x, p))
        out[x == 0] = np.log(p.alpha)
        out[x < 0] = -np.inf
        return out


class EVMM(_MixtureBase):
    """Gamma bulk spliced to a GPD tail, fitted to the positive observations.

    ``mode`` is ``"bulk"`` (tail fraction implied by the gamma) or ``"param"``
    (free tail fraction).
    """

    def __init__(self, mode="bulk", min_bulk=10, min_tail=10, q_lo=0.5, q_hi=0.98, max_candidates=60,
                 n_restarts=4, max_iter=2000, compute_se=True, zero_tol=0.0, random_state=0):
        super().__init__(min_bulk, min_tail, q_lo, q_hi, max_candidates, n_restarts, max_iter,
                         compute_se, zero_tol, random_state)
        self.mode = mode

    def fit(self, X, y=None):
        x = check_sample(X)
        return self._store(fit_evmm(Dataset(x, self.zero_tol), TailFractionMode(self.mode), self._config()))

    def _log_density(self, x):
        out = np.full(x.shape, -np.inf)
        ok = x >= 0
        out[ok] = np.log(evmm_pdf(x[ok], self.params_))
        return out


class GPDFixedThreshold(BaseEstimator):
    """GPD fitted to the exceedances of a known threshold ``u``.

    ``score_samples``, ``cdf`` and ``quantile`` refer to the conditional law of
    the exceedances, i.e. of ``X`` given ``X > u``.
    """

    def __init__(self, u=0.0, min_tail=10, compute_se=True):
        self.u = u
        self.min_tail = min_tail
        self.compute_se = compute_se

    def fit(self, X, y=None):
        x = check_sample(X)
        r = fit_gpd_fixed(Dataset(x), float(self.u), FitConfig(min_tail=self.min_tail, compute_se=self.compute_se))
        self.result_ = r
        self.params_ = r.params
        self.xi_ = r.params.xi
        self.sigma_ = r.params.sigma
        self.std_errors_ = r.std_errors
        self.converged_ = r.converged
        self.n_features_in_ = 1
        return self

    def score_samples(self, X):
        check_is_fitted(self, "params_")
        return np.asarray(gpd_logpdf(check_sample(X), self.params_))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def cdf(self, x):
        check_is_fitted(self, "params_")
        return gpd_cdf(x, self.params_)

    def quantile(self, q):
        check_is_fitted(self, "params_")
        return gpd_quantile(check_probability(q), self.params_)
