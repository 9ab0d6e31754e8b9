"""Likelihoods and maximum-likelihood fitting for EVIMM, EVMM and the GPD.

The EVIMM log-likelihood factors into an ``alpha`` term, a right-censored gamma
term for the bulk and a GPD term for the exceedances. The fitter leans on that:
``alpha`` has the closed form ``n_zero / n``; for each candidate threshold the
bulk and tail pieces are maximised separately; the best candidates then seed a
joint Nelder-Mead over all five continuous parameters. The likelihood jumps
whenever an observation crosses ``u``, which is why the threshold is profiled
on a grid instead of being left to a smooth optimiser.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .dist_core import XI_ZERO, GammaParams, GpdParams, log_gammainc_p, log_gammainc_q
from .exceptions import DomainError, InsufficientData, NoZeros, SingularInformation
from .mixture import EvimmParams, EvmmParams, TailFractionMode

_NEG_INF = -math.inf


class Dataset:
    """Immutable sample of nonnegative observations.

    Parameters
    ----------
    values : array_like
        Observations. Values with ``|x| <= zero_tol`` become exact zeros.
    zero_tol : float, default 0
        Coercion tolerance for near-zero readings.
    """

    __slots__ = ("values", "positives", "n", "n_zero")

    def __init__(self, values, zero_tol: float = 0.0):
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise InsufficientData("dataset is empty")
        if not np.all(np.isfinite(arr)):
            raise DomainError("dataset contains non-finite values")
        if zero_tol > 0:
            arr = np.where(np.abs(arr) <= zero_tol, 0.0, arr)
        if np.any(arr < 0):
            raise DomainError("dataset contains negative values")
        arr.flags.writeable = False
        pos = np.sort(arr[arr > 0])
        pos.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "n", int(arr.size))
        object.__setattr__(self, "n_zero", int(arr.size - pos.size))

    def __setattr__(self, name, value):
        raise AttributeError("Dataset is immutable")

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, n_zero={self.n_zero})"

    @property
    def sorted(self) -> np.ndarray:
        return np.sort(self.values)

    @property
    def n_positive(self) -> int:
        return self.n - self.n_zero

    def partition(self, u: float) -> tuple[int, int, int]:
        """Counts ``(zeros, 0 < x < u, x >= u)``."""
        k = int(np.searchsorted(self.positives, u, side="left"))
        return self.n_zero, k, self.n_positive - k


def as_dataset(data) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset(data)


@dataclass(frozen=True)
class FitConfig:
    """Fitter settings.

    ``q_lo``/``q_hi`` bound the threshold in empirical quantiles of the positive
    observations; ``min_bulk``/``min_tail`` are the smallest admissible counts
    below and at-or-above the threshold.
    """

    min_bulk: int = 10
    min_tail: int = 10
    q_lo: float = 0.5
    q_hi: float = 0.98
    max_candidates: int = 60
    n_restarts: int = 4
    max_iter: int = 2000
    ftol: float = 1e-8
    xtol: float = 1e-6
    xi_min: float = -1.0
    seed: int = 0
    compute_se: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class FitResult:
    model: str
    params: object
    loglik: float
    converged: bool
    n: int
    n_zero: int
    n_tail: int
    std_errors: Optional[dict] = None
    singular_information: bool = False
    n_iter: int = 0
    restarts: int = 0
    n_dropped_zeros: int = 0
    config: Optional[FitConfig] = None
    extra: dict = field(default_factory=dict)

    @property
    def estimates(self) -> dict:
        return self.params.vector() if hasattr(self.params, "vector") else _gpd_vector(self.params)

    def as_dict(self) -> dict:
        doc = {
            "model": self.model,
            "estimates": self.estimates,
            "std_errors": self.std_errors,
            "singular_information": self.singular_information,
            "loglik": self.loglik,
            "n": self.n,
            "n_zero": self.n_zero,
            "n_tail": self.n_tail,
            "converged": self.converged,
            "optimizer": {"iterations": self.n_iter, "restarts": self.restarts},
            "config": self.config.as_dict() if self.config else None,
        }
        if self.n_dropped_zeros:
            doc["n_dropped_zeros"] = self.n_dropped_zeros
        doc.update(self.extra)
        return doc


def _gpd_vector(p: GpdParams) -> dict:
    return {"u": p.u, "xi": p.xi, "sigma": p.sigma}


# ---------------------------------------------------------------------------
# likelihoods


def _gpd_loglik_excess(y: np.ndarray, xi: float, sigma: float) -> float:
    """GPD log-likelihood of excesses ``y >= 0``; ``-inf`` off the support."""
    if sigma <= 0 or not math.isfinite(sigma):
        return _NEG_INF
    m = y.size
    if m == 0:
        return 0.0
    if abs(xi) < XI_ZERO:
        return -m * math.log(sigma) - float(y.sum()) / sigma
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.float64(xi) / sigma
        t = r * y
    if not math.isfinite(r):
        return _NEG_INF
    if xi < 0 and float(t.min()) <= -1.0:
        return _NEG_INF
    return -m * math.log(sigma) - (1.0 + 1.0 / xi) * float(np.log1p(t).sum())


def gpd_log_likelihood(p: GpdParams, exceedances) -> float:
    """Log-likelihood of observations at or above ``p.u``."""
    x = np.asarray(exceedances, dtype=float)
    if np.any(x < p.u):
        raise DomainError("observations below the threshold")
    return _gpd_loglik_excess(x - p.u, p.xi, p.sigma)


def log_likelihood(p: EvimmParams, d) -> float:
    """EVIMM log-likelihood; returns ``-inf`` outside the tail's support."""
    d = as_dataset(d)
    n0, k, nb = d.partition(p.u)
    xa = d.positives[:k]
    xb = d.positives[k:]
    ll = 0.0
    if n0:
        ll += n0 * math.log(p.alpha)
    ll += k * math.log1p(-p.alpha)
    if k:
        eta, beta = p.eta, p.beta
        ll += (eta - 1.0) * float(np.log(xa).sum()) - float(xa.sum()) / beta - k * (math.lgamma(eta) + eta * math.log(beta))
    if nb:
        ll += nb * (math.log1p(-p.alpha) + log_gammainc_q(p.eta, p.u / p.beta))
        ll += _gpd_loglik_excess(xb - p.u, p.xi, p.sigma)
    return ll


def evmm_log_likelihood(p: EvmmParams, d) -> float:
    """EVMM log-likelihood of the positive observations (zeros are ignored)."""
    d = as_dataset(d)
    _, k, nb = d.partition(p.u)
    xa = d.positives[:k]
    xb = d.positives[k:]
    ll = 0.0
    eta, beta = p.eta, p.beta
    if k:
        ll += (eta - 1.0) * float(np.log(xa).sum()) - float(xa.sum()) / beta - k * (math.lgamma(eta) + eta * math.log(beta))
    if p.mode is TailFractionMode.PARAMETERIZED:
        if k:
            ll += k * (math.log1p(-p.phi_u) - log_gammainc_p(eta, p.u / beta))
        if nb:
            ll += nb * math.log(p.phi_u)
    elif nb:
        ll += nb * log_gammainc_q(eta, p.u / beta)
    if nb:
        ll += _gpd_loglik_excess(xb - p.u, p.xi, p.sigma)
    return ll


def model_log_likelihood(p, d) -> float:
    if isinstance(p, EvimmParams):
        return log_likelihood(p, d)
    if isinstance(p, EvmmParams):
        return evmm_log_likelihood(p, d)
    if isinstance(p, GpdParams):
        d = as_dataset(d)
        return gpd_log_likelihood(p, d.values[d.values > p.u])
    raise TypeError(type(p).__name__)


# ---------------------------------------------------------------------------
# Nelder-Mead


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nit: int
    converged: bool
    diameter: float


def nelder_mead(
    func: Callable[[np.ndarray], float],
    x0,
    step=0.1,
    ftol: float = 1e-8,
    xtol: float = 1e-6,
    max_iter: int = 2000,
) -> SimplexResult:
    """Minimise ``func`` with the Nelder-Mead simplex.

    Non-finite objective values count as worse than any finite value. The run
    stops once the relative spread of function values is below ``ftol`` and the
    simplex diameter is below ``xtol`` (or the simplex has collapsed).
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    steps = np.broadcast_to(np.asarray(step, dtype=float), (dim,))

    def f(x):
        v = func(x)
        return v if v == v and v != math.inf else math.inf

    pts = [x0.copy()]
    for i in range(dim):
        x = x0.copy()
        x[i] += steps[i]
        pts.append(x)
    vals = [f(p) for p in pts]
    nit = 0
    converged = False
    diameter = math.inf
    while nit < max_iter:
        order = sorted(range(dim + 1), key=vals.__getitem__)
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        best, worst = vals[0], vals[-1]
        diameter = max(float(np.max(np.abs(p - pts[0]))) for p in pts[1:])
        if math.isfinite(worst):
            spread_ok = worst - best <= ftol * (abs(best) + 1e-12)
        else:
            spread_ok = False
        if (spread_ok and diameter <= xtol) or diameter <= 1e-12:
            converged = True
            break
        nit += 1
        centroid = np.mean(pts[:-1], axis=0)
        xr = centroid + (centroid - pts[-1])
        fr = f(xr)
        if fr < vals[0]:
            xe = centroid + 2.0 * (centroid - pts[-1])
            fe = f(xe)
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                pts[-1], vals[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (pts[-1] - centroid)
            fc = f(xc)
            if fc < vals[-1]:
                pts[-1], vals[-1] = xc, fc
                continue
        for i in range(1, dim + 1):
            pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
            vals[i] = f(pts[i])
    i = int(np.argmin(vals))
    return SimplexResult(pts[i], vals[i], nit, converged, diameter)


# ---------------------------------------------------------------------------
# profile machinery


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _logit(p: float) -> float:
    p = min(max(p, 1e-12), 1 - 1e-12)
    return math.log(p / (1.0 - p))


class _Positives:
    """Sorted positive sample with prefix sums for O(1) bulk evaluations."""

    def __init__(self, x: np.ndarray):
        self.x = x
        self.m = x.size
        self.csum = np.concatenate(([0.0], np.cumsum(x)))
        self.clog = np.concatenate(([0.0], np.cumsum(np.log(x))))

    def split(self, u: float) -> int:
        return int(np.searchsorted(self.x, u, side="left"))

    def bulk_loglik(self, eta: float, beta: float, k: int, u: float, mode: str) -> float:
        """Gamma part of the positive-data likelihood given ``k`` points below ``u``."""
        if not (eta > 0 and beta > 0) or not (math.isfinite(eta) and math.isfinite(beta)):
            return _NEG_INF
        nb = self.m - k
        ll = (eta - 1.0) * self.clog[k] - self.csum[k] / beta - k * (math.lgamma(eta) + eta * math.log(beta))
        if mode == "param":
            if k:
                ll -= k * log_gammainc_p(eta, u / beta)
        elif nb:
            ll += nb * log_gammainc_q(eta, u / beta)
        return float(ll)

    def tail_loglik(self, xi: float, sigma: float, k: int, u: float) -> float:
        return _gpd_loglik_excess(self.x[k:] - u, xi, sigma)

    def phi_term(self, k: int) -> float:
        """Profiled tail-fraction term of the parameterized EVMM."""
        nb = self.m - k
        phi = nb / self.m
        out = nb * math.log(phi)
        if k:
            out += k * math.log1p(-phi)
        return out


@dataclass
class _Solution:
    loglik: float
    eta: float
    beta: float
    u: float
    xi: float
    sigma: float
    nit: int = 0
    converged: bool = True


def _moment_start(x: np.ndarray) -> tuple[float, float]:
    below = x[x <= np.quantile(x, 0.9)]
    if below.size < 2:
        below = x
    mean = float(below.mean())
    var = float(below.var(ddof=1)) if below.size > 1 else mean**2
    if not var > 0:
        var = mean**2
    return mean**2 / var, var / mean


def _fit_bulk(P: _Positives, k: int, u: float, mode: str, start, cfg: FitConfig):
    if k == 0:
        return 0.0, start, True, 0

    def nll(t):
        return -P.bulk_loglik(math.exp(t[0]), math.exp(t[1]), k, u, mode)

    res = nelder_mead(nll, np.log(start), step=0.1, ftol=cfg.ftol * 1e-2, xtol=cfg.xtol, max_iter=cfg.max_iter)
    return -res.fun, (math.exp(res.x[0]), math.exp(res.x[1])), res.converged, res.nit


def _fit_tail(y: np.ndarray, start, cfg: FitConfig):
    """MLE of ``(xi, sigma)`` for excesses ``y``."""
    xi_min = cfg.xi_min

    def nll(t):
        if t[0] < xi_min:
            return math.inf
        return -_gpd_loglik_excess(y, t[0], math.exp(t[1]))

    def solve(xi0, sigma0):
        if xi0 < 0 and y.size and xi0 * float(y.max()) / sigma0 <= -1.0:
            sigma0 = -xi0 * float(y.max()) * 1.1
        return nelder_mead(nll, [xi0, math.log(sigma0)], step=(0.1, 0.1), ftol=cfg.ftol * 1e-2,
                           xtol=cfg.xtol, max_iter=cfg.max_iter)

    # Few excesses can leave a second mode near xi_min, so a warm start is
    # backed up by a cold one.
    res = solve(*start)
    nit = res.nit
    ybar = float(y.mean()) if y.size else 0.0
    if ybar > 0:
        cold = solve(0.1, ybar)
        nit += cold.nit
        if cold.fun < res.fun:
            res = cold
    return -res.fun, (float(res.x[0]), math.exp(res.x[1])), res.converged, nit


def admissible_threshold_range(x: np.ndarray, cfg: FitConfig) -> tuple[float, float]:
    """Open interval of thresholds meeting the quantile and count constraints."""
    m = x.size
    if m < cfg.min_bulk + cfg.min_tail:
        raise InsufficientData(
            f"need at least {cfg.min_bulk + cfg.min_tail} positive observations, got {m}"
        )
    lo = float(np.quantile(x, cfg.q_lo))
    hi = float(np.quantile(x, cfg.q_hi))
    if cfg.min_bulk > 0:
        lo = max(lo, float(x[cfg.min_bulk - 1]))
    hi = min(hi, float(x[m - cfg.min_tail]))
    if not lo < hi:
        raise InsufficientData("no admissible threshold between the bulk and tail count limits")
    return lo, hi


def threshold_candidates(x: np.ndarray, lo: float, hi: float, cap: int) -> np.ndarray:
    """Midpoints between consecutive distinct order statistics inside ``(lo, hi)``."""
    mids = 0.5 * (x[:-1] + x[1:])
    keep = (x[:-1] < x[1:]) & (mids > lo) & (mids < hi)
    mids = mids[keep]
    if mids.size > cap:
        idx = np.unique(np.round(np.linspace(0, mids.size - 1, cap)).astype(int))
        mids = mids[idx]
    return mids


class _ProfileFitter:
    """Shared optimiser for the bulk+tail likelihood on positive data."""

    def __init__(self, x: np.ndarray, mode: str, cfg: FitConfig):
        self.P = _Positives(x)
        self.mode = mode
        self.cfg = cfg
        self.lo, self.hi = admissible_threshold_range(x, cfg)
        self.nit = 0

    def profile(self, u: float, bulk_start, tail_start) -> _Solution:
        P = self.P
        k = P.split(u)
        lb, (eta, beta), cb, nb_ = _fit_bulk(P, k, u, self.mode, bulk_start, self.cfg)
        lt, (xi, sigma), ct, nt_ = _fit_tail(P.x[k:] - u, tail_start, self.cfg)
        self.nit += nb_ + nt_
        ll = lb + lt + (P.phi_term(k) if self.mode == "param" else 0.0)
        return _Solution(ll, eta, beta, u, xi, sigma, nb_ + nt_, cb and ct)

    def joint_loglik(self, eta, beta, u, xi, sigma) -> float:
        if not (self.lo < u < self.hi) or xi < self.cfg.xi_min:
            return _NEG_INF
        P = self.P
        k = P.split(u)
        ll = P.bulk_loglik(eta, beta, k, u, self.mode)
        if ll == _NEG_INF:
            return ll
        ll += P.tail_loglik(xi, sigma, k, u)
        if self.mode == "param":
            ll += P.phi_term(k)
        return ll

    def _to_t(self, s: _Solution) -> np.ndarray:
        frac = (s.u - self.lo) / (self.hi - self.lo)
        return np.array([math.log(s.eta), math.log(s.beta), _logit(frac), s.xi, math.log(s.sigma)])

    def _from_t(self, t) -> tuple:
        u = self.lo + (self.hi - self.lo) * _sigmoid(t[2])
        return math.exp(t[0]), math.exp(t[1]), u, float(t[3]), math.exp(t[4])

    def refine(self, s: _Solution) -> _Solution:
        def nll(t):
            try:
                return -self.joint_loglik(*self._from_t(t))
            except OverflowError:
                return math.inf

        res = nelder_mead(nll, self._to_t(s), step=0.1, ftol=self.cfg.ftol, xtol=self.cfg.xtol,
                          max_iter=self.cfg.max_iter)
        self.nit += res.nit
        eta, beta, u, xi, sigma = self._from_t(res.x)
        return _Solution(-res.fun, eta, beta, u, xi, sigma, res.nit, res.converged)

    def run(self) -> tuple[_Solution, int]:
        cfg = self.cfg
        x = self.P.x
        rng = np.random.default_rng(np.random.SeedSequence(int(cfg.seed)))
        cands = threshold_candidates(x, self.lo, self.hi, cfg.max_candidates)
        if cands.size == 0:
            cands = np.array([0.5 * (self.lo + self.hi)])
        bulk0 = _moment_start(x)
        u0 = float(np.clip(np.quantile(x, 0.9), self.lo, self.hi))
        exc0 = x[x >= u0] - u0
        tail0 = (0.1, float(exc0.mean()) if exc0.size and exc0.mean() > 0 else float(x.std()))

        # coarse profile, warm-started along the grid
        sols = []
        bs, ts = bulk0, tail0
        for u in cands:
            s = self.profile(float(u), bs, ts)
            sols.append(s)
            if math.isfinite(s.loglik):
                bs, ts = (s.eta, s.beta), (s.xi, s.sigma)
        lls = np.array([s.loglik for s in sols])
        ib = int(np.argmax(lls))
        best = sols[ib]

        # full-resolution profile between the neighbours of the coarse optimum
        left = cands[ib - 1] if ib > 0 else self.lo
        right = cands[ib + 1] if ib + 1 < cands.size else self.hi
        inner = x[(x > left) & (x < right)]
        fine = np.unique(np.concatenate([inner, 0.5 * (inner[:-1] + inner[1:])]))
        fine = fine[(fine > self.lo) & (fine < self.hi)]
        for u in fine:
            s = self.profile(float(u), (best.eta, best.beta), (best.xi, best.sigma))
            if s.loglik > best.loglik:
                best = s

        # joint refinement plus random restarts around the incumbent
        cand = self.refine(best)
        if cand.loglik >= best.loglik:
            best = cand
        else:
            best.converged = best.converged and cand.converged
        restarts = 0
        scale = np.array([0.2, 0.2, 1.0, 0.1, 0.2])
        for _ in range(cfg.n_restarts):
            t = self._to_t(best) + scale * rng.standard_normal(5)
            eta, beta, u, xi, sigma = self._from_t(t)
            if xi < cfg.xi_min:
                xi = cfg.xi_min + 0.01
            start = _Solution(_NEG_INF, eta, beta, u, xi, sigma)
            if xi < 0:
                ymax = float(x[-1] - u)
                start.sigma = max(sigma, -xi * ymax * 1.05)
            cand = self.refine(start)
            restarts += 1
            if cand.loglik > best.loglik:
                best = cand
        return best, restarts


# ---------------------------------------------------------------------------
# standard errors


def numerical_hessian(func: Callable[[np.ndarray], float], x, rel_step=1e-4, abs_floor=None) -> np.ndarray:
    """Central-difference Hessian with per-coordinate step ``rel_step * |x_i|``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    floor = np.zeros(n) if abs_floor is None else np.broadcast_to(np.asarray(abs_floor, float), (n,))
    h = rel_step * np.maximum(np.abs(x), floor)
    h = np.where(h == 0, rel_step, h)
    f0 = func(x)
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (func(x + ei) - 2.0 * f0 + func(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            v = (func(x + ei + ej) - func(x + ei - ej) - func(x - ei + ej) + func(x - ei - ej)) / (4.0 * h[i] * h[j])
            H[i, j] = H[j, i] = v
    return H


def _se_from_hessian(H: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(H)):
        raise SingularInformation("non-finite information matrix")
    info = -H
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise SingularInformation("information matrix is singular") from None
    diag = np.diag(cov)
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise SingularInformation("information matrix is not positive definite")
    return np.sqrt(diag)


_XI_FLOOR = 1.0


def standard_errors(p, d) -> dict:
    """Observed-information standard errors.

    ``alpha`` (EVIMM only) uses ``sqrt(alpha (1 - alpha) / n)``, which is exact
    because the likelihood factorises. The remaining parameters come from a
    finite-difference Hessian of the log-likelihood.

    Raises
    ------
    SingularInformation
        If the observed information cannot be inverted.
    """
    d = as_dataset(d)
    if isinstance(p, EvimmParams):
        names = ["eta", "beta", "u", "xi", "sigma"]
        x0 = np.array([p.eta, p.beta, p.u, p.xi, p.sigma])

        def f(v):
            try:
                return log_likelihood(EvimmParams.from_values(p.alpha, *v), d)
            except DomainError:
                return math.nan

        se = _se_from_hessian(numerical_hessian(f, x0, abs_floor=[0, 0, 0, _XI_FLOOR, 0]))
        out = {"alpha": math.sqrt(p.alpha * (1.0 - p.alpha) / d.n)}
        out.update(dict(zip(names, map(float, se))))
        return out
    if isinstance(p, EvmmParams):
        names = ["eta", "beta", "u", "xi", "sigma"]
        vals = [p.eta, p.beta, p.u, p.xi, p.sigma]
        floor = [0, 0, 0, _XI_FLOOR, 0]
        if p.mode is TailFractionMode.PARAMETERIZED:
            names.append("phi_u")
            vals.append(p.phi_u)
            floor.append(0)

        def f(v):
            try:
                phi = v[5] if len(v) > 5 else None
                return evmm_log_likelihood(EvmmParams.from_values(*v[:5], phi_u=phi), d)
            except DomainError:
                return math.nan

        se = _se_from_hessian(numerical_hessian(f, np.array(vals), abs_floor=floor))
        return dict(zip(names, map(float, se)))
    if isinstance(p, GpdParams):
        y = d.values[d.values > p.u] - p.u

        def f(v):
            return _gpd_loglik_excess(y, v[0], v[1]) if v[1] > 0 else math.nan

        se = _se_from_hessian(numerical_hessian(f, np.array([p.xi, p.sigma]), abs_floor=[_XI_FLOOR, 0]))
        return {"xi": float(se[0]), "sigma": float(se[1])}
    raise TypeError(type(p).__name__)


def _attach_se(result: FitResult, d: Dataset, cfg: FitConfig) -> None:
    if not cfg.compute_se:
        if isinstance(result.params, EvimmParams):
            a = result.params.alpha
            result.std_errors = {"alpha": math.sqrt(a * (1 - a) / d.n)}
        return
    try:
        result.std_errors = standard_errors(result.params, d)
    except SingularInformation:
        result.singular_information = True
        if isinstance(result.params, EvimmParams):
            a = result.params.alpha
            result.std_errors = {"alpha": math.sqrt(a * (1 - a) / d.n)}
        else:
            result.std_errors = None


# ---------------------------------------------------------------------------
# public fitters


def _scaled(x: np.ndarray) -> tuple[np.ndarray, float]:
    s = float(np.median(x))
    return x / s, s


def fit_evimm(d, cfg: FitConfig | None = None) -> FitResult:
    """Maximum-likelihood fit of all six EVIMM parameters.

    Raises
    ------
    NoZeros
        The data carry no exact zeros.
    InsufficientData
        Too few positives to place an admissible threshold.
    """
    d = as_dataset(d)
    cfg = cfg or FitConfig()
    if d.n_zero == 0:
        raise NoZeros("EVIMM needs at least one exact zero; fit an EVMM instead")
    if d.n_positive < cfg.min_bulk + cfg.min_tail:
        raise InsufficientData(
            f"need at least {cfg.min_bulk + cfg.min_tail} positive observations, got {d.n_positive}"
        )
    alpha = d.n_zero / d.n
    y, s = _scaled(d.positives)
    fitter = _ProfileFitter(y, "bulk", cfg)
    sol, restarts = fitter.run()
    params = EvimmParams.from_values(alpha, sol.eta, sol.beta * s, sol.u * s, sol.xi, sol.sigma * s)
    _, _, nb = d.partition(params.u)
    result = FitResult(
        model="evimm",
        params=params,
        loglik=log_likelihood(params, d),
        converged=bool(sol.converged),
        n=d.n,
        n_zero=d.n_zero,
        n_tail=nb,
        n_iter=fitter.nit,
        restarts=restarts,
        config=cfg,
    )
    _attach_se(result, d, cfg)
    return result


def fit_evmm(d, mode: str | TailFractionMode = TailFractionMode.BULK_BASED, cfg: FitConfig | None = None) -> FitResult:
    """Maximum-likelihood EVMM fit on the positive observations.

    Zeros carry no information in a model without an atom and are dropped; the
    count is reported as ``n_dropped_zeros``.
    """
    d = as_dataset(d)
    cfg = cfg or FitConfig()
    mode = TailFractionMode(mode)
    if d.n_positive < cfg.min_bulk + cfg.min_tail:
        raise InsufficientData(
            f"need at least {cfg.min_bulk + cfg.min_tail} positive observations, got {d.n_positive}"
        )
    y, s = _scaled(d.positives)
    fitter = _ProfileFitter(y, "param" if mode is TailFractionMode.PARAMETERIZED else "bulk", cfg)
    sol, restarts = fitter.run()
    u = sol.u * s
    _, k, nb = d.partition(u)
    phi = nb / d.n_positive if mode is TailFractionMode.PARAMETERIZED else None
    params = EvmmParams.from_values(sol.eta, sol.beta * s, u, sol.xi, sol.sigma * s, phi_u=phi)
    positive = d if d.n_zero == 0 else Dataset(d.positives)
    result = FitResult(
        model="evmm-param" if phi is not None else "evmm-bulk",
        params=params,
        loglik=evmm_log_likelihood(params, positive),
        converged=bool(sol.converged),
        n=positive.n,
        n_zero=0,
        n_tail=nb,
        n_iter=fitter.nit,
        restarts=restarts,
        n_dropped_zeros=d.n_zero,
        config=cfg,
    )
    _attach_se(result, positive, cfg)
    return result


def fit_gpd_excesses(y, cfg: FitConfig | None = None, start=None):
    """MLE of ``(xi, sigma)`` for excesses over a known threshold.

    Returns ``(xi, sigma, loglik, converged, nit)``. Data without spread are
    reported as not converged.
    """
    cfg = cfg or FitConfig()
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise InsufficientData("need at least two excesses")
    s = float(y.mean())
    if not s > 0:
        return 0.0, 1.0, _NEG_INF, False, 0
    z = y / s
    xi0, sig0 = start if start is not None else (0.1, 1.0)
    best = None
    for x0 in [(xi0, sig0), (-0.2, 0.8), (0.5, 0.7)]:
        ll, (xi, sig), conv, nit = _fit_tail(z, x0, cfg)
        if best is None or ll > best[2]:
            best = (xi, sig, ll, conv, nit)
    xi, sig, ll, conv, nit = best
    degenerate = float(np.ptp(y)) == 0.0
    return xi, sig * s, _gpd_loglik_excess(y, xi, sig * s), bool(conv and not degenerate), nit
