"""Gamma and generalized Pareto building blocks.

Everything here works on plain floats or numpy arrays. The regularized
incomplete gamma function is computed in-house with the usual split between
the lower series (``x < a + 1``) and a Lentz continued fraction for the upper
tail, so that ``P`` and ``Q`` are both available to full relative precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .exceptions import DomainError

_EPS = 1e-16
_FPMIN = 1e-300
_MAXITER = 1000
_NORMAL = NormalDist()

#: Below this magnitude the GPD shape is treated as exactly zero.
XI_ZERO = 1e-8
#: Points within this distance of a bounded GPD's upper endpoint map to cdf 1.
ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class GammaParams:
    """Gamma bulk with shape ``eta`` and scale ``beta``."""

    eta: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise DomainError(f"gamma shape must be positive, got {self.eta!r}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"gamma scale must be positive, got {self.beta!r}")

    @property
    def mean(self) -> float:
        return self.eta * self.beta

    @property
    def variance(self) -> float:
        return self.eta * self.beta**2


@dataclass(frozen=True)
class GpdParams:
    """Generalized Pareto tail over threshold ``u``."""

    xi: float
    sigma: float
    u: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.xi):
            raise DomainError(f"GPD shape must be finite, got {self.xi!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"GPD scale must be positive, got {self.sigma!r}")
        if not math.isfinite(self.u):
            raise DomainError(f"GPD threshold must be finite, got {self.u!r}")

    @property
    def upper_endpoint(self) -> float:
        """Right end of the support (``inf`` unless ``xi < 0``)."""
        if self.xi < 0 and abs(self.xi) >= XI_ZERO:
            return self.u - self.sigma / self.xi
        return math.inf

    def as_dict(self) -> dict:
        return {"model": "gpd", "u": self.u, "xi": self.xi, "sigma": self.sigma}


# ---------------------------------------------------------------------------
# regularized incomplete gamma


def _series_scalar(a: float, x: float) -> float:
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAXITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total


def _contfrac_scalar(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def gammainc_pq(a: float, x: float) -> tuple[float, float]:
    """Return ``(P(a, x), Q(a, x))`` for scalar arguments."""
    if a <= 0:
        raise DomainError("incomplete gamma needs a > 0")
    if x < 0:
        raise DomainError("incomplete gamma needs x >= 0")
    if x == 0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    log_pre = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        p = math.exp(log_pre) * _series_scalar(a, x)
        p = min(p, 1.0)
        return p, 1.0 - p
    q = math.exp(log_pre) * _contfrac_scalar(a, x)
    q = min(q, 1.0)
    return 1.0 - q, q


def log_gammainc_q(a: float, x: float) -> float:
    """``log Q(a, x)``, accurate deep into the upper tail."""
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return -math.inf
    log_pre = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        p = math.exp(log_pre) * _series_scalar(a, x)
        return math.log1p(-p) if p < 1.0 else -math.inf
    return log_pre + math.log(_contfrac_scalar(a, x))


def log_gammainc_p(a: float, x: float) -> float:
    """``log P(a, x)``, accurate near the origin."""
    if x <= 0:
        return -math.inf
    if math.isinf(x):
        return 0.0
    log_pre = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        return log_pre + math.log(_series_scalar(a, x))
    q = math.exp(log_pre) * _contfrac_scalar(a, x)
    return math.log1p(-q) if q < 1.0 else -math.inf


def _gammainc_array(a: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    p = np.zeros_like(x)
    q = np.ones_like(x)
    pos = x > 0
    p[np.isinf(x)] = 1.0
    q[np.isinf(x)] = 0.0
    pos &= np.isfinite(x)
    if not pos.any():
        return p, q
    lga = math.lgamma(a)

    lo = pos & (x < a + 1.0)
    if lo.any():
        xs = x[lo]
        ap = np.full_like(xs, a)
        term = np.full_like(xs, 1.0 / a)
        total = term.copy()
        active = np.ones(xs.shape, dtype=bool)
        for _ in range(_MAXITER):
            ap[active] += 1.0
            term[active] *= xs[active] / ap[active]
            total[active] += term[active]
            active &= np.abs(term) >= np.abs(total) * _EPS
            if not active.any():
                break
        pl = np.minimum(np.exp(-xs + a * np.log(xs) - lga) * total, 1.0)
        p[lo] = pl
        q[lo] = 1.0 - pl

    hi = pos & (x >= a + 1.0)
    if hi.any():
        xs = x[hi]
        b = xs + 1.0 - a
        c = np.full_like(xs, 1.0 / _FPMIN)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(xs.shape, dtype=bool)
        for i in range(1, _MAXITER):
            an = -i * (i - a)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
            c = b + an / c
            c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
            d = 1.0 / d
            delta = d * c
            h = np.where(active, h * delta, h)
            active &= np.abs(delta - 1.0) >= _EPS
            if not active.any():
                break
        qh = np.minimum(np.exp(-xs + a * np.log(xs) - lga) * h, 1.0)
        q[hi] = qh
        p[hi] = 1.0 - qh
    return p, q


def regularized_gamma_p(a: float, x):
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if np.ndim(x) == 0:
        return gammainc_pq(float(a), float(x))[0]
    if np.any(np.asarray(x) < 0):
        raise DomainError("incomplete gamma needs x >= 0")
    return _gammainc_array(float(a), x)[0]


def regularized_gamma_q(a: float, x):
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``."""
    if np.ndim(x) == 0:
        return gammainc_pq(float(a), float(x))[1]
    if np.any(np.asarray(x) < 0):
        raise DomainError("incomplete gamma needs x >= 0")
    return _gammainc_array(float(a), x)[1]


# ---------------------------------------------------------------------------
# gamma bulk


def gamma_logpdf(x, p: GammaParams):
    """Log density of the gamma bulk; ``x`` must be strictly positive."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0) or np.any(np.isnan(xa)):
        raise DomainError("gamma density is defined for x > 0 only")
    out = (p.eta - 1.0) * np.log(xa) - xa / p.beta - math.lgamma(p.eta) - p.eta * math.log(p.beta)
    return float(out) if np.ndim(x) == 0 else out


def gamma_pdf(x, p: GammaParams):
    """Gamma density ``x^(eta-1) exp(-x/beta) / (Gamma(eta) beta^eta)``."""
    out = np.exp(gamma_logpdf(x, p))
    return float(out) if np.ndim(x) == 0 else out


def gamma_cdf(x, p: GammaParams):
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("gamma cdf is defined for x >= 0 only")
    return regularized_gamma_p(p.eta, xa / p.beta if np.ndim(x) else float(x) / p.beta)


def gamma_sf(x, p: GammaParams):
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("gamma survival is defined for x >= 0 only")
    return regularized_gamma_q(p.eta, xa / p.beta if np.ndim(x) else float(x) / p.beta)


def _gamma_quantile_std(a: float, q: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Quantile of the unit-scale gamma by safeguarded Newton on P."""
    q = np.asarray(q, dtype=float)
    lo = np.zeros_like(q)
    hi = np.full_like(q, a + 40.0 * math.sqrt(a) + 40.0)
    # Wilson-Hilferty start, pulled into the bracket.
    zq = np.array([_NORMAL.inv_cdf(min(max(v, 1e-300), 1 - 1e-16)) for v in q.ravel()]).reshape(q.shape)
    c = 1.0 / (9.0 * a)
    x = a * np.maximum(1.0 - c + zq * math.sqrt(c), 1e-3) ** 3
    small = q < 0.05
    # Near the origin P ~ x^a / Gamma(a+1).
    x = np.where(small, np.exp((np.log(np.maximum(q, 1e-300)) + math.lgamma(a + 1.0)) / a), x)
    x = np.clip(x, 1e-300, hi * (1 - 1e-12))
    lga = math.lgamma(a)
    done = q <= 0
    x[done] = 0.0
    upper = q > 0.5
    qc = 1.0 - q
    for _ in range(400):
        act = ~done
        if not act.any():
            break
        xa = x[act]
        P, Q = _gammainc_array(a, xa)
        # Work with the complement where P is close to 1.
        f = np.where(upper[act], qc[act] - Q, P - q[act])
        conv = np.abs(f) <= tol
        lo_a, hi_a = lo[act], hi[act]
        lo_a = np.where(f < 0, xa, lo_a)
        hi_a = np.where(f > 0, xa, hi_a)
        dens = np.exp((a - 1.0) * np.log(xa) - xa - lga)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = xa - f / dens
        bad = ~np.isfinite(step) | (step <= lo_a) | (step >= hi_a)
        step = np.where(bad, 0.5 * (lo_a + hi_a), step)
        narrow = (hi_a - lo_a) <= 4.0 * np.finfo(float).eps * np.maximum(xa, 1e-300)
        # A converged point still takes its (quadratically small) Newton step.
        step = np.where(narrow | (conv & bad), xa, step)
        x[act] = step
        lo[act], hi[act] = lo_a, hi_a
        idx = np.flatnonzero(act)
        done[idx[conv | narrow]] = True
    return x


def gamma_quantile(q, p: GammaParams):
    """Inverse of :func:`gamma_cdf` for ``0 <= q < 1``."""
    qa = np.asarray(q, dtype=float)
    if np.any(~((qa >= 0) & (qa < 1))):
        raise DomainError("gamma quantile needs 0 <= q < 1")
    if p.eta == 1.0:
        out = -p.beta * np.log1p(-qa)
    else:
        out = p.beta * _gamma_quantile_std(p.eta, np.atleast_1d(qa)).reshape(qa.shape)
    return float(out) if np.ndim(q) == 0 else out


# ---------------------------------------------------------------------------
# generalized Pareto tail


def _scaled_excess(x, p: GpdParams) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - p.u) / p.sigma
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DomainError("GPD is defined only for x >= u")
    return z


def gpd_logpdf(x, p: GpdParams):
    z = _scaled_excess(x, p)
    if abs(p.xi) < XI_ZERO:
        out = -math.log(p.sigma) - z
    else:
        t = p.xi * z
        if p.xi < 0:
            if np.any(1.0 + t < -ENDPOINT_TOL):
                raise DomainError("x exceeds the upper endpoint of a bounded GPD")
            t = np.maximum(t, -1.0)
        coef = 1.0 / p.xi + 1.0
        if coef == 0.0:
            out = np.full_like(z, -math.log(p.sigma))
        else:
            with np.errstate(divide="ignore"):
                out = -math.log(p.sigma) - coef * np.log1p(t)
    return float(out) if np.ndim(x) == 0 else out


def gpd_pdf(x, p: GpdParams):
    """GPD density; exponential form when ``|xi| < 1e-8``."""
    out = np.exp(gpd_logpdf(x, p))
    return float(out) if np.ndim(x) == 0 else out


def gpd_sf(x, p: GpdParams):
    z = _scaled_excess(x, p)
    if abs(p.xi) < XI_ZERO:
        out = np.exp(-z)
    else:
        t = p.xi * z
        if p.xi < 0:
            endpoint = -1.0 / p.xi
            t = np.where(z >= endpoint - ENDPOINT_TOL / p.sigma, -1.0, t)
        with np.errstate(divide="ignore"):
            out = np.where(t <= -1.0, 0.0, np.exp(-np.log1p(np.maximum(t, -1.0)) / p.xi))
    return float(out) if np.ndim(x) == 0 else out


def gpd_cdf(x, p: GpdParams):
    """GPD distribution function, clamped to 1 at a bounded upper endpoint."""
    z = _scaled_excess(x, p)
    if abs(p.xi) < XI_ZERO:
        out = -np.expm1(-z)
    else:
        t = p.xi * z
        if p.xi < 0:
            endpoint = -1.0 / p.xi
            t = np.where(z >= endpoint - ENDPOINT_TOL / p.sigma, -1.0, t)
        with np.errstate(divide="ignore"):
            out = np.where(t <= -1.0, 1.0, -np.expm1(-np.log1p(np.maximum(t, -1.0)) / p.xi))
    return float(out) if np.ndim(x) == 0 else out


def gpd_quantile(q, p: GpdParams):
    """Closed-form GPD quantile for ``0 <= q < 1``."""
    qa = np.asarray(q, dtype=float)
    if np.any(~((qa >= 0) & (qa < 1))):
        raise DomainError("GPD quantile needs 0 <= q < 1")
    if abs(p.xi) < XI_ZERO:
        out = p.u - p.sigma * np.log1p(-qa)
    else:
        out = p.u + p.sigma * np.expm1(-p.xi * np.log1p(-qa)) / p.xi
    return float(out) if np.ndim(q) == 0 else out
