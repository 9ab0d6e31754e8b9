"""Composite distributions: EVIMM (atom + gamma bulk + GPD tail) and EVMM.

The EVIMM places mass ``alpha`` at zero, spreads ``(1 - alpha)`` times a gamma
law over ``(0, u)`` and hands whatever probability is left above ``u`` to a
GPD. The point ``x = u`` belongs to the tail.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .dist_core import (
    GammaParams,
    GpdParams,
    gamma_cdf,
    gamma_pdf,
    gamma_quantile,
    gpd_cdf,
    gpd_pdf,
    gpd_quantile,
)
from .exceptions import DomainError


class TailFractionMode(str, enum.Enum):
    BULK_BASED = "bulk"
    PARAMETERIZED = "param"


@dataclass(frozen=True)
class EvimmParams:
    """Parameter vector ``(alpha, eta, beta, u, xi, sigma)``."""

    alpha: float
    bulk: GammaParams
    u: float
    xi: float
    sigma: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie strictly in (0, 1), got {self.alpha!r}")
        if not (math.isfinite(self.u) and self.u > 0):
            raise DomainError(f"threshold must be positive, got {self.u!r}")
        GpdParams(self.xi, self.sigma, self.u)
        phi = tail_fraction(self)
        if not (0.0 < phi < 1.0):
            raise DomainError(f"tail fraction {phi!r} is not in (0, 1)")

    @classmethod
    def from_values(cls, alpha, eta, beta, u, xi, sigma) -> "EvimmParams":
        return cls(float(alpha), GammaParams(float(eta), float(beta)), float(u), float(xi), float(sigma))

    @property
    def eta(self) -> float:
        return self.bulk.eta

    @property
    def beta(self) -> float:
        return self.bulk.beta

    @property
    def tail(self) -> GpdParams:
        return GpdParams(self.xi, self.sigma, self.u)

    def as_dict(self) -> dict:
        return {
            "model": "evimm",
            "alpha": self.alpha,
            "eta": self.eta,
            "beta": self.beta,
            "u": self.u,
            "xi": self.xi,
            "sigma": self.sigma,
        }

    def vector(self) -> dict:
        return {k: v for k, v in self.as_dict().items() if k != "model"}


@dataclass(frozen=True)
class EvmmParams:
    """Gamma bulk spliced to a GPD tail, with no atom at zero.

    In bulk-based mode the tail fraction is ``1 - H(u)``. In parameterized mode
    it is the free value ``phi_u`` and the bulk below ``u`` is rescaled by
    ``(1 - phi_u) / H(u)``.
    """

    bulk: GammaParams
    u: float
    xi: float
    sigma: float
    mode: TailFractionMode = TailFractionMode.BULK_BASED
    phi_u: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", TailFractionMode(self.mode))
        if not (math.isfinite(self.u) and self.u > 0):
            raise DomainError(f"threshold must be positive, got {self.u!r}")
        GpdParams(self.xi, self.sigma, self.u)
        if self.mode is TailFractionMode.PARAMETERIZED:
            if self.phi_u is None or not (0.0 < self.phi_u < 1.0):
                raise DomainError("parameterized mode needs phi_u in (0, 1)")
        else:
            if self.phi_u is not None:
                raise DomainError("phi_u is only used in parameterized mode")
            phi = 1.0 - gamma_cdf(self.u, self.bulk)
            if not (0.0 < phi < 1.0):
                raise DomainError(f"bulk-based tail fraction {phi!r} is not in (0, 1)")

    @classmethod
    def from_values(cls, eta, beta, u, xi, sigma, phi_u=None) -> "EvmmParams":
        mode = TailFractionMode.BULK_BASED if phi_u is None else TailFractionMode.PARAMETERIZED
        return cls(GammaParams(float(eta), float(beta)), float(u), float(xi), float(sigma), mode,
                   None if phi_u is None else float(phi_u))

    @property
    def eta(self) -> float:
        return self.bulk.eta

    @property
    def beta(self) -> float:
        return self.bulk.beta

    @property
    def tail(self) -> GpdParams:
        return GpdParams(self.xi, self.sigma, self.u)

    @property
    def tail_fraction(self) -> float:
        if self.mode is TailFractionMode.PARAMETERIZED:
            return self.phi_u
        return 1.0 - gamma_cdf(self.u, self.bulk)

    def as_dict(self) -> dict:
        out = {
            "model": "evmm-param" if self.mode is TailFractionMode.PARAMETERIZED else "evmm-bulk",
            "eta": self.eta,
            "beta": self.beta,
            "u": self.u,
            "xi": self.xi,
            "sigma": self.sigma,
        }
        if self.mode is TailFractionMode.PARAMETERIZED:
            out["phi_u"] = self.phi_u
        return out

    def vector(self) -> dict:
        return {k: v for k, v in self.as_dict().items() if k != "model"}


MixtureParams = Union[EvimmParams, EvmmParams]


def params_from_dict(doc: dict) -> MixtureParams | GpdParams:
    """Rebuild parameters from the flat key-value form produced by ``as_dict``."""
    model = doc.get("model", "evimm")
    try:
        if model == "evimm":
            return EvimmParams.from_values(doc["alpha"], doc["eta"], doc["beta"], doc["u"], doc["xi"], doc["sigma"])
        if model == "evmm-bulk":
            return EvmmParams.from_values(doc["eta"], doc["beta"], doc["u"], doc["xi"], doc["sigma"])
        if model == "evmm-param":
            return EvmmParams.from_values(doc["eta"], doc["beta"], doc["u"], doc["xi"], doc["sigma"], doc["phi_u"])
        if model == "gpd":
            return GpdParams(float(doc["xi"]), float(doc["sigma"]), float(doc["u"]))
    except KeyError as exc:
        raise DomainError(f"parameter document for {model!r} lacks key {exc.args[0]!r}") from None
    raise DomainError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# EVIMM


def tail_fraction(p: EvimmParams) -> float:
    """Probability of landing at or above the threshold."""
    return (1.0 - p.alpha) * (1.0 - gamma_cdf(p.u, p.bulk))


def mass_below_threshold(p: MixtureParams) -> float:
    """``F(u-)``: everything the atom and bulk carry."""
    if isinstance(p, EvimmParams):
        return 1.0 - tail_fraction(p)
    return 1.0 - p.tail_fraction


def threshold_for_tail_fraction(alpha: float, bulk: GammaParams, phi: float) -> float:
    """Threshold whose EVIMM exceedance probability equals ``phi``."""
    if not (0.0 < phi < 1.0 - alpha):
        raise DomainError(f"need 0 < phi < 1 - alpha, got phi={phi!r}, alpha={alpha!r}")
    return gamma_quantile((1.0 - alpha - phi) / (1.0 - alpha), bulk)


def evimm_cdf(x, p: EvimmParams):
    xa = np.asarray(x, dtype=float)
    out = np.zeros_like(xa)
    zero = xa == 0
    out[zero] = p.alpha
    bulk = (xa > 0) & (xa < p.u)
    if bulk.any():
        out[bulk] = p.alpha + (1.0 - p.alpha) * gamma_cdf(xa[bulk], p.bulk)
    tail = xa >= p.u
    if tail.any():
        cu = mass_below_threshold(p)
        out[tail] = cu + (1.0 - cu) * gpd_cdf(xa[tail], p.tail)
    return float(out) if np.ndim(x) == 0 else out


class MassDensity(NamedTuple):
    kind: str  # "point_mass" or "density"
    value: float


def evimm_mass_density(x: float, p: EvimmParams) -> MassDensity:
    """Probability mass at zero, density elsewhere."""
    x = float(x)
    if x < 0 or math.isnan(x):
        raise DomainError("EVIMM is supported on x >= 0")
    if x == 0:
        return MassDensity("point_mass", p.alpha)
    if x < p.u:
        return MassDensity("density", (1.0 - p.alpha) * gamma_pdf(x, p.bulk))
    if x > p.tail.upper_endpoint:
        return MassDensity("density", 0.0)
    return MassDensity("density", tail_fraction(p) * gpd_pdf(x, p.tail))


def evimm_density(x, p: EvimmParams):
    """Continuous part of the EVIMM law (zero at the origin, where the atom sits)."""
    xa = np.asarray(x, dtype=float)
    out = np.zeros_like(xa)
    bulk = (xa > 0) & (xa < p.u)
    if bulk.any():
        out[bulk] = (1.0 - p.alpha) * gamma_pdf(xa[bulk], p.bulk)
    tail = (xa >= p.u) & (xa <= p.tail.upper_endpoint)
    if tail.any():
        out[tail] = tail_fraction(p) * gpd_pdf(xa[tail], p.tail)
    return float(out) if np.ndim(x) == 0 else out


def evimm_quantile(q, p: EvimmParams):
    """Generalized inverse ``inf{x : F(x) >= q}``."""
    qa = np.asarray(q, dtype=float)
    if np.any(~((qa >= 0) & (qa < 1))):
        raise DomainError("quantile level must satisfy 0 <= q < 1")
    cu = mass_below_threshold(p)
    out = np.zeros_like(qa)
    bulk = (qa > p.alpha) & (qa < cu)
    if bulk.any():
        out[bulk] = np.minimum(gamma_quantile((qa[bulk] - p.alpha) / (1.0 - p.alpha), p.bulk), p.u)
    tail = qa >= cu
    if tail.any():
        out[tail] = gpd_quantile(np.clip((qa[tail] - cu) / (1.0 - cu), 0.0, None), p.tail)
    return float(out) if np.ndim(q) == 0 else out


# ---------------------------------------------------------------------------
# EVMM


def _evmm_bulk_weight(p: EvmmParams) -> float:
    """Multiplier on the gamma density below ``u``."""
    if p.mode is TailFractionMode.PARAMETERIZED:
        return (1.0 - p.phi_u) / gamma_cdf(p.u, p.bulk)
    return 1.0


def evmm_cdf(x, p: EvmmParams):
    xa = np.asarray(x, dtype=float)
    out = np.zeros_like(xa)
    bulk = (xa > 0) & (xa < p.u)
    if bulk.any():
        out[bulk] = _evmm_bulk_weight(p) * gamma_cdf(xa[bulk], p.bulk)
    tail = xa >= p.u
    if tail.any():
        cu = 1.0 - p.tail_fraction
        out[tail] = cu + (1.0 - cu) * gpd_cdf(xa[tail], p.tail)
    return float(out) if np.ndim(x) == 0 else out


def evmm_pdf(x, p: EvmmParams):
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("EVMM is supported on x >= 0")
    out = np.zeros_like(xa)
    bulk = (xa > 0) & (xa < p.u)
    if bulk.any():
        out[bulk] = _evmm_bulk_weight(p) * gamma_pdf(xa[bulk], p.bulk)
    tail = (xa >= p.u) & (xa <= p.tail.upper_endpoint)
    if tail.any():
        out[tail] = p.tail_fraction * gpd_pdf(xa[tail], p.tail)
    return float(out) if np.ndim(x) == 0 else out


def evmm_quantile(q, p: EvmmParams):
    qa = np.asarray(q, dtype=float)
    if np.any(~((qa >= 0) & (qa < 1))):
        raise DomainError("quantile level must satisfy 0 <= q < 1")
    cu = 1.0 - p.tail_fraction
    out = np.zeros_like(qa)
    bulk = (qa > 0) & (qa < cu)
    if bulk.any():
        out[bulk] = np.minimum(gamma_quantile(qa[bulk] / _evmm_bulk_weight(p), p.bulk), p.u)
    tail = qa >= cu
    if tail.any():
        out[tail] = gpd_quantile(np.clip((qa[tail] - cu) / (1.0 - cu), 0.0, None), p.tail)
    return float(out) if np.ndim(q) == 0 else out


def cdf(x, p: MixtureParams):
    return evimm_cdf(x, p) if isinstance(p, EvimmParams) else evmm_cdf(x, p)


def quantile(q, p: MixtureParams):
    return evimm_quantile(q, p) if isinstance(p, EvimmParams) else evmm_quantile(q, p)
