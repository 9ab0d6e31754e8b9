"""Return levels and return-level curves.

A return period ``T`` is counted in observations: the ``T``-level is the value
exceeded with probability ``1/T`` by a single draw, i.e. the ``1 - 1/T``
quantile of the fitted mixture. ``obs_per_period`` rescales when several
observations make up one period.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .fit import FitConfig, FitResult
from .mixture import EvimmParams, EvmmParams, quantile
from .uncertainty import parametric_bootstrap


def return_level(T, p, obs_per_period: float = 1.0):
    """Level exceeded on average once every ``T`` periods."""
    if not isinstance(p, (EvimmParams, EvmmParams)):
        raise TypeError("return levels need a mixture model with a tail fraction")
    Ta = np.asarray(T, dtype=float)
    if np.any(~(Ta > 1)):
        raise DomainError("return period must exceed 1")
    if obs_per_period <= 0:
        raise DomainError("obs_per_period must be positive")
    q = 1.0 - 1.0 / (Ta * obs_per_period)
    if np.any(q < 0):
        raise DomainError("return period too short for obs_per_period")
    return quantile(q, p)


@dataclass(frozen=True)
class ReturnLevelPoint:
    T: float
    level: float
    ci_lo: float | None = None
    ci_hi: float | None = None
    below_threshold: bool = False


@dataclass
class ReturnLevelCurve:
    points: list[ReturnLevelPoint]
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> np.ndarray:
        return np.array([p.T for p in self.points])

    @property
    def levels(self) -> np.ndarray:
        return np.array([p.level for p in self.points])

    @property
    def has_bands(self) -> bool:
        return bool(self.points) and self.points[0].ci_lo is not None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "level", "ci_lo", "ci_hi"])
        for p in self.points:
            w.writerow([f"{p.T:.17g}", f"{p.level:.17g}",
                        "" if p.ci_lo is None else f"{p.ci_lo:.17g}",
                        "" if p.ci_hi is None else f"{p.ci_hi:.17g}"])
        return buf.getvalue()


def return_level_curve(
    fit: FitResult,
    d=None,
    T_grid=(2, 5, 10, 20, 50, 100, 200, 500, 1000),
    B: int = 0,
    seed: int = 0,
    cfg: FitConfig | None = None,
    n_jobs: int = 1,
    obs_per_period: float = 1.0,
) -> ReturnLevelCurve:
    """Return levels of a fitted model over ``T_grid`` (sorted ascending).

    With ``B > 0`` a parametric bootstrap supplies percentile bands.
    """
    T = np.unique(np.asarray(T_grid, dtype=float))
    levels = np.atleast_1d(return_level(T, fit.params, obs_per_period))
    below = levels < fit.params.u
    lo = hi = [None] * T.size
    meta = {"model": fit.model, "obs_per_period": obs_per_period, "B": int(B)}
    if B:
        boot = parametric_bootstrap(
            fit, d, B, lambda p: return_level(T, p, obs_per_period), seed=seed, cfg=cfg, n_jobs=n_jobs
        )
        lo = np.minimum(boot.ci_lo, levels).tolist()
        hi = np.maximum(boot.ci_hi, levels).tolist()
        meta["n_failed"] = boot.n_failed
    pts = [ReturnLevelPoint(float(t), float(z), a, b, bool(bt)) for t, z, a, b, bt in zip(T, levels, lo, hi, below)]
    meta["below_threshold"] = [p.T for p in pts if p.below_threshold]
    return ReturnLevelCurve(pts, meta)
