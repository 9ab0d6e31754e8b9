"""Monte-Carlo study summaries and parametric bootstrap.

A study resimulates ``N`` datasets from known parameters and refits each one;
a bootstrap resimulates ``B`` datasets from a *fitted* model. Both reduce to
the same bookkeeping: collect estimates, drop failed fits (counting them), and
summarise with the mean, standard deviation and a percentile interval.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

from .exceptions import DomainError, InsufficientData, NoZeros, TooManyFailures
from .fit import FitConfig, FitResult, fit_evimm, fit_evmm
from .mixture import EvimmParams, EvmmParams, TailFractionMode
from .simulate import SeedSpec, sample

EVIMM_PARAMS = ("alpha", "eta", "beta", "u", "xi", "sigma")
EVMM_PARAMS = ("eta", "beta", "u", "xi", "sigma")
TABLE_COLUMNS = ("parameter", "true value", "sample mean", "BSE", "BCI lo", "BCI hi", "MSE", "bias", "CP")


@dataclass(frozen=True)
class ParameterSummary:
    parameter: str
    true_value: float
    sample_mean: float
    bse: float
    bci: tuple[float, float]
    mse: float
    bias: float
    cp: float

    def row(self) -> list:
        return [self.parameter, self.true_value, self.sample_mean, self.bse, self.bci[0], self.bci[1],
                self.mse, self.bias, self.cp]


@dataclass
class McSummary:
    """Per-parameter summary of one model over the converged replications."""

    model: str
    n: int
    n_replications: int
    n_converged: int
    n_failed: int
    rows: dict[str, ParameterSummary]
    estimates: dict[str, np.ndarray] = field(repr=False, default_factory=dict)

    def __getitem__(self, name: str) -> ParameterSummary:
        return self.rows[name]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in self.rows.values():
            w.writerow([r.parameter] + [_fmt(v) for v in r.row()[1:]])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def percentile_interval(values, level: float = 0.95) -> tuple[float, float]:
    """Linear-interpolation (type 7) percentile interval."""
    v = np.asarray(values, dtype=float)
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(v, [a, 1.0 - a])
    return float(lo), float(hi)


def coverage_probability(estimates, std_errors, truth: float, level: float = 0.95) -> float:
    """Percentage of Wald intervals ``est +- z * se`` that contain ``truth``.

    Replications without a finite standard error are left out.
    """
    est = np.asarray(estimates, dtype=float)
    se = np.asarray(std_errors, dtype=float)
    ok = np.isfinite(est) & np.isfinite(se)
    if not ok.any():
        return math.nan
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    hit = np.abs(est[ok] - truth) <= z * se[ok]
    return 100.0 * float(hit.mean())


def summarize(name: str, truth: float, estimates, std_errors=None) -> ParameterSummary:
    est = np.asarray(estimates, dtype=float)
    err = est - truth
    cp = coverage_probability(est, std_errors, truth) if std_errors is not None else math.nan
    return ParameterSummary(
        parameter=name,
        true_value=float(truth),
        sample_mean=float(est.mean()),
        bse=float(est.std(ddof=1)) if est.size > 1 else math.nan,
        bci=percentile_interval(est),
        mse=float(np.mean(err**2)),
        bias=float(err.mean()),
        cp=cp,
    )


# ---------------------------------------------------------------------------
# study


def _default_fitters(cfg: FitConfig) -> dict[str, Callable]:
    return {
        "evimm": lambda d: fit_evimm(d, cfg),
        "evmm": lambda d: fit_evmm(d, TailFractionMode.BULK_BASED, cfg),
    }


def truth_injector(truth) -> Callable:
    """Fitter stand-in that returns the generating parameters unchanged."""

    def fit(d):
        names = EVIMM_PARAMS if isinstance(truth, EvimmParams) else EVMM_PARAMS
        return FitResult("truth", truth, 0.0, True, d.n, d.n_zero, 0,
                         std_errors={k: 1.0 for k in names})

    return fit


@dataclass
class Replication:
    index: int
    fits: dict[str, dict | None]


def _run_replication(i: int, truth, n: int, seed: int, fitters: dict) -> Replication:
    d = sample(n, truth, SeedSpec(seed, i))
    out = {}
    for model, fitter in fitters.items():
        try:
            r = fitter(d)
        except (InsufficientData, NoZeros, DomainError, FloatingPointError):
            out[model] = None
            continue
        if not r.converged:
            out[model] = None
            continue
        est = r.params.vector()
        se = r.std_errors or {}
        out[model] = {"est": est, "se": se}
    return Replication(i, out)


@dataclass
class StudyResult:
    truth: object
    n: int
    n_replications: int
    seed: int
    summaries: dict[str, McSummary]
    failed: dict[str, list[int]]

    def __getitem__(self, model: str) -> McSummary:
        return self.summaries[model]


def mc_study(
    truth,
    n: int,
    N: int,
    seed: int = 0,
    models: Sequence[str] = ("evimm", "evmm"),
    cfg: FitConfig | None = None,
    fitters: dict[str, Callable] | None = None,
    n_jobs: int = 1,
) -> StudyResult:
    """Simulate ``N`` datasets of size ``n`` from ``truth`` and fit each model.

    Replication ``i`` uses the stream ``SeedSpec(seed, i)``. Fits that raise or
    fail to converge are excluded from the summaries and listed in ``failed``.
    With ``N = 1`` the BSE is undefined and reported as NaN.
    """
    if N < 1:
        raise DomainError("a study needs at least one replication")
    cfg = cfg or FitConfig()
    all_fitters = _default_fitters(cfg)
    if fitters:
        all_fitters.update(fitters)
    chosen = {m: all_fitters[m] for m in models}
    reps = Parallel(n_jobs=n_jobs)(
        delayed(_run_replication)(i, truth, n, seed, chosen) for i in range(N)
    )
    reps.sort(key=lambda r: r.index)
    tv = truth.vector()
    summaries, failed = {}, {}
    for model in models:
        names = [k for k in (EVIMM_PARAMS if model == "evimm" else EVMM_PARAMS) if k in tv]
        ok = [r.fits[model] for r in reps if r.fits[model] is not None]
        failed[model] = [r.index for r in reps if r.fits[model] is None]
        ests = {k: np.array([f["est"][k] for f in ok]) for k in names}
        rows = {}
        if ok:
            for k in names:
                ses = np.array([f["se"].get(k, math.nan) for f in ok])
                rows[k] = summarize(k, tv[k], ests[k], ses)
        summaries[model] = McSummary(model, n, N, len(ok), len(failed[model]), rows, ests)
    return StudyResult(truth, n, N, seed, summaries, failed)


# ---------------------------------------------------------------------------
# parametric bootstrap


@dataclass
class BootstrapResult:
    values: np.ndarray
    bse: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    n_requested: int
    n_failed: int


def _refit(fit: FitResult, d, cfg: FitConfig) -> FitResult:
    if fit.model == "evimm":
        return fit_evimm(d, cfg)
    if fit.model in ("evmm-bulk", "evmm"):
        return fit_evmm(d, TailFractionMode.BULK_BASED, cfg)
    if fit.model == "evmm-param":
        return fit_evmm(d, TailFractionMode.PARAMETERIZED, cfg)
    raise DomainError(f"cannot bootstrap model {fit.model!r}")


def _boot_one(b: int, fit: FitResult, n: int, seed: int, statistic: Callable, cfg: FitConfig):
    d = sample(n, fit.params, SeedSpec(seed, b))
    try:
        r = _refit(fit, d, cfg)
    except (InsufficientData, NoZeros, DomainError):
        return None
    if not r.converged:
        return None
    return np.atleast_1d(np.asarray(statistic(r.params), dtype=float))


def parametric_bootstrap(
    fit: FitResult,
    d,
    B: int,
    statistic: Callable,
    seed: int = 0,
    cfg: FitConfig | None = None,
    n_jobs: int = 1,
    level: float = 0.95,
    max_failure_rate: float = 0.2,
) -> BootstrapResult:
    """Resample from the fitted model, refit, and summarise ``statistic(params)``.

    Raises
    ------
    TooManyFailures
        If more than ``max_failure_rate`` of the refits fail.
    """
    if B < 100:
        raise DomainError("parametric bootstrap needs B >= 100")
    if not fit.converged:
        raise DomainError("bootstrap needs a converged fit")
    base = fit.config or FitConfig()
    cfg = cfg or FitConfig(**{**base.as_dict(), "compute_se": False})
    # EVMM fits live on the positive part only, so resample that many points.
    n = fit.n
    out = Parallel(n_jobs=n_jobs)(delayed(_boot_one)(b, fit, n, seed, statistic, cfg) for b in range(B))
    good = [v for v in out if v is not None]
    n_failed = B - len(good)
    if n_failed > max_failure_rate * B:
        raise TooManyFailures(f"{n_failed} of {B} bootstrap refits failed")
    values = np.vstack(good)
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(values, [a, 1.0 - a], axis=0)
    bse = values.std(axis=0, ddof=1)
    return BootstrapResult(values, bse, lo, hi, B, n_failed)
