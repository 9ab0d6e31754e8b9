"""Classical threshold-selection baselines.

Percentile and rule-of-thumb thresholds, mean-excess, Hill and parameter
stability plot data, and a fixed-threshold GPD fit. The graphical methods
return their raw plot data together with a heuristic auto-pick so a full
comparison table can be produced without a human in the loop; the heuristics
are labelled as such in every :class:`ThresholdChoice` they produce.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dist_core import GpdParams
from .exceptions import DomainError, InsufficientData, NoZeros, SingularInformation
from .fit import Dataset, FitConfig, FitResult, as_dataset, fit_evimm, fit_evmm, fit_gpd_excesses, standard_errors
from .mixture import TailFractionMode

_Z95 = 1.959963984540054
MIN_MEAN_EXCESS_COUNT = 5
ME_R2 = 0.98
LOGLOG_FORMULA = "k = round(n^(2/3) / log(log(n)))"


class ThresholdMethod(str, enum.Enum):
    PERCENTILE90 = "percentile90"
    ROT_SQRT = "rot-sqrt"
    ROT_LOGLOG = "rot-loglog"
    MEAN_EXCESS = "mean-excess"
    HILL = "hill"
    STABILITY = "stability"
    EVMM = "evmm"
    EVIMM = "evimm"
    EVMM_PARAM = "evmm-param"


LABELS = {
    ThresholdMethod.PERCENTILE90: "90th percentile",
    ThresholdMethod.ROT_SQRT: "Rule of thumb (sqrt n)",
    ThresholdMethod.ROT_LOGLOG: "Rule of thumb (n^(2/3)/log log n)",
    ThresholdMethod.MEAN_EXCESS: "Mean excess plot",
    ThresholdMethod.HILL: "Hill plot",
    ThresholdMethod.STABILITY: "Parameter stability plot",
    ThresholdMethod.EVMM: "EVMM",
    ThresholdMethod.EVIMM: "EVIMM",
    ThresholdMethod.EVMM_PARAM: "EVMM (parameterised tail fraction)",
}

DEFAULT_METHODS = tuple(m for m in ThresholdMethod if m is not ThresholdMethod.EVMM_PARAM)

SUMMARY_COLUMNS = ("alpha", "eta", "beta", "u", "sigma", "xi")

# Which summary columns each method can fill; the rest print as N/A.
REPORTED = {
    ThresholdMethod.PERCENTILE90: ("u", "sigma", "xi"),
    ThresholdMethod.ROT_SQRT: ("u", "sigma", "xi"),
    ThresholdMethod.ROT_LOGLOG: ("u", "sigma", "xi"),
    ThresholdMethod.MEAN_EXCESS: ("u", "sigma", "xi"),
    ThresholdMethod.HILL: ("u", "xi"),
    ThresholdMethod.STABILITY: ("u", "sigma", "xi"),
    ThresholdMethod.EVMM: ("eta", "beta", "u", "sigma", "xi"),
    ThresholdMethod.EVMM_PARAM: ("eta", "beta", "u", "sigma", "xi"),
    ThresholdMethod.EVIMM: SUMMARY_COLUMNS,
}


@dataclass
class ThresholdChoice:
    method: ThresholdMethod
    u: float
    k: int | None = None
    notes: str = ""
    estimates: dict = field(default_factory=dict)
    fit: FitResult | None = None

    def row(self) -> dict:
        cols = REPORTED[self.method]
        out = {"method": LABELS[self.method]}
        for c in SUMMARY_COLUMNS:
            out[c] = self.estimates.get(c) if c in cols else None
        return out


def _count_above(x: np.ndarray, u: float) -> int:
    return int(np.count_nonzero(x > u))


# ---------------------------------------------------------------------------
# simple rules


def percentile_threshold(d, q: float = 0.9) -> ThresholdChoice:
    """Empirical ``q``-quantile of all observations, zeros included."""
    d = as_dataset(d)
    if not 0 <= q <= 1:
        raise DomainError("q must lie in [0, 1]")
    if d.n_positive < 2:
        raise InsufficientData("need at least two positive observations")
    u = float(np.quantile(d.values, q))
    return ThresholdChoice(ThresholdMethod.PERCENTILE90, u, _count_above(d.values, u),
                           f"empirical {q:g} quantile (linear interpolation, zeros included)")


class RuleOfThumb(str, enum.Enum):
    SQRT = "sqrt"
    LOGLOG = "loglog"


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def rule_of_thumb_k(n: int, variant: RuleOfThumb | str = RuleOfThumb.SQRT) -> int:
    """Number of upper order statistics kept by a rule of thumb."""
    variant = RuleOfThumb(variant)
    if n < 4:
        raise DomainError("rule of thumb needs n >= 4")
    if variant is RuleOfThumb.SQRT:
        k = _round_half_up(math.sqrt(n))
    else:
        ll = math.log(math.log(n))
        if ll <= 0:
            raise DomainError("log(log(n)) must be positive")
        k = _round_half_up(n ** (2.0 / 3.0) / ll)
    if not 1 <= k < n:
        raise DomainError(f"rule of thumb gives k={k}, outside [1, n)")
    return k


def rule_of_thumb_threshold(d, variant: RuleOfThumb | str = RuleOfThumb.SQRT) -> ThresholdChoice:
    """Threshold at the ``(n - k)``-th order statistic."""
    d = as_dataset(d)
    variant = RuleOfThumb(variant)
    k = rule_of_thumb_k(d.n, variant)
    u = float(d.sorted[d.n - k - 1])
    method = ThresholdMethod.ROT_SQRT if variant is RuleOfThumb.SQRT else ThresholdMethod.ROT_LOGLOG
    note = "k = round(sqrt(n))" if variant is RuleOfThumb.SQRT else LOGLOG_FORMULA
    return ThresholdChoice(method, u, _count_above(d.values, u), f"{note}; k={k}")


# ---------------------------------------------------------------------------
# plot data


def default_grid(d, n_points: int = 30, q_lo: float = 0.5, q_hi: float = 0.95, min_tail: int = 10) -> np.ndarray:
    """Candidate thresholds: quantiles of the positives leaving ``min_tail`` exceedances."""
    d = as_dataset(d)
    x = d.positives
    if x.size <= min_tail:
        raise InsufficientData(f"need more than {min_tail} positive observations")
    hi = min(float(np.quantile(x, q_hi)), float(x[x.size - min_tail - 1]))
    lo = min(float(np.quantile(x, q_lo)), hi)
    return np.unique(np.linspace(lo, hi, n_points))


@dataclass(frozen=True)
class MeanExcessPoint:
    u: float
    mean_excess: float
    count: int
    flagged: bool


def mean_excess_data(d, u_grid: Iterable[float], min_count: int = MIN_MEAN_EXCESS_COUNT) -> list[MeanExcessPoint]:
    """Sample mean excess ``mean(x - u | x > u)`` per grid point.

    Points with fewer than ``min_count`` exceedances are flagged; with none the
    mean is NaN.
    """
    x = as_dataset(d).values
    out = []
    for u in np.asarray(list(u_grid), dtype=float):
        ex = x[x > u] - u
        m = float(ex.mean()) if ex.size else math.nan
        out.append(MeanExcessPoint(float(u), m, int(ex.size), ex.size < min_count))
    return out


def _r_squared(u: np.ndarray, e: np.ndarray) -> float:
    if u.size < 2 or np.ptp(u) == 0:
        return math.nan
    slope, icpt = np.polyfit(u, e, 1)
    ss_res = float(np.sum((e - (slope * u + icpt)) ** 2))
    ss_tot = float(np.sum((e - e.mean()) ** 2))
    return 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot


def pick_mean_excess(points: Sequence[MeanExcessPoint], r2: float = ME_R2, min_points: int = 3) -> tuple[int, str]:
    """Start of the longest grid suffix whose mean excesses are linear (R^2 >= r2)."""
    usable = [i for i, p in enumerate(points) if not p.flagged]
    if len(usable) < min_points:
        raise InsufficientData("too few unflagged mean-excess points")
    u = np.array([points[i].u for i in usable])
    e = np.array([points[i].mean_excess for i in usable])
    for j in range(len(usable) - min_points + 1):
        val = _r_squared(u[j:], e[j:])
        if val >= r2:
            return usable[j], f"heuristic: longest linear suffix, R^2={val:.4f}"
    return usable[-min_points], f"heuristic: no suffix reached R^2>={r2}; used last {min_points} points"


@dataclass(frozen=True)
class HillPoint:
    k: int
    xi: float
    u: float


def hill_data(d, k_range: Iterable[int] | None = None) -> list[HillPoint]:
    """Hill estimates over the ``k`` largest positive observations.

    ``u`` is the reference order statistic ``X_(n-k)``. Zeros are ignored.
    """
    x = as_dataset(d).positives
    m = x.size
    ks = range(2, m) if k_range is None else k_range
    # H(k) = (1/k) sum_i i * log(X_(m-i+1) / X_(m-i)). Ratios of neighbours
    # keep ties at exact zeros and make binary rescaling exact.
    desc = x[::-1]
    spacing = np.log(desc[:-1] / desc[1:])
    weighted = np.concatenate([[0.0], np.cumsum(np.arange(1, m) * spacing)])
    out = []
    for k in ks:
        k = int(k)
        if k < 2 or k >= m:
            raise DomainError(f"k={k} outside [2, {m - 1}]")
        ref = x[m - k - 1]
        if ref <= 0:
            raise DomainError("reference order statistic must be positive")
        out.append(HillPoint(k, float(weighted[k] / k), float(ref)))
    return out


def pick_hill(points: Sequence[HillPoint], window: int | None = None) -> tuple[int, str]:
    """Centre of the flattest window (smallest std of the estimates)."""
    if len(points) < 3:
        raise InsufficientData("too few Hill points")
    h = np.array([p.xi for p in points])
    w = window or max(5, len(points) // 10)
    w = min(w, len(points))
    sd = np.array([h[i:i + w].std() for i in range(len(points) - w + 1)])
    i = int(np.argmin(sd))
    return i + w // 2, f"heuristic: centre of the most stable window of {w} k-values"


# ---------------------------------------------------------------------------
# fixed-threshold GPD


def fit_gpd_fixed(d, u: float, cfg: FitConfig | None = None) -> FitResult:
    """GPD maximum-likelihood fit to the exceedances of a known threshold."""
    d = as_dataset(d)
    cfg = cfg or FitConfig()
    y = d.values[d.values > u] - u
    if y.size < cfg.min_tail:
        raise InsufficientData(f"need at least {cfg.min_tail} exceedances of u={u:g}, got {y.size}")
    xi, sigma, ll, conv, nit = fit_gpd_excesses(y, cfg)
    p = GpdParams(xi, sigma, float(u))
    res = FitResult("gpd", p, ll, conv, d.n, d.n_zero, int(y.size), n_iter=nit, config=cfg)
    if conv and cfg.compute_se:
        try:
            res.std_errors = standard_errors(p, d)
        except SingularInformation:
            res.singular_information = True
    return res


@dataclass(frozen=True)
class StabilityPoint:
    u: float
    xi: float
    sigma: float
    sigma_star: float
    se_xi: float
    se_sigma: float
    converged: bool
    note: str = ""


def stability_data(d, u_grid: Iterable[float], cfg: FitConfig | None = None) -> list[StabilityPoint]:
    """Fixed-threshold GPD fits across a grid; failures are flagged, not raised."""
    d = as_dataset(d)
    out = []
    for u in np.asarray(list(u_grid), dtype=float):
        try:
            r = fit_gpd_fixed(d, float(u), cfg)
        except InsufficientData as exc:
            out.append(StabilityPoint(float(u), math.nan, math.nan, math.nan, math.nan, math.nan, False, str(exc)))
            continue
        se = r.std_errors or {}
        p = r.params
        out.append(StabilityPoint(float(u), p.xi, p.sigma, p.sigma - p.xi * p.u,
                                  se.get("xi", math.nan), se.get("sigma", math.nan), r.converged,
                                  "" if se else "no standard errors"))
    return out


def pick_stability(points: Sequence[StabilityPoint], min_points: int = 3) -> tuple[int, str]:
    """Start of the longest suffix whose shapes stay inside the start point's 95% CI."""
    ok = [i for i, p in enumerate(points) if p.converged and math.isfinite(p.xi)]
    if len(ok) < min_points:
        raise InsufficientData("too few converged stability points")
    for j, i in enumerate(ok[: len(ok) - min_points + 1]):
        p = points[i]
        if not math.isfinite(p.se_xi):
            continue
        half = _Z95 * p.se_xi
        if all(abs(points[t].xi - p.xi) <= half for t in ok[j:]):
            return i, "heuristic: longest suffix with shape inside the start point's 95% CI"
    i = ok[len(ok) - min_points]
    return i, f"heuristic: no stable suffix found; used last {min_points} points"


# ---------------------------------------------------------------------------
# full comparison


def _gpd_choice(method, d, u, k, notes, cfg) -> ThresholdChoice:
    r = fit_gpd_fixed(d, u, cfg)
    est = {"u": u, "sigma": r.params.sigma, "xi": r.params.xi}
    return ThresholdChoice(method, u, k, notes, est, r)


@dataclass
class MethodOutcome:
    method: ThresholdMethod
    choice: ThresholdChoice | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.choice is not None


@dataclass
class DiagnosticReport:
    outcomes: list[MethodOutcome]
    plot_data: dict = field(default_factory=dict)

    @property
    def n_succeeded(self) -> int:
        return sum(o.ok for o in self.outcomes)

    def rows(self) -> list[dict]:
        out = []
        for o in self.outcomes:
            if o.ok:
                r = o.choice.row()
                r["status"] = "ok"
                r["notes"] = o.choice.notes
            else:
                r = {"method": LABELS[o.method], **{c: None for c in SUMMARY_COLUMNS}}
                r["status"] = "failed"
                r["notes"] = o.error or ""
            out.append(r)
        return out

    def summary_csv(self, digits: int = 4) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("method",) + SUMMARY_COLUMNS + ("status", "notes"))
        for o, r in zip(self.outcomes, self.rows()):
            cols = REPORTED[o.method]
            cells = []
            for c in SUMMARY_COLUMNS:
                if c not in cols:
                    cells.append("N/A")
                elif r[c] is None:
                    cells.append("")
                else:
                    cells.append(f"{r[c]:.{digits}f}")
            w.writerow([r["method"], *cells, r["status"], r["notes"]])
        return buf.getvalue()


def _run_method(m: ThresholdMethod, d: Dataset, cfg: FitConfig, grid: np.ndarray, plots: dict) -> ThresholdChoice:
    if m is ThresholdMethod.PERCENTILE90:
        c = percentile_threshold(d, 0.9)
        return _gpd_choice(m, d, c.u, c.k, c.notes, cfg)
    if m in (ThresholdMethod.ROT_SQRT, ThresholdMethod.ROT_LOGLOG):
        c = rule_of_thumb_threshold(d, RuleOfThumb.SQRT if m is ThresholdMethod.ROT_SQRT else RuleOfThumb.LOGLOG)
        return _gpd_choice(m, d, c.u, c.k, c.notes, cfg)
    if m is ThresholdMethod.MEAN_EXCESS:
        pts = mean_excess_data(d, grid)
        plots["mean_excess"] = pts
        i, note = pick_mean_excess(pts)
        u = pts[i].u
        return _gpd_choice(m, d, u, _count_above(d.values, u), note, cfg)
    if m is ThresholdMethod.HILL:
        pts = hill_data(d)
        plots["hill"] = pts
        i, note = pick_hill(pts)
        if d.n_zero:
            note += f"; {d.n_zero} zeros excluded (log undefined)"
        p = pts[i]
        return ThresholdChoice(m, p.u, p.k, note, {"u": p.u, "xi": p.xi})
    if m is ThresholdMethod.STABILITY:
        pts = stability_data(d, grid, cfg)
        plots["stability"] = pts
        i, note = pick_stability(pts)
        u = pts[i].u
        return _gpd_choice(m, d, u, _count_above(d.values, u), note, cfg)
    if m is ThresholdMethod.EVIMM:
        r = fit_evimm(d, cfg)
        return ThresholdChoice(m, r.params.u, r.n_tail, "joint maximum likelihood", r.estimates, r)
    mode = TailFractionMode.PARAMETERIZED if m is ThresholdMethod.EVMM_PARAM else TailFractionMode.BULK_BASED
    r = fit_evmm(d, mode, cfg)
    note = "joint maximum likelihood"
    if r.n_dropped_zeros:
        note += f"; {r.n_dropped_zeros} zeros dropped"
    return ThresholdChoice(m, r.params.u, r.n_tail, note, r.estimates, r)


def diagnose(d, methods: Sequence[ThresholdMethod | str] | None = None, cfg: FitConfig | None = None,
             u_grid=None) -> DiagnosticReport:
    """Run each threshold method; failures are recorded per method."""
    d = as_dataset(d)
    cfg = cfg or FitConfig()
    methods = [ThresholdMethod(m) for m in (methods or DEFAULT_METHODS)]
    plots: dict = {}
    grid = None
    outcomes = []
    for m in methods:
        try:
            if grid is None and m in (ThresholdMethod.MEAN_EXCESS, ThresholdMethod.STABILITY):
                grid = np.asarray(u_grid, dtype=float) if u_grid is not None else default_grid(d, min_tail=cfg.min_tail)
            outcomes.append(MethodOutcome(m, _run_method(m, d, cfg, grid, plots)))
        except (InsufficientData, NoZeros, DomainError, SingularInformation) as exc:
            outcomes.append(MethodOutcome(m, None, f"{type(exc).__name__}: {exc}"))
    return DiagnosticReport(outcomes, plots)
