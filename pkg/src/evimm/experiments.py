"""Scripted simulation studies at configurable scale.

A :class:`StudySpec` names a grid of scenarios (``alpha`` x ``xi`` x ``n``)
around a fixed gamma bulk and GPD scale. Thresholds are always derived from the
tail fraction, never typed in. Every block gets its own master seed, derived
from the study seed and the block's grid position, so blocks can be rerun or
reordered without changing each other's output.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._version import __version__
from .dist_core import GammaParams
from .exceptions import DomainError
from .fit import FitConfig, fit_evimm, fit_evmm
from .mixture import EvimmParams, TailFractionMode, threshold_for_tail_fraction
from .returnlevel import ReturnLevelCurve, return_level, return_level_curve
from .simulate import SeedSpec, sample
from .uncertainty import EVIMM_PARAMS, StudyResult, mc_study

_MODELS = {"evimm": ("evimm",), "evmm": ("evmm",), "both": ("evimm", "evmm")}


@dataclass(frozen=True)
class StudySpec:
    alphas: tuple[float, ...] = (0.2,)
    xis: tuple[float, ...] = (0.2,)
    ns: tuple[int, ...] = (500,)
    eta: float = 1.0
    beta: float = 5.0
    sigma: float = 5.0
    phi: float = 0.1
    replications: int = 200
    seed: int = 0
    models: str = "both"

    def __post_init__(self):
        for name in ("alphas", "xis", "ns"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.models not in _MODELS:
            raise DomainError(f"models must be one of {sorted(_MODELS)}")
        if self.replications < 1:
            raise DomainError("replications must be positive")
        if not self.alphas or not self.xis or not self.ns:
            raise DomainError("scenario grid is empty")
        cfg = FitConfig()
        n0 = min(self.ns)
        for a in self.alphas:
            EvimmParams.from_values(a, self.eta, self.beta, self.threshold(a), self.xis[0], self.sigma)
            if n0 * (1 - a - self.phi) < 2 * cfg.min_bulk or n0 * self.phi < 2 * cfg.min_tail:
                raise DomainError(f"n={n0} too small for alpha={a}, phi={self.phi}")

    @property
    def model_list(self) -> tuple[str, ...]:
        return _MODELS[self.models]

    def threshold(self, alpha: float) -> float:
        return threshold_for_tail_fraction(alpha, GammaParams(self.eta, self.beta), self.phi)

    def truth(self, alpha: float, xi: float) -> EvimmParams:
        return EvimmParams.from_values(alpha, self.eta, self.beta, self.threshold(alpha), xi, self.sigma)

    def with_(self, **kw) -> "StudySpec":
        return StudySpec(**{**asdict(self), **kw})

    @classmethod
    def from_dict(cls, doc: dict) -> "StudySpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise DomainError(f"unknown study keys: {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "StudySpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def as_dict(self) -> dict:
        d = asdict(self)
        for k in ("alphas", "xis", "ns"):
            d[k] = list(d[k])
        return d


def block_seed(seed: int, *position: int) -> int:
    """64-bit master seed for one block of a study."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in position))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class TableBlock:
    alpha: float
    xi: float
    n: int
    seed: int
    result: StudyResult

    @property
    def name(self) -> str:
        return f"alpha{self.alpha:g}_xi{self.xi:g}_n{self.n}"

    def to_csv(self) -> str:
        """Machine-readable block: one row per (model, parameter), 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "parameter", "true value", "sample mean", "BSE", "BCI lo", "BCI hi",
                    "MSE", "bias", "CP", "n_converged", "n_failed"])
        for model, s in self.result.summaries.items():
            for r in s.rows.values():
                w.writerow([model, r.parameter, *(_g(v) for v in r.row()[1:]), s.n_converged, s.n_failed])
        return buf.getvalue()

    def to_text(self) -> str:
        """Human table at 4 decimals, EVMM values in parentheses after EVIMM."""
        cols = ["parameter", "true value", "sample mean", "BSE", "BCI", "MSE", "bias", "CP"]
        summ = self.result.summaries
        lines = [" | ".join(cols)]
        for name in EVIMM_PARAMS:
            cells = []
            for model in ("evimm", "evmm"):
                s = summ.get(model)
                cells.append(s.rows.get(name) if s else None)
            lead = next((c for c in cells if c is not None), None)
            if lead is None:
                continue
            row = [name, f"{lead.true_value:.4f}"]
            for attr in ("sample_mean", "bse", "bci", "mse", "bias", "cp"):
                parts = [_fmt4(getattr(c, attr)) if c is not None else "NA" for c in cells]
                row.append(parts[0] if len(summ) == 1 else f"{parts[0]} ({parts[1]})")
            lines.append(" | ".join(row))
        return "\n".join(lines) + "\n"


def _g(v) -> str:
    v = float(v)
    return "NA" if math.isnan(v) else f"{v:.17g}"


def _fmt4(v) -> str:
    if isinstance(v, tuple):
        return f"({v[0]:.4f}, {v[1]:.4f})"
    return "NA" if math.isnan(v) else f"{v:.4f}"


def run_table_study(spec: StudySpec, cfg: FitConfig | None = None, n_jobs: int = 1,
                    fitters: dict[str, Callable] | None = None) -> list[TableBlock]:
    """One Monte-Carlo block per (alpha, xi, n) cell of the grid."""
    blocks = []
    for ia, a in enumerate(spec.alphas):
        for ix, xi in enumerate(spec.xis):
            truth = spec.truth(a, xi)
            for i_n, n in enumerate(spec.ns):
                s = block_seed(spec.seed, ia, ix, i_n)
                res = mc_study(truth, n, spec.replications, s, spec.model_list, cfg, fitters, n_jobs)
                blocks.append(TableBlock(a, xi, n, s, res))
    return blocks


def manifest(spec: StudySpec, blocks: Sequence[TableBlock], extra: dict | None = None) -> dict:
    doc = {
        "version": __version__,
        "spec": spec.as_dict(),
        "blocks": [
            {
                "name": b.name,
                "alpha": b.alpha,
                "xi": b.xi,
                "n": b.n,
                "u": b.result.truth.u,
                "seed": b.seed,
                "models": {
                    m: {"n_converged": s.n_converged, "n_failed": s.n_failed,
                        "failed_replications": b.result.failed[m]}
                    for m, s in b.result.summaries.items()
                },
            }
            for b in blocks
        ],
    }
    if extra:
        doc.update(extra)
    return doc


def write_table_study(blocks: Sequence[TableBlock], spec: StudySpec, out_dir, extra: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for b in blocks:
        (out / f"{b.name}.csv").write_text(b.to_csv(), encoding="utf-8")
        (out / f"{b.name}.txt").write_text(b.to_text(), encoding="utf-8")
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest(spec, blocks, extra), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# bias / MSE curves


@dataclass(frozen=True)
class BiasMseRow:
    n: int
    model: str
    parameter: str
    bias: float
    mse: float


def run_bias_mse_comparison(spec: StudySpec, cfg: FitConfig | None = None, n_jobs: int = 1,
                            fitters: dict[str, Callable] | None = None) -> tuple[list[BiasMseRow], list[TableBlock]]:
    """Bias and MSE per (n, model, parameter) for a single (alpha, xi) scenario."""
    if len(spec.alphas) != 1 or len(spec.xis) != 1:
        raise DomainError("bias/MSE comparison takes exactly one alpha and one xi")
    blocks = run_table_study(spec, cfg, n_jobs, fitters)
    rows = []
    for b in blocks:
        for model, s in b.result.summaries.items():
            for r in s.rows.values():
                rows.append(BiasMseRow(b.n, model, r.parameter, r.bias, r.mse))
    return rows, blocks


def bias_mse_csv(rows: Sequence[BiasMseRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "model", "parameter", "bias", "mse"])
    for r in rows:
        w.writerow([r.n, r.model, r.parameter, _g(r.bias), _g(r.mse)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# return-level comparison

DEFAULT_RL_GRID = tuple(float(t) for t in np.geomspace(20.0, 500.0, 25))


@dataclass
class ReturnLevelComparison:
    xi: float
    truth: EvimmParams
    T: np.ndarray
    true_levels: np.ndarray
    evimm: ReturnLevelCurve
    evmm: ReturnLevelCurve
    seed: int
    extra: dict = field(default_factory=dict)

    def sup_distance(self, model: str, lo: float = 20.0, hi: float = 500.0) -> float:
        curve = self.evimm if model == "evimm" else self.evmm
        m = (self.T >= lo) & (self.T <= hi)
        return float(np.max(np.abs(curve.levels[m] - self.true_levels[m])))

    def band_coverage(self) -> float:
        """Fraction of grid points where the EVIMM band contains the true level."""
        if not self.evimm.has_bands:
            return math.nan
        lo = np.array([p.ci_lo for p in self.evimm.points])
        hi = np.array([p.ci_hi for p in self.evimm.points])
        return float(np.mean((lo <= self.true_levels) & (self.true_levels <= hi)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "truth", "evimm", "evimm_lo", "evimm_hi", "evmm"])
        for i, t in enumerate(self.T):
            p = self.evimm.points[i]
            w.writerow([_g(t), _g(self.true_levels[i]), _g(p.level),
                        "" if p.ci_lo is None else _g(p.ci_lo), "" if p.ci_hi is None else _g(p.ci_hi),
                        _g(self.evmm.points[i].level)])
        return buf.getvalue()


def run_return_level_comparison(
    alpha: float = 0.3,
    xis: Sequence[float] = (0.2, -0.2),
    n: int = 2000,
    seed: int = 0,
    B: int = 200,
    T_grid: Sequence[float] = DEFAULT_RL_GRID,
    spec: StudySpec | None = None,
    cfg: FitConfig | None = None,
    n_jobs: int = 1,
) -> list[ReturnLevelComparison]:
    """Simulate once per ``xi``, fit both models, and compare return-level curves."""
    spec = spec or StudySpec(alphas=(alpha,), xis=tuple(xis), ns=(n,), seed=seed)
    cfg = cfg or FitConfig()
    T = np.unique(np.asarray(T_grid, dtype=float))
    out = []
    for ix, xi in enumerate(xis):
        truth = spec.truth(alpha, xi)
        s = block_seed(seed, ix)
        d = sample(n, truth, SeedSpec(s, 0))
        f_imm = fit_evimm(d, cfg)
        f_mm = fit_evmm(d, TailFractionMode.BULK_BASED, cfg)
        c_imm = return_level_curve(f_imm, d, T, B=B, seed=block_seed(s, 1), cfg=replace(cfg, compute_se=False),
                                   n_jobs=n_jobs)
        c_mm = return_level_curve(f_mm, d, T, B=0)
        out.append(ReturnLevelComparison(xi, truth, T, np.asarray(return_level(T, truth)), c_imm, c_mm, s,
                                         {"evimm_fit": f_imm.as_dict(), "evmm_fit": f_mm.as_dict()}))
    return out
