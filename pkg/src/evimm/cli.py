"""``evimm`` command-line interface.

Exit codes: 0 success, 1 numerical failure (non-convergence under
``--strict``, too many failed bootstrap refits, every diagnostic failing),
2 usage or ingestion errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .diagnostics import DEFAULT_METHODS, ThresholdMethod, diagnose, fit_gpd_fixed
from .dist_core import GammaParams
from .exceptions import DomainError, InsufficientData, NoZeros, TooManyFailures
from .experiments import (
    StudySpec,
    bias_mse_csv,
    run_bias_mse_comparison,
    run_return_level_comparison,
    run_table_study,
    write_table_study,
)
from .fit import FitConfig, FitResult, fit_evimm, fit_evmm
from .io import IngestConfig, IngestError, read_dataset, write_values
from .mixture import EvimmParams, EvmmParams, TailFractionMode, params_from_dict, threshold_for_tail_fraction
from .returnlevel import return_level_curve
from .simulate import SeedSpec, sample
from .uncertainty import parametric_bootstrap

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def _float_list(s: str) -> list[float]:
    try:
        return [float(t) for t in s.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {s!r}") from None


def _dump(doc) -> str:
    # json emits the shortest repr that round-trips, i.e. full double precision.
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write_manifest(out: Path, command: str, args: argparse.Namespace, extra: dict | None = None) -> None:
    flags = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    doc = {"version": __version__, "command": command, "flags": flags}
    if extra:
        doc.update(extra)
    Path(str(out) + ".manifest.json").write_text(_dump(doc), encoding="utf-8")


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _add_ingest(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="one value per line, or a CSV file with --column")
    p.add_argument("--column", help="CSV column name or 0-based index")
    p.add_argument("--zero-tol", type=float, default=0.0, help="treat |x| <= tol as an exact zero")
    p.add_argument("--drop-negative", action="store_true", help="discard negative values instead of failing")


def _ingest(args):
    return read_dataset(IngestConfig(args.input, args.column, args.zero_tol, args.drop_negative))


def _add_fit_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=_nonneg_int, default=FitConfig.n_restarts)
    p.add_argument("--max-candidates", type=_positive_int, default=FitConfig.max_candidates)
    p.add_argument("--fit-seed", type=_nonneg_int, default=FitConfig.seed, help="seed for optimizer restarts")
    p.add_argument("--no-se", action="store_true", help="skip observed-information standard errors")


def _fit_config(args) -> FitConfig:
    return FitConfig(n_restarts=args.restarts, max_candidates=args.max_candidates, seed=args.fit_seed,
                     compute_se=not args.no_se)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    if (args.u is None) == (args.phi is None):
        raise UsageError("give exactly one of --u or --phi")
    try:
        bulk = GammaParams(args.eta, args.beta)
        if args.model == "evimm":
            if args.alpha is None:
                raise UsageError("--alpha is required for the evimm model")
            u = args.u if args.u is not None else threshold_for_tail_fraction(args.alpha, bulk, args.phi)
            p = EvimmParams(args.alpha, bulk, u, args.xi, args.sigma)
        else:
            u = args.u if args.u is not None else threshold_for_tail_fraction(0.0, bulk, args.phi)
            p = EvmmParams.from_values(args.eta, args.beta, u, args.xi, args.sigma)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    d = sample(args.n, p, SeedSpec(args.seed, args.stream))
    if args.out in (None, "-"):
        sys.stdout.write("".join(f"{v:.17g}\n" for v in d.values))
    else:
        write_values(args.out, d.values)
        _write_manifest(Path(args.out), "simulate", args, {"params": p.as_dict(), "n_zero": d.n_zero})
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


def _fit(args, d, cfg: FitConfig) -> FitResult:
    if args.model == "evimm":
        try:
            return fit_evimm(d, cfg)
        except NoZeros as exc:
            raise UsageError(f"{exc} (try --model evmm-bulk)") from None
    if args.model == "evmm-bulk":
        return fit_evmm(d, TailFractionMode.BULK_BASED, cfg)
    if args.model == "evmm-param":
        return fit_evmm(d, TailFractionMode.PARAMETERIZED, cfg)
    if args.u is None:
        raise UsageError("--model gpd needs --u")
    return fit_gpd_fixed(d, args.u, cfg)


def fit_document(r: FitResult) -> dict:
    doc = r.as_dict()
    doc["params"] = r.params.as_dict()
    return doc


def fit_result_from_document(doc: dict) -> FitResult:
    p = params_from_dict(doc["params"])
    cfg = FitConfig(**doc["config"]) if doc.get("config") else None
    return FitResult(doc["model"], p, doc.get("loglik", math.nan), bool(doc.get("converged", True)),
                     int(doc["n"]), int(doc.get("n_zero", 0)), int(doc.get("n_tail", 0)), config=cfg)


def _human_fit(r: FitResult) -> str:
    se = r.std_errors or {}
    lines = [f"model {r.model}  n={r.n}  loglik={r.loglik:.4f}  converged={r.converged}"]
    for k, v in r.estimates.items():
        s = se.get(k)
        lines.append(f"  {k:>6} {v:12.4f}" + (f"  (se {s:.4f})" if s is not None else ""))
    return "\n".join(lines) + "\n"


def cmd_fit(args) -> int:
    d = _ingest(args)
    cfg = _fit_config(args)
    try:
        r = _fit(args, d, cfg)
    except InsufficientData as exc:
        raise UsageError(str(exc)) from None
    doc = fit_document(r)
    if args.boot:
        if r.model == "gpd":
            raise UsageError("--boot is not available for fixed-threshold GPD fits")
        names = list(r.estimates)
        b = parametric_bootstrap(r, d, args.boot, lambda p: [p.vector()[k] for k in names],
                                 seed=args.seed, n_jobs=args.jobs)
        doc["bootstrap"] = {
            "B": args.boot, "n_failed": b.n_failed, "seed": args.seed,
            "bse": dict(zip(names, b.bse.tolist())),
            "ci_lo": dict(zip(names, b.ci_lo.tolist())),
            "ci_hi": dict(zip(names, b.ci_hi.tolist())),
        }
    text = _dump(doc)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        _write_manifest(Path(args.out), "fit", args)
        sys.stdout.write(_human_fit(r))
    if args.strict and not r.converged:
        raise NumericalFailure("optimizer did not converge")
    return EXIT_OK


# ---------------------------------------------------------------------------
# diagnose


def _csv_rows(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_cell(v) for v in r))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return "NA" if math.isnan(v) else f"{v:.17g}"
    return str(v)


def cmd_diagnose(args) -> int:
    d = _ingest(args)
    try:
        methods = [ThresholdMethod(m.strip()) for m in args.methods.split(",")] if args.methods else list(DEFAULT_METHODS)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = diagnose(d, methods, _fit_config(args))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(rep.summary_csv(), encoding="utf-8")
    (out / "summary.json").write_text(_dump(rep.rows()), encoding="utf-8")
    pd = rep.plot_data
    if "mean_excess" in pd:
        _csv_rows(out / "mean_excess.csv", ["u", "mean_excess", "count", "flagged"],
                  [(p.u, p.mean_excess, p.count, p.flagged) for p in pd["mean_excess"]])
    if "hill" in pd:
        _csv_rows(out / "hill.csv", ["k", "u", "xi"], [(p.k, p.u, p.xi) for p in pd["hill"]])
    if "stability" in pd:
        _csv_rows(out / "stability.csv", ["u", "xi", "sigma", "sigma_star", "se_xi", "se_sigma", "converged"],
                  [(p.u, p.xi, p.sigma, p.sigma_star, p.se_xi, p.se_sigma, p.converged) for p in pd["stability"]])
    _write_manifest(out / "summary.csv", "diagnose", args)
    sys.stdout.write(rep.summary_csv())
    if rep.n_succeeded == 0:
        raise NumericalFailure("every diagnostic method failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# return-level


def cmd_return_level(args) -> int:
    if (args.input is None) == (args.fitted is None):
        raise UsageError("give a data file or --fitted, not both")
    if args.fitted:
        try:
            fit = fit_result_from_document(json.loads(Path(args.fitted).read_text(encoding="utf-8")))
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot read fitted model: {exc}") from None
        d = None
    else:
        d = _ingest(args)
        if args.model == "gpd":
            raise UsageError("return levels need a mixture model")
        try:
            fit = _fit(args, d, _fit_config(args))
        except InsufficientData as exc:
            raise UsageError(str(exc)) from None
    if not isinstance(fit.params, (EvimmParams, EvmmParams)):
        raise UsageError("return levels need a mixture model")
    if any(t <= 1 for t in args.T):
        raise UsageError("return periods must exceed 1")
    curve = return_level_curve(fit, d, args.T, B=args.boot, seed=args.seed, n_jobs=args.jobs,
                               obs_per_period=args.obs_per_period)
    _emit(curve.to_csv(), args.out)
    if args.out not in (None, "-"):
        _write_manifest(Path(args.out), "return-level", args, {"fit": fit_document(fit), **curve.meta})
    if args.strict and not fit.converged:
        raise NumericalFailure("optimizer did not converge")
    return EXIT_OK


# ---------------------------------------------------------------------------
# study


def cmd_study(args) -> int:
    try:
        spec = StudySpec.load(args.scenario_file)
        over = {}
        if args.replications is not None:
            over["replications"] = args.replications
        if args.seed is not None:
            over["seed"] = args.seed
        spec = spec.with_(**over) if over else spec
    except (OSError, json.JSONDecodeError, TypeError, DomainError) as exc:
        raise UsageError(f"bad scenario file: {exc}") from None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "table":
        blocks = run_table_study(spec, n_jobs=args.jobs)
        write_table_study(blocks, spec, out)
        for b in blocks:
            sys.stdout.write(f"# {b.name}\n{b.to_text()}")
    elif args.kind == "bias-mse":
        rows, blocks = run_bias_mse_comparison(spec, n_jobs=args.jobs)
        write_table_study(blocks, spec, out)
        (out / "bias_mse.csv").write_text(bias_mse_csv(rows), encoding="utf-8")
        sys.stdout.write(bias_mse_csv(rows))
    else:
        if len(spec.alphas) != 1 or len(spec.ns) != 1:
            raise UsageError("return-level study takes one alpha and one n")
        comps = run_return_level_comparison(spec.alphas[0], spec.xis, spec.ns[0], spec.seed, args.boot,
                                            spec=spec, n_jobs=args.jobs)
        blocks_doc = []
        for c in comps:
            name = f"return_level_xi{c.xi:g}.csv"
            (out / name).write_text(c.to_csv(), encoding="utf-8")
            blocks_doc.append({"file": name, "xi": c.xi, "seed": c.seed,
                               "sup_distance": {"evimm": c.sup_distance("evimm"), "evmm": c.sup_distance("evmm")},
                               "band_coverage": c.band_coverage(), **c.extra})
            sys.stdout.write(f"xi={c.xi:g}  sup|EVIMM-truth|={c.sup_distance('evimm'):.4f}  "
                             f"sup|EVMM-truth|={c.sup_distance('evmm'):.4f}  band coverage={c.band_coverage():.4f}\n")
        doc = {"version": __version__, "spec": spec.as_dict(), "B": args.boot, "blocks": blocks_doc}
        (out / "manifest.json").write_text(_dump(doc), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evimm", description="Extreme value inlier mixture models.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a sample from a mixture model")
    p.add_argument("--model", choices=["evimm", "evmm"], default="evimm")
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--u", type=float)
    p.add_argument("--phi", type=float, help="tail fraction; sets u")
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--stream", type=_nonneg_int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a model by maximum likelihood")
    _add_ingest(p)
    p.add_argument("--model", choices=["evimm", "evmm-bulk", "evmm-param", "gpd"], default="evimm")
    p.add_argument("--u", type=float, help="threshold for --model gpd")
    p.add_argument("--boot", type=_nonneg_int, default=0, help="parametric bootstrap replicates")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="bootstrap seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true", help="exit 1 if the optimizer did not converge")
    p.add_argument("--out")
    _add_fit_config(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="compare threshold-selection methods")
    _add_ingest(p)
    p.add_argument("--methods", help="comma list of: " + ",".join(m.value for m in ThresholdMethod))
    p.add_argument("--out-dir", required=True)
    _add_fit_config(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("return-level", help="return-level curve of a fitted model")
    p.add_argument("input", nargs="?")
    p.add_argument("--column")
    p.add_argument("--zero-tol", type=float, default=0.0)
    p.add_argument("--drop-negative", action="store_true")
    p.add_argument("--fitted", help="JSON document written by `evimm fit --out`")
    p.add_argument("--model", choices=["evimm", "evmm-bulk", "evmm-param"], default="evimm")
    p.add_argument("--u", type=float, help=argparse.SUPPRESS)
    p.add_argument("--T", type=_float_list, default=[2, 5, 10, 20, 50, 100, 200, 500, 1000])
    p.add_argument("--boot", type=_nonneg_int, default=0)
    p.add_argument("--obs-per-period", type=float, default=1.0)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out")
    _add_fit_config(p)
    p.set_defaults(func=cmd_return_level)

    p = sub.add_parser("study", help="run a Monte-Carlo study from a scenario file")
    p.add_argument("--scenario-file", required=True)
    p.add_argument("--kind", choices=["table", "bias-mse", "return-level"], default="table")
    p.add_argument("--replications", type=_positive_int)
    p.add_argument("--seed", type=_nonneg_int)
    p.add_argument("--boot", type=_nonneg_int, default=200, help="bootstrap replicates (return-level kind)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_study)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, IngestError) as exc:
        print(f"evimm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, InsufficientData) as exc:
        print(f"evimm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, TooManyFailures) as exc:
        print(f"evimm {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
