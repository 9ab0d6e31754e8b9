"""Extreme value inlier mixture models.

A point mass at zero, a gamma bulk below a threshold ``u`` and a generalized
Pareto tail above it, with every parameter (``u`` included) estimated by
maximum likelihood. The zero-free gamma/GPD mixture is provided as a baseline.
"""
from ._version import __version__
from .dist_core import GammaParams, GpdParams
from .estimators import EVIMM, EVMM, GPDFixedThreshold
from .exceptions import DomainError, InsufficientData, NoZeros, SingularInformation, TooManyFailures
from .fit import Dataset, FitConfig, FitResult, fit_evimm, fit_evmm, log_likelihood, standard_errors
from .mixture import (
    EvimmParams,
    EvmmParams,
    TailFractionMode,
    evimm_cdf,
    evimm_density,
    evimm_quantile,
    evmm_cdf,
    evmm_quantile,
    tail_fraction,
    threshold_for_tail_fraction,
)
from .returnlevel import ReturnLevelCurve, return_level, return_level_curve
from .simulate import SeedSpec, sample_evimm, sample_evmm
from .uncertainty import coverage_probability, mc_study, parametric_bootstrap

__all__ = [
    "__version__",
    "GammaParams", "GpdParams", "EvimmParams", "EvmmParams", "TailFractionMode",
    "EVIMM", "EVMM", "GPDFixedThreshold",
    "DomainError", "InsufficientData", "NoZeros", "SingularInformation", "TooManyFailures",
    "Dataset", "FitConfig", "FitResult", "fit_evimm", "fit_evmm", "log_likelihood", "standard_errors",
    "evimm_cdf", "evimm_density", "evimm_quantile", "evmm_cdf", "evmm_quantile",
    "tail_fraction", "threshold_for_tail_fraction",
    "ReturnLevelCurve", "return_level", "return_level_curve",
    "SeedSpec", "sample_evimm", "sample_evmm",
    "coverage_probability", "mc_study", "parametric_bootstrap",
]
