"""Kernel MMD two-sample tests, change detection and exact error-exponent tools."""
from .changepoint import ChangePointResult, cp_threshold, detect, scan
from .distributions import DiscreteDistribution, GaussianMixture, GaussianSpec, kld, sample
from .exponents import ExponentReport, dstar, dstar_oracle, exponent_report
from .kernels import KernelSpec, gram, median_heuristic
from .mmd import MmdValue, mmd2_biased, mmd2_unbiased, mmd_population_discrete, mmd_sup_family
from .thresholds import (ThresholdSpec, ldb_threshold, one_sample_threshold, permutation_threshold,
                         unbiased_ldb_threshold)
from .two_sample import TestOutcome, decide

__all__ = [
    "ChangePointResult", "cp_threshold", "detect", "scan",
    "DiscreteDistribution", "GaussianMixture", "GaussianSpec", "kld", "sample",
    "ExponentReport", "dstar", "dstar_oracle", "exponent_report",
    "KernelSpec", "gram", "median_heuristic",
    "MmdValue", "mmd2_biased", "mmd2_unbiased", "mmd_population_discrete", "mmd_sup_family",
    "ThresholdSpec", "ldb_threshold", "one_sample_threshold", "permutation_threshold",
    "unbiased_ldb_threshold",
    "TestOutcome", "decide",
]
__version__ = "0.1.0"
