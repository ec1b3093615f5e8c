"""Squared-MMD estimators, exact MMD between finite distributions, and the
kernel-family sup statistic."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import DiscreteDistribution, align, as_sample
from .kernels import DEFAULT_BLOCK, KernelSpec, gram, gram_sum

NEG_CLAMP = 1e-12


@dataclass(frozen=True)
class MmdValue:
    squared: float
    statistic_kind: str  # "biased" | "unbiased"
    n: int
    m: int
    kernel: KernelSpec

    @property
    def distance(self) -> float:
        """sqrt of the squared value (biased statistic only)."""
        if self.statistic_kind != "biased":
            raise ValueError("the unbiased estimate can be negative; it has no distance form")
        return math.sqrt(self.squared)


def _check_pair(x, y):
    x = as_sample(x, "X")
    y = as_sample(y, "Y")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: X has d={x.shape[1]}, Y has d={y.shape[1]}")
    return x, y


def _clamp(value: float) -> float:
    if value < 0:
        if value < -NEG_CLAMP:
            raise FloatingPointError(f"biased MMD^2 is {value!r}, beyond rounding noise")
        return 0.0
    return value


def _block_sums(x, y, kernel, block_size):
    sxx = gram_sum(x, x, kernel, block_size)
    syy = gram_sum(y, y, kernel, block_size)
    sxy = gram_sum(x, y, kernel, block_size)
    return sxx, syy, sxy


def mmd2_biased(X, Y, kernel: KernelSpec, block_size: int = DEFAULT_BLOCK) -> MmdValue:
    """V-statistic estimate of squared MMD, i.e. MMD^2 between the two empirical measures."""
    x, y = _check_pair(X, Y)
    n, m = len(x), len(y)
    sxx, syy, sxy = _block_sums(x, y, kernel, block_size)
    value = sxx / n**2 + syy / m**2 - 2.0 * sxy / (n * m)
    return MmdValue(_clamp(value), "biased", n, m, kernel)


def mmd2_unbiased(X, Y, kernel: KernelSpec, block_size: int = DEFAULT_BLOCK) -> MmdValue:
    """U-statistic estimate of squared MMD (within-sample diagonal terms dropped).

    Not clamped: the estimate is negative with positive probability under P = Q.
    """
    x, y = _check_pair(X, Y)
    n, m = len(x), len(y)
    if n < 2 or m < 2:
        raise ValueError("unbiased MMD needs at least two points per sample")
    sxx, syy, sxy = _block_sums(x, y, kernel, block_size)
    k0 = float(kernel.from_sqdist(np.zeros(1))[0])
    value = ((sxx - n * k0) / (n * (n - 1)) + (syy - m * k0) / (m * (m - 1))
             - 2.0 * sxy / (n * m))
    return MmdValue(value, "unbiased", n, m, kernel)


def mmd_population_discrete(P: DiscreteDistribution, Q: DiscreteDistribution,
                            kernel: KernelSpec) -> float:
    """Exact d_k(P, Q) for finitely supported P and Q."""
    support, p, q = align(P, Q)
    diff = p - q
    value = float(diff @ gram(support, support, kernel) @ diff)
    return math.sqrt(_clamp(value))


def mmd_sup_family(X, Y, kernels: Sequence[KernelSpec]) -> float:
    """max over a finite kernel family of d_k between the empirical measures."""
    kernels = list(kernels)
    if not kernels:
        raise ValueError("kernel family is empty")
    if len({k.bound for k in kernels}) != 1:
        raise ValueError("kernel family must share one bound K")
    return max(mmd2_biased(X, Y, k).distance for k in kernels)
