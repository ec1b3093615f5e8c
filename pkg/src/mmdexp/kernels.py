"""Gaussian kernel, blocked Gram evaluation and the median heuristic."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .distributions import as_sample

DEFAULT_BLOCK = 512


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel ``k(x, y) = exp(-||x - y||^2 / bandwidth)`` bounded by ``bound``."""

    bandwidth: float
    family: str = "gaussian"
    bound: float = 1.0

    def __post_init__(self):
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")
        if not self.bound > 0:
            raise ValueError("kernel bound K must be positive")
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    def __call__(self, x, y) -> float:
        diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
        return float(np.exp(-np.dot(diff.ravel(), diff.ravel()) / self.bandwidth))

    def from_sqdist(self, d2: np.ndarray) -> np.ndarray:
        return np.exp(-d2 / self.bandwidth)

    def to_dict(self) -> dict:
        return {"family": self.family, "bandwidth": self.bandwidth}

    @classmethod
    def from_dict(cls, obj: dict) -> "KernelSpec":
        return cls(bandwidth=float(obj["bandwidth"]), family=obj.get("family", "gaussian"))


def sqdist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # direct differences; the ||x||^2 + ||y||^2 - 2<x,y> expansion loses the exact zero diagonal
    return cdist(x, y, "sqeuclidean")


def gram(x, y, kernel: KernelSpec, block_size: int = DEFAULT_BLOCK) -> np.ndarray:
    """Gram matrix ``G[i, j] = k(x_i, y_j)``, filled one row tile at a time."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    out = np.empty((x.shape[0], y.shape[0]))
    for start in range(0, x.shape[0], block_size):
        stop = min(start + block_size, x.shape[0])
        out[start:stop] = kernel.from_sqdist(sqdist(x[start:stop], y))
    return out


def gram_sum(x, y, kernel: KernelSpec, block_size: int = DEFAULT_BLOCK) -> float:
    """``sum_ij k(x_i, y_j)`` without holding the full matrix.

    Each tile contributes its per-row sums (each row summed in full, in fixed
    order); the row sums are reduced with ``math.fsum``, so the result does not
    depend on ``block_size``.
    """
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    rows = np.empty(x.shape[0])
    for start in range(0, x.shape[0], block_size):
        stop = min(start + block_size, x.shape[0])
        rows[start:stop] = kernel.from_sqdist(sqdist(x[start:stop], y)).sum(axis=1)
    return math.fsum(rows)


def median_heuristic(pooled) -> float:
    """Median of the squared pairwise distances of ``pooled``, used directly as bandwidth.

    For an even number of pairs the lower-middle order statistic is taken.
    """
    z = as_sample(pooled, "pooled")
    if z.shape[0] < 2:
        raise ValueError("median heuristic needs at least two points")
    d2 = pdist(z, "sqeuclidean")
    k = (d2.size - 1) // 2
    med = float(np.partition(d2, k)[k])
    if med <= 0:
        raise ValueError("degenerate pooled sample: median squared distance is 0")
    return med
