"""Test thresholds: distribution-free bounds, the permutation quantile and
the combined (min) rule.

Closed-form thresholds live on the scale of the statistic they are paired
with: ``ldb_threshold`` and ``one_sample_threshold`` bound d_k (not squared),
``unbiased_ldb_threshold`` bounds the squared unbiased estimate.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .kernels import KernelSpec, sqdist
from .mmd import _check_pair, mmd2_biased, mmd2_unbiased, mmd_sup_family

POLICIES = ("ldb", "unbiased_ldb", "permutation", "combined", "one_sample")
STATISTIC_KINDS = ("biased", "unbiased")


@dataclass(frozen=True)
class ThresholdSpec:
    policy: str = "ldb"
    alpha: float = 0.05
    B: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown threshold policy {self.policy!r}")
        _check_alpha(self.alpha)
        if self.B < 1:
            raise ValueError("B must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ThresholdSpec":
        return cls(**{k: obj[k] for k in ("policy", "alpha", "B", "seed") if k in obj})


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")


def _check_K(K):
    if not K > 0:
        raise ValueError(f"kernel bound K must be positive, got {K!r}")


def ldb_threshold(n: int, m: int, K: float, alpha: float) -> float:
    """Level-alpha threshold for d_k(P_n, Q_m) from the large-deviation bound under H0."""
    if n < 1 or m < 1:
        raise ValueError("sample sizes must be >= 1")
    _check_K(K)
    _check_alpha(alpha)
    return (math.sqrt(K / m) + math.sqrt(K / n)) * (2.0 + math.sqrt(2.0 * math.log(2.0 / alpha)))


def unbiased_ldb_threshold(n: int, K: float, alpha: float, m: int | None = None) -> float:
    """Level-alpha threshold for the squared unbiased statistic; requires n == m."""
    if m is not None and m != n:
        raise ValueError(f"unbiased threshold assumes equal sample sizes, got n={n}, m={m}")
    if n < 2:
        raise ValueError("n must be >= 2")
    _check_K(K)
    _check_alpha(alpha)
    return 4.0 * K / math.sqrt(n) * math.sqrt(math.log(1.0 / alpha))


def one_sample_threshold(n: int, K: float, alpha: float) -> float:
    """Threshold on d_k(P, P_n) with P(d_k > threshold) < alpha."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_K(K)
    _check_alpha(alpha)
    return math.sqrt(2.0 * K / n) * (1.0 + math.sqrt(math.log(1.0 / alpha)))


# -- permutation null ---------------------------------------------------------

def permutation_labels(N: int, n: int, B: int, seed) -> np.ndarray:
    """``(B, N)`` 0/1 matrix; row b marks the n pooled indices sent to the X side.

    All B splits are drawn up front from one generator, so the result does not
    depend on how replicates are later scheduled.
    """
    rng = np.random.default_rng(seed)
    order = np.argsort(rng.random((B, N)), axis=1, kind="stable")
    labels = np.zeros((B, N))
    np.put_along_axis(labels, order[:, :n], 1.0, axis=1)
    return labels


def split_statistics(G: np.ndarray, labels: np.ndarray, n: int, statistic_kind: str) -> np.ndarray:
    """Statistic for every split encoded in ``labels`` against the pooled Gram ``G``.

    Returns d_k for ``biased`` and the squared estimate for ``unbiased``.
    """
    N = G.shape[0]
    m = N - n
    row = G.sum(axis=1)
    GA = labels @ G
    sxx = np.einsum("bi,bi->b", GA, labels)
    sxy = labels @ row - sxx
    syy = (1.0 - labels) @ row - sxy
    if statistic_kind == "biased":
        v = sxx / n**2 + syy / m**2 - 2.0 * sxy / (n * m)
        return np.sqrt(np.maximum(v, 0.0))
    if statistic_kind == "unbiased":
        diag = np.diag(G)
        dx = labels @ diag
        dy = diag.sum() - dx
        return ((sxx - dx) / (n * (n - 1)) + (syy - dy) / (m * (m - 1))
                - 2.0 * sxy / (n * m))
    raise ValueError(f"unknown statistic kind {statistic_kind!r}")


def permutation_null(X, Y, kernel, B: int, seed, statistic_kind: str = "biased") -> np.ndarray:
    """B statistic values under random re-splits of the pooled sample.

    ``kernel`` may be a single KernelSpec or a sequence of them; for a family
    each replicate takes the max of d_k over the family (biased only).
    """
    x, y = _check_pair(X, Y)
    if B < 1:
        raise ValueError("B must be >= 1")
    family = _as_family(kernel)
    if len(family) > 1 and statistic_kind != "biased":
        raise ValueError("kernel families are only supported with the biased statistic")
    n = len(x)
    z = np.vstack([x, y])
    d2 = sqdist(z, z)
    labels = permutation_labels(len(z), n, B, seed)
    out = None
    for k in family:
        vals = split_statistics(k.from_sqdist(d2), labels, n, statistic_kind)
        out = vals if out is None else np.maximum(out, vals)
    return out


def permutation_quantile(values: np.ndarray, observed: float, alpha: float) -> float:
    """k-th smallest of the B permuted values plus the observed one, k = ceil((1-alpha)(B+1))."""
    _check_alpha(alpha)
    pool = np.sort(np.append(np.asarray(values, dtype=np.float64), observed))
    # round away float dust so that e.g. 0.95 * 20 gives k = 19, not 20
    k = math.ceil(round((1.0 - alpha) * len(pool), 9))
    return float(pool[k - 1])


def observed_statistic(X, Y, kernel, statistic_kind: str = "biased") -> float:
    family = _as_family(kernel)
    if len(family) > 1:
        if statistic_kind != "biased":
            raise ValueError("kernel families are only supported with the biased statistic")
        return mmd_sup_family(X, Y, family)
    if statistic_kind == "biased":
        return mmd2_biased(X, Y, family[0]).distance
    if statistic_kind == "unbiased":
        return mmd2_unbiased(X, Y, family[0]).squared
    raise ValueError(f"unknown statistic kind {statistic_kind!r}")


def permutation_threshold(X, Y, kernel, alpha: float, B: int, seed,
                          statistic_kind: str = "biased") -> float:
    values = permutation_null(X, Y, kernel, B, seed, statistic_kind)
    return permutation_quantile(values, observed_statistic(X, Y, kernel, statistic_kind), alpha)


def combined_threshold(X, Y, kernel, alpha: float, B: int, seed,
                       statistic_kind: str = "biased") -> float:
    """min(permutation threshold, matching distribution-free threshold)."""
    perm = permutation_threshold(X, Y, kernel, alpha, B, seed, statistic_kind)
    return min(perm, closed_form_for(statistic_kind, len(X), len(Y), _bound(kernel), alpha))


def closed_form_for(statistic_kind: str, n: int, m: int, K: float, alpha: float) -> float:
    if statistic_kind == "biased":
        return ldb_threshold(n, m, K, alpha)
    return unbiased_ldb_threshold(n, K, alpha, m=m)


def _as_family(kernel) -> list:
    if isinstance(kernel, KernelSpec):
        return [kernel]
    family = list(kernel)
    if not family:
        raise ValueError("kernel family is empty")
    if len({k.bound for k in family}) != 1:
        raise ValueError("kernel family must share one bound K")
    return family


def _bound(kernel) -> float:
    return _as_family(kernel)[0].bound


def threshold_for(spec: ThresholdSpec, X, Y, kernel, statistic_kind: str = "biased") -> float:
    """Dispatch ``spec`` to the matching threshold for samples X, Y."""
    n, m = len(X), len(Y)
    K = _bound(kernel)
    if spec.policy == "ldb":
        return ldb_threshold(n, m, K, spec.alpha)
    if spec.policy == "unbiased_ldb":
        return unbiased_ldb_threshold(n, K, spec.alpha, m=m)
    if spec.policy == "one_sample":
        raise ValueError("one_sample threshold applies to d_k(P, P_n), not to two-sample tests")
    if spec.policy == "permutation":
        return permutation_threshold(X, Y, kernel, spec.alpha, spec.B, spec.seed, statistic_kind)
    return combined_threshold(X, Y, kernel, spec.alpha, spec.B, spec.seed, statistic_kind)
