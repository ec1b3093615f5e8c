"""Exact finite-alphabet method-of-types computations.

Types are count vectors; the empirical pair (P_n, Q_m) of two independent
samples is enumerated exhaustively, so error probabilities of any test that
depends on the data only through the empirical measures come out exactly.
All probabilities are carried in log space (log-gamma multinomial
coefficients) and exponentiated at the end.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .distributions import DiscreteDistribution, align, kld_vec
from .exponents import dstar
from .kernels import KernelSpec, gram
from .thresholds import ldb_threshold

MAX_TYPES = 10**7

Region = Callable[[np.ndarray, np.ndarray], np.ndarray]


class EnumerationTooLarge(ValueError):
    pass


def type_count(n: int, t: int) -> int:
    return math.comb(n + t - 1, t - 1)


@lru_cache(maxsize=64)
def _types(n: int, t: int) -> np.ndarray:
    # stars and bars: choose positions of t-1 bars among n+t-1 slots
    bars = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n + t - 1), t - 1)),
                       dtype=np.int64).reshape(-1, t - 1)
    edges = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), n + t - 1)])
    out = np.diff(edges, axis=1) - 1
    out.setflags(write=False)
    return out


def enumerate_types(n: int, t: int) -> np.ndarray:
    """All count vectors of length t summing to n, one per row, lexicographic in bar positions."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 2 <= t <= 5:
        raise ValueError("alphabet size t must lie in [2, 5]")
    if type_count(n, t) > MAX_TYPES:
        raise EnumerationTooLarge(f"{type_count(n, t)} types for n={n}, t={t} exceeds cap {MAX_TYPES}")
    return _types(n, t)


def _log_multinomial(counts: np.ndarray) -> np.ndarray:
    counts = np.atleast_2d(counts)
    n = counts.sum(axis=1)
    return gammaln(n + 1) - gammaln(counts + 1).sum(axis=1)


def log_type_probabilities(pmf: np.ndarray, types: np.ndarray) -> np.ndarray:
    """log P(empirical type = tv) for each row tv; -inf off the support of pmf."""
    pmf = np.asarray(pmf, dtype=np.float64)
    types = np.atleast_2d(types)
    with np.errstate(divide="ignore"):
        logp = np.log(pmf)
    # 0 * log 0 = 0
    terms = types * np.where(types > 0, logp, 0.0)
    return _log_multinomial(types) + terms.sum(axis=1)


def type_probability(P: DiscreteDistribution | Sequence[float], tv) -> float:
    """Exact multinomial probability that n draws from P have counts ``tv``."""
    pmf = P.pmf if isinstance(P, DiscreteDistribution) else np.asarray(P, dtype=np.float64)
    tv = np.asarray(tv, dtype=np.int64)
    if tv.shape != pmf.shape:
        raise ValueError("type vector length differs from the alphabet size")
    if np.any(tv < 0):
        raise ValueError("type counts must be non-negative")
    return float(np.exp(log_type_probabilities(pmf, tv[None, :])[0]))


def kld_to_types(types: np.ndarray, pmf: np.ndarray) -> np.ndarray:
    """D(tv/n || pmf) for every row of ``types``."""
    return np.array([kld_vec(tv / tv.sum(), pmf) for tv in np.atleast_2d(types)])


# -- regions ------------------------------------------------------------------

def _aligned_pmfs(P: DiscreteDistribution, Q: DiscreteDistribution):
    support, p, q = align(P, Q)
    return support, p, q


def exact_region_log_probability(P: DiscreteDistribution, Q: DiscreteDistribution,
                                 n: int, m: int, region: Region) -> float:
    """log P((P_n, Q_m) in region) for x^n ~ P and y^m ~ Q independent.

    ``region(R, S)`` receives frequency matrices ``R`` (a, t) and ``S`` (b, t)
    (rows are types divided by n and m) and returns a boolean (a, b) mask.
    """
    _, p, q = _aligned_pmfs(P, Q)
    t = len(p)
    R_types = enumerate_types(n, t)
    S_types = enumerate_types(m, t)
    if len(R_types) * len(S_types) > MAX_TYPES:
        raise EnumerationTooLarge(f"{len(R_types) * len(S_types)} type pairs exceeds cap {MAX_TYPES}")
    lp = log_type_probabilities(p, R_types)
    lq = log_type_probabilities(q, S_types)
    mask = np.asarray(region(R_types / n, S_types / m), dtype=bool)
    if mask.shape != (len(R_types), len(S_types)):
        raise ValueError(f"region returned shape {mask.shape}, expected {(len(R_types), len(S_types))}")
    joint = lp[:, None] + lq[None, :]
    sel = joint[mask]
    sel = sel[np.isfinite(sel)]
    if sel.size == 0:
        return -math.inf
    # logsumexp over the flattened selection; np.sum inside is pairwise, fixed order
    return float(logsumexp(sel))


def exact_region_probability(P, Q, n: int, m: int, region: Region) -> float:
    return math.exp(exact_region_log_probability(P, Q, n, m, region))


def pairwise_region(predicate: Callable[[np.ndarray, np.ndarray], bool]) -> Region:
    """Lift a scalar predicate on one (R, S) frequency pair to a Region."""
    def region(R, S):
        return np.array([[bool(predicate(r, s)) for s in S] for r in R], dtype=bool).reshape(len(R), len(S))
    return region


def everything(R, S):
    return np.ones((len(R), len(S)), dtype=bool)


def nothing(R, S):
    return np.zeros((len(R), len(S)), dtype=bool)


def mmd_acceptance_region(support, kernel: KernelSpec, gamma: float) -> Region:
    """{(R, S): d_k(R, S) <= gamma} with the alphabet embedded at ``support``."""
    Kmat = gram(np.asarray(support, dtype=np.float64), np.asarray(support, dtype=np.float64), kernel)

    def region(R, S):
        rr = np.einsum("ai,ij,aj->a", R, Kmat, R)
        ss = np.einsum("bi,ij,bj->b", S, Kmat, S)
        d2 = rr[:, None] + ss[None, :] - 2.0 * (R @ Kmat @ S.T)
        return np.sqrt(np.maximum(d2, 0.0)) <= gamma

    return region


@dataclass(frozen=True)
class RegionSandwich:
    lower: float
    exact: float
    upper: float
    min_exponent: float   # min over region pairs of n D(R||P) + m D(S||Q)

    @property
    def holds(self) -> bool:
        return self.lower <= self.exact * (1 + 1e-12) and self.exact <= self.upper * (1 + 1e-12)


def region_sandwich(P, Q, n: int, m: int, region: Region) -> RegionSandwich:
    """Exact region probability next to its two method-of-types bounds.

    upper = (n+1)^t (m+1)^t exp(-min_Gamma [n D(R||P) + m D(S||Q)])
    lower = (n+1)^-t (m+1)^-t exp(-[same minimum]), the minimum being
    attained by an achievable type pair in the region.
    """
    _, p, q = _aligned_pmfs(P, Q)
    t = len(p)
    R_types = enumerate_types(n, t)
    S_types = enumerate_types(m, t)
    mask = np.asarray(region(R_types / n, S_types / m), dtype=bool)
    exact = math.exp(exact_region_log_probability(P, Q, n, m, region))
    if not mask.any():
        return RegionSandwich(0.0, exact, 0.0, math.inf)
    cost = n * kld_to_types(R_types, p)[:, None] + m * kld_to_types(S_types, q)[None, :]
    best = float(cost[mask].min())
    poly = t * (math.log(n + 1) + math.log(m + 1))
    return RegionSandwich(math.exp(-poly - best), exact, math.exp(poly - best), best)


# -- exact error curve --------------------------------------------------------

@dataclass(frozen=True)
class ErrorCurveRow:
    n: int
    m: int
    beta: float
    log_beta: float
    rate: float
    dstar: float


def exact_error_curve(P: DiscreteDistribution, Q: DiscreteDistribution, kernel: KernelSpec,
                      n_list: Sequence[int], alpha: float = 0.05,
                      threshold_rule: Callable[[int, int, float, float], float] = ldb_threshold,
                      m_list: Sequence[int] | None = None) -> list[ErrorCurveRow]:
    """Exact type-II error of the test d_k(P_n, Q_m) <= gamma_{n,m} for each (n, m).

    ``rate`` is -log(beta) / (n + m); ``dstar`` is the exponent at c = n/(n+m).
    With P == Q the ``beta`` column is the exact acceptance probability.
    """
    support, _, _ = align(P, Q)
    m_list = list(n_list) if m_list is None else list(m_list)
    rows = []
    for n, m in zip(n_list, m_list):
        gamma = threshold_rule(n, m, kernel.bound, alpha)
        accept = mmd_acceptance_region(support, kernel, gamma)
        lb = exact_region_log_probability(P, Q, n, m, accept)
        if lb > math.log(0.5):
            # beta near 1: go through the rejection probability to keep digits
            lr = exact_region_log_probability(P, Q, n, m, lambda R, S: ~accept(R, S))
            lb = math.log1p(-math.exp(lr))
        rows.append(ErrorCurveRow(n, m, math.exp(lb), lb, -lb / (n + m), dstar(P, Q, n / (n + m))))
    return rows


def curve_to_csv(rows: Sequence[ErrorCurveRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "beta", "rate", "dstar"])
    for r in rows:
        w.writerow([r.n, r.m, repr(r.beta), repr(r.rate), repr(r.dstar)])
    return buf.getvalue()


# -- partitions ---------------------------------------------------------------

def check_partition(assignment: Sequence[int], t: int) -> tuple:
    a = tuple(int(v) for v in assignment)
    if len(a) != t:
        raise ValueError("partition must assign every symbol")
    cells = sorted(set(a))
    if cells != list(range(len(cells))):
        raise ValueError("cells must be labelled 0..r-1 with none empty")
    return a


def all_partitions(t: int) -> Iterator[tuple]:
    """Every set partition of {0..t-1}, as restricted-growth assignment tuples."""
    def grow(prefix, top):
        if len(prefix) == t:
            yield tuple(prefix)
            return
        for cell in range(top + 2):
            yield from grow(prefix + [cell], max(top, cell))
    yield from grow([0], 0) if t > 0 else iter(())


def aggregate(pmf: np.ndarray, assignment: Sequence[int]) -> np.ndarray:
    a = np.asarray(assignment)
    return np.bincount(a, weights=pmf, minlength=a.max() + 1)


def kld_partition(P: DiscreteDistribution, Q: DiscreteDistribution, partition: Sequence[int]) -> float:
    """D(P^A || Q^A) for the cell-aggregated distributions of a partition A.

    ``partition`` assigns each symbol of the aligned alphabet to a cell.
    """
    _, p, q = align(P, Q)
    a = check_partition(partition, len(p))
    return kld_vec(aggregate(p, a), aggregate(q, a))
