import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmdexp.distributions import DiscreteDistribution, kld, sample
from mmdexp.kernels import KernelSpec
from mmdexp.mmd import mmd2_biased
from mmdexp.sanov import (EnumerationTooLarge, aggregate, all_partitions, curve_to_csv,
                          enumerate_types, everything, exact_error_curve,
                          exact_region_probability, kld_partition, kld_to_types,
                          log_type_probabilities, mmd_acceptance_region, nothing,
                          pairwise_region, region_sandwich, type_count, type_probability)
from mmdexp.thresholds import ldb_threshold

from strategies import pmfs

K1 = KernelSpec(1.0)


def test_small_enumerations():
    assert sorted(map(tuple, enumerate_types(2, 2).tolist())) == [(0, 2), (1, 1), (2, 0)]
    assert len(enumerate_types(1, 3)) == 3
    assert len(enumerate_types(30, 3)) == 496 == math.comb(32, 2)


@pytest.mark.parametrize("t", [2, 3, 4, 5])
@pytest.mark.parametrize("n", [1, 2, 7, 15])
def test_enumeration_is_complete_and_distinct(n, t):
    types = enumerate_types(n, t)
    assert len(types) == type_count(n, t) <= (n + 1) ** t
    assert np.all(types.sum(axis=1) == n) and np.all(types >= 0)
    assert len({tuple(r) for r in types.tolist()}) == len(types)


@pytest.mark.parametrize("n, t", [(0, 2), (3, 1), (3, 6)])
def test_enumeration_preconditions(n, t):
    with pytest.raises(ValueError):
        enumerate_types(n, t)


def test_enumeration_cap():
    with pytest.raises(EnumerationTooLarge):
        enumerate_types(400, 5)


def test_type_probability_examples():
    assert type_probability([0.5, 0.5], [1, 1]) == pytest.approx(0.5, abs=1e-15)
    assert 3.0 ** -2 <= 0.5 <= 1.0
    assert type_probability([1.0, 0.0], [9, 0]) == 1.0
    assert type_probability([1.0, 0.0], [8, 1]) == 0.0


@given(pmfs(2, 5), st.integers(1, 12))
def test_type_probabilities_sum_to_one(p, n):
    lp = log_type_probabilities(p, enumerate_types(n, len(p)))
    assert math.fsum(np.exp(lp)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40)
@given(pmfs(2, 3), st.integers(1, 30))
def test_type_probability_sandwich(p, n):
    t = len(p)
    types = enumerate_types(n, t)
    lp = log_type_probabilities(p, types)
    up = -n * kld_to_types(types, p)
    lo = up - t * math.log(n + 1)
    assert np.all(lo <= lp + 1e-12)
    assert np.all(lp <= up + 1e-12)


def test_trivial_regions(coin_pair):
    p, q = coin_pair
    assert exact_region_probability(p, q, 5, 6, everything) == pytest.approx(1.0, abs=1e-14)
    assert exact_region_probability(p, q, 5, 6, nothing) == 0.0


def test_pairwise_region_matches_vectorized(coin_pair):
    p, q = coin_pair
    gamma = 0.3
    vec = mmd_acceptance_region([[0.0], [1.0]], K1, gamma)
    G = np.array([[1.0, math.exp(-1)], [math.exp(-1), 1.0]])
    scalar = pairwise_region(lambda r, s: math.sqrt(max((r - s) @ G @ (r - s), 0.0)) <= gamma)
    assert exact_region_probability(p, q, 8, 9, vec) == pytest.approx(
        exact_region_probability(p, q, 8, 9, scalar), abs=1e-15)


@pytest.mark.slow
def test_region_probability_against_monte_carlo(coin_pair):
    p, q = coin_pair
    n = m = 40
    gamma = 0.15
    exact = exact_region_probability(p, q, n, m, mmd_acceptance_region([[0.0], [1.0]], K1, gamma))
    rng = np.random.default_rng(123)
    trials = 10**5
    # only the counts matter: x ~ Bin(40, 0.5) ones, y ~ Bin(40, 0.1) ones
    kx = rng.binomial(n, 0.5, trials)
    ky = rng.binomial(m, 0.1, trials)
    diff = kx / n - ky / m
    d2 = 2 * diff**2 * (1 - math.exp(-1))
    freq = float(np.mean(np.sqrt(d2) <= gamma))
    se = math.sqrt(exact * (1 - exact) / trials)
    assert abs(freq - exact) <= 4 * se


def test_region_helper_agrees_with_statistic(coin_pair):
    # the acceptance region evaluated at a sample's types equals the sample-level test
    p, q = coin_pair
    x, y = sample(p, 13, 1), sample(q, 11, 2)
    R = np.array([[np.mean(x == 0), np.mean(x == 1)]])
    S = np.array([[np.mean(y == 0), np.mean(y == 1)]])
    d = mmd2_biased(x, y, K1).distance
    for gamma in (d - 1e-9, d + 1e-9):
        assert bool(mmd_acceptance_region([[0.0], [1.0]], K1, gamma)(R, S)[0, 0]) == (d <= gamma)


@pytest.mark.parametrize("n, m", [(3, 4), (10, 10), (20, 15)])
def test_region_sandwich_holds(coin_pair, n, m):
    p, q = coin_pair
    for gamma in (0.1, 0.3, 0.6):
        rej = mmd_acceptance_region([[0.0], [1.0]], K1, gamma)
        sw = region_sandwich(p, q, n, m, lambda R, S: ~rej(R, S))
        assert sw.holds


def test_error_curve_under_null(coin_pair):
    p, _ = coin_pair
    rows = exact_error_curve(p, p, K1, [10, 20, 40], alpha=0.05)
    for r in rows:
        assert r.beta >= 0.95
        assert r.dstar == 0.0


def test_error_curve_csv(coin_pair):
    p, q = coin_pair
    text = curve_to_csv(exact_error_curve(p, q, K1, [10, 20]))
    lines = text.splitlines()
    assert lines[0] == "n,m,beta,rate,dstar"
    assert len(lines) == 3


def test_error_curve_trend(coin_pair):
    p, q = coin_pair
    D = 0.111572
    rows = exact_error_curve(p, q, K1, [25, 50, 100, 200], 0.05, ldb_threshold)
    rates = [r.rate for r in rows]
    assert all(a < b for a, b in zip(rates, rates[1:]))
    assert rates[-1] >= 0.5 * D


def test_partition_examples(coin_pair):
    p = DiscreteDistribution.on_alphabet([0.2, 0.3, 0.5])
    q = DiscreteDistribution.on_alphabet([0.4, 0.4, 0.2])
    assert kld_partition(p, q, [0, 0, 0]) == 0.0
    assert kld_partition(p, q, [0, 1, 2]) == pytest.approx(kld(p, q), abs=1e-15)
    with pytest.raises(ValueError):
        kld_partition(p, q, [0, 2, 2])


def test_all_partitions_counts():
    # Bell numbers
    assert [len(list(all_partitions(t))) for t in range(1, 6)] == [1, 2, 5, 15, 52]


@given(pmfs(3, 5, positive=True), st.data())
def test_coarsening_never_increases_divergence(p, data):
    q = data.draw(pmfs(len(p), len(p), positive=True))
    P, Q = DiscreteDistribution.on_alphabet(p), DiscreteDistribution.on_alphabet(q)
    parts = list(all_partitions(len(p)))
    fine = data.draw(st.sampled_from(parts))
    # merge two cells of ``fine`` (when it has at least two) to get a coarsening
    cells = max(fine) + 1
    if cells < 2:
        return
    a, b = sorted(data.draw(st.lists(st.integers(0, cells - 1), min_size=2, max_size=2, unique=True)))
    merged = [a if c == b else c for c in fine]
    relabel = {c: i for i, c in enumerate(dict.fromkeys(merged))}
    coarse = [relabel[c] for c in merged]
    assert kld_partition(P, Q, coarse) <= kld_partition(P, Q, fine) + 1e-12
    assert kld_partition(P, Q, fine) <= kld(P, Q) + 1e-12


def test_aggregate():
    np.testing.assert_allclose(aggregate(np.array([0.1, 0.2, 0.3, 0.4]), [0, 1, 0, 1]), [0.4, 0.6])
