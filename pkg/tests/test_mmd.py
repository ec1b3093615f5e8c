import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmdexp.distributions import DiscreteDistribution, empirical
from mmdexp.kernels import KernelSpec
from mmdexp.mmd import mmd2_biased, mmd2_unbiased, mmd_population_discrete, mmd_sup_family

from strategies import sample_pairs, samples

K1 = KernelSpec(1.0)


def test_identical_samples_give_zero():
    x = np.random.default_rng(0).normal(size=(20, 2))
    assert mmd2_biased(x, x, K1).squared == 0.0


@pytest.mark.parametrize("x, y", [([0.0], [1.0]), ([0.0, 0.0], [1.0, 1.0])])
def test_biased_two_points(x, y):
    assert mmd2_biased(x, y, K1).squared == pytest.approx(2 - 2 * math.exp(-1), abs=1e-15)
    assert mmd2_biased(x, y, K1).squared == pytest.approx(1.2642411176571153, abs=1e-15)


def test_unbiased_hand_value():
    v = mmd2_unbiased([0.0, 1.0], [0.0, 1.0], K1)
    assert v.squared == pytest.approx(math.exp(-1) - 1, abs=1e-15)
    with pytest.raises(ValueError):
        v.distance


def test_unbiased_needs_two_points():
    with pytest.raises(ValueError):
        mmd2_unbiased([0.0], [0.0, 1.0], K1)


@given(sample_pairs(2, 15))
def test_estimators_symmetric(pair):
    x, y = pair
    assert mmd2_biased(x, y, K1).squared == pytest.approx(mmd2_biased(y, x, K1).squared, abs=1e-14)
    assert mmd2_unbiased(x, y, K1).squared == pytest.approx(mmd2_unbiased(y, x, K1).squared, abs=1e-14)


@given(st.integers(2, 30).flatmap(lambda n: st.tuples(samples(n, n, dim=2), samples(n, n, dim=2))))
def test_biased_unbiased_gap(pair):
    x, y = pair
    n = len(x)
    gap = abs(mmd2_unbiased(x, y, K1).squared - mmd2_biased(x, y, K1).squared)
    assert gap <= 2 * K1.bound / n + 1e-12


@given(sample_pairs(1, 15), st.floats(0.2, 5.0))
def test_biased_equals_population_of_empiricals(pair, w):
    x, y = pair
    k = KernelSpec(w)
    exact = mmd_population_discrete(empirical(x), empirical(y), k)
    assert exact == pytest.approx(mmd2_biased(x, y, k).distance, abs=1e-7)


def test_population_examples(coin_pair):
    p, _ = coin_pair
    assert mmd_population_discrete(p, p, K1) == 0.0
    d0 = DiscreteDistribution([[0.0]], [1.0])
    d1 = DiscreteDistribution([[1.0]], [1.0])
    assert mmd_population_discrete(d0, d1, K1) == pytest.approx(math.sqrt(2 - 2 * math.exp(-1)), abs=1e-15)
    assert mmd_population_discrete(d0, d1, K1) == pytest.approx(1.1243847729568004, abs=1e-15)


def test_population_coin_pair(coin_pair):
    p, q = coin_pair
    # diff = (-0.4, 0.4): MMD^2 = 0.32 (1 - e^-1)
    assert mmd_population_discrete(p, q, K1) == pytest.approx(math.sqrt(0.32 * (1 - math.exp(-1))))


def test_sup_family():
    rng = np.random.default_rng(11)
    x, y = rng.normal(size=(30, 1)), rng.normal(0.5, 1, size=(25, 1))
    k1, k2 = KernelSpec(1.0), KernelSpec(2.0)
    single = mmd_sup_family(x, y, [k1])
    assert single == mmd2_biased(x, y, k1).distance
    both = mmd_sup_family(x, y, [k1, k2])
    assert both == max(mmd2_biased(x, y, k).distance for k in (k1, k2))
    assert mmd_sup_family(x, y, [k1, k2, KernelSpec(0.1)]) >= both


def test_sup_family_validation():
    with pytest.raises(ValueError):
        mmd_sup_family([0.0], [1.0], [])
    with pytest.raises(ValueError):
        mmd_sup_family([0.0], [1.0], [KernelSpec(1.0), KernelSpec(1.0, bound=2.0)])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        mmd2_biased(np.zeros((3, 2)), np.zeros((3, 1)), K1)


@given(sample_pairs(2, 10))
def test_block_size_does_not_change_statistic(pair):
    x, y = pair
    assert mmd2_biased(x, y, K1, block_size=1).squared == mmd2_biased(x, y, K1).squared
