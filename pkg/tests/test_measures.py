import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyriform.errors import MalformedInputError, SpaceMismatchError
from lyriform.measures import ProbabilityMeasure, dirac, empirical, mixture, pushforward
from lyriform.metric_core import gen_equidistant

TWO = gen_equidistant(2, 0.5)
FIVE = gen_equidistant(5, 1.0)


def test_dirac():
    assert np.array_equal(dirac(TWO, 0).weights, [1.0, 0.0])
    assert dirac(FIVE, 3).weights.sum() == 1.0
    with pytest.raises(IndexError):
        dirac(TWO, 2)


def test_mixture_examples():
    x = dirac(TWO, 0)
    assert np.array_equal(mixture([0.5, 0.5], [x, x]).weights, x.weights)
    assert np.array_equal(mixture([1.0], [x]).weights, x.weights)
    assert np.allclose(mixture([0.5, 0.5], [dirac(TWO, 0), dirac(TWO, 1)]).weights, [0.5, 0.5])
    n = 4
    mu_n = mixture([1 / n, (n - 1) / n], [dirac(TWO, 1), dirac(TWO, 0)])
    assert np.allclose(mu_n.weights, [0.75, 0.25])


def test_mixture_errors():
    with pytest.raises(ValueError):
        mixture([0.5, 0.6], [dirac(TWO, 0), dirac(TWO, 1)])
    with pytest.raises(SpaceMismatchError):
        mixture([0.5, 0.5], [dirac(TWO, 0), dirac(FIVE, 1)])


def test_pushforward_examples():
    mu = ProbabilityMeasure(TWO, [0.3, 0.7])
    assert np.array_equal(pushforward([0, 1], mu).weights, mu.weights)
    assert np.array_equal(pushforward([1, 1], mu).weights, [0.0, 1.0])
    assert np.allclose(pushforward([1, 0], mu).weights, [0.7, 0.3])
    with pytest.raises(IndexError):
        pushforward([0, 5], mu)


def test_empirical():
    assert np.array_equal(empirical(TWO, [0]).weights, [1.0, 0.0])
    assert np.allclose(empirical(TWO, [0, 0, 1]).weights, [2 / 3, 1 / 3])
    assert np.allclose(empirical(TWO, [0, 1], [2, 1]).weights, [2 / 3, 1 / 3])
    with pytest.raises(ValueError):
        empirical(TWO, [])


def test_normalization_and_clamp():
    mu = ProbabilityMeasure(FIVE, [1, 1, 1, 1, -1e-15])
    assert mu.weights[4] == 0.0 and abs(mu.weights.sum() - 1) <= 1e-12
    with pytest.raises(MalformedInputError):
        ProbabilityMeasure(FIVE, [1, 1, 1, 1, -1e-3])
    with pytest.raises(MalformedInputError):
        ProbabilityMeasure(FIVE, [0, 0, 0, 0, 0])
    with pytest.raises(MalformedInputError):
        ProbabilityMeasure(FIVE, [1, 1])


weights = st.lists(st.floats(0, 1), min_size=5, max_size=5).filter(lambda w: sum(w) > 1e-3)


@settings(max_examples=60, deadline=None)
@given(weights, weights, weights, st.floats(0, 1), st.floats(0, 1), st.lists(st.integers(0, 4), min_size=5, max_size=5))
def test_mixture_properties(a, b, c, s, t, fmap):
    ma, mb, mc = (ProbabilityMeasure(FIVE, w) for w in (a, b, c))
    # associativity
    left = mixture([s, 1 - s], [mixture([t, 1 - t], [ma, mb]), mc])
    right = mixture([s * t, s * (1 - t), 1 - s], [ma, mb, mc])
    assert np.allclose(left.weights, right.weights, atol=1e-12)
    # pushforward commutes with mixtures and preserves mass
    pushed = pushforward(fmap, mixture([s, 1 - s], [ma, mb]))
    mixed = mixture([s, 1 - s], [pushforward(fmap, ma), pushforward(fmap, mb)])
    assert np.allclose(pushed.weights, mixed.weights, atol=1e-12)
    raw = np.bincount(fmap, weights=ma.weights, minlength=5)
    assert abs(raw.sum() - ma.weights.sum()) <= 1e-15
