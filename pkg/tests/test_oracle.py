import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from lyriform.errors import ResourceLimitError
from lyriform.measures import ProbabilityMeasure, dirac
from lyriform.metric_core import FiniteMetricSpace, gen_equidistant
from lyriform.oracle import bottleneck_bruteforce, lp_subset_oracle, transport_vertices
from lyriform.suite import random_space


def test_transport_examples():
    sp = FiniteMetricSpace([[0, 1], [1, 0]])
    assert transport_vertices(dirac(sp, 0), dirac(sp, 1), 2.0) == pytest.approx(1.0, abs=1e-12)
    mu = ProbabilityMeasure(sp, [0.5, 0.5])
    assert transport_vertices(mu, mu, 1.0) == 0.0


def test_transport_matches_dense_lp():
    # the vertex enumeration against a plain LP over the full plan
    rng = np.random.default_rng(5)
    for _ in range(20):
        sp = random_space(rng, 4)
        a, b = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        p = float(rng.choice([1.0, 2.0]))
        cost = sp.dist**p
        eq = np.zeros((8, 16))
        for i in range(4):
            eq[i, 4 * i:4 * i + 4] = 1
            eq[4 + i, i::4] = 1
        ref = linprog(cost.ravel(), A_eq=eq, b_eq=np.r_[a, b], method="highs").fun ** (1 / p)
        got = transport_vertices(ProbabilityMeasure(sp, a), ProbabilityMeasure(sp, b), p)
        assert got == pytest.approx(ref, abs=1e-9)


def test_transport_budget():
    sp = gen_equidistant(5, 1.0)
    u = ProbabilityMeasure(sp, np.ones(5))
    with pytest.raises(ResourceLimitError):
        transport_vertices(u, u)


def test_bottleneck_examples():
    sp = FiniteMetricSpace([[0, 3], [3, 0]])
    assert bottleneck_bruteforce(sp, [0], [1]) == (3.0, (0,))
    sp4 = FiniteMetricSpace([[0, 5, 1, 5], [5, 0, 5, 1], [1, 5, 0, 5], [5, 1, 5, 0]])
    assert bottleneck_bruteforce(sp4, [0, 1], [2, 3]) == (1.0, (0, 1))
    with pytest.raises(ResourceLimitError):
        bottleneck_bruteforce(sp4, list(range(8)), list(range(8)))


def test_lp_examples():
    for d in (0.3, 2.0):
        sp = FiniteMetricSpace([[0, d], [d, 0]])
        assert lp_subset_oracle(dirac(sp, 0), dirac(sp, 1)) == pytest.approx(min(d, 1.0), abs=2e-4)
    sp = gen_equidistant(3, 0.5)
    mu = ProbabilityMeasure(sp, [0.2, 0.3, 0.5])
    assert lp_subset_oracle(mu, mu) == 0.0


def test_lp_subset_definition_by_hand():
    # two points at distance 0.5, mu = (0.7, 0.3), nu = (0.4, 0.6): for r <= 0.5 the
    # binding set is U = {x0}, needing 0.7 <= 0.4 + r, so the distance is 0.3
    sp = FiniteMetricSpace([[0, 0.5], [0.5, 0]])
    mu, nu = ProbabilityMeasure(sp, [0.7, 0.3]), ProbabilityMeasure(sp, [0.4, 0.6])
    assert lp_subset_oracle(mu, nu) == pytest.approx(0.3, abs=2e-4)


def test_lp_budget():
    sp = gen_equidistant(6, 1.0)
    u = ProbabilityMeasure(sp, np.ones(6))
    with pytest.raises(ResourceLimitError):
        lp_subset_oracle(u, u)
