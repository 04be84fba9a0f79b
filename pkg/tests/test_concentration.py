import math

import numpy as np
import pytest
from scipy import stats

from lyriform.concentration import (
    BUILTIN_FUNCTIONS,
    ExperimentConfig,
    median_concentration,
    run_experiment,
    sample_sphere_values,
    sanov_experiment,
    two_point_tail,
    variance_experiment,
)
from lyriform.measures import ProbabilityMeasure
from lyriform.metric_core import FiniteMetricSpace

TWO = FiniteMetricSpace([[0.0, 1.0], [1.0, 0.0]])
HALF = ProbabilityMeasure(TWO, [0.5, 0.5])


def test_samples_on_sphere_and_functions_lipschitz():
    k = 6
    vals = sample_sphere_values(k, 500, 0, list(BUILTIN_FUNCTIONS))
    assert vals.shape == (500, len(BUILTIN_FUNCTIONS))
    rng = np.random.default_rng(1)
    g = rng.standard_normal((400, k))
    x = g / np.linalg.norm(g, axis=1, keepdims=True)
    for f in BUILTIN_FUNCTIONS.values():
        fx = f(x)
        gap = np.abs(fx[:200] - fx[200:])
        geo = np.arccos(np.clip(np.sum(x[:200] * x[200:], axis=1), -1, 1))
        assert np.all(gap <= geo + 1e-9)


def test_constant_function_has_zero_variance():
    res = variance_experiment(5, ["constant"], 2000, 0)
    assert res.rows[0]["statistic"] == 0.0 and res.passed


def test_variance_bound_passes():
    res = variance_experiment(10, None, 20_000, 3)
    assert res.passed
    assert {r["function"] for r in res.rows} == set(BUILTIN_FUNCTIONS)


def test_coordinate_variance_matches_closed_form():
    # a coordinate of a uniform point on S^(k-1) has variance 1/k
    res = variance_experiment(8, ["coord_first"], 50_000, 5)
    row = res.rows[0]
    assert abs(row["statistic"] - 1 / 8) <= 4 * row["stderr"]


def test_variance_input_errors():
    with pytest.raises(ValueError):
        variance_experiment(2, None, 100, 0)
    with pytest.raises(ValueError):
        variance_experiment(5, ["nope"], 100, 0)


def test_two_point_tail_against_direct_sum():
    n, eps = 100, 0.2
    direct = sum(math.comb(n, s) * 0.5**n for s in range(n + 1) if abs(s / n - 0.5) >= eps - 1e-12)
    assert two_point_tail(n, eps) == pytest.approx(direct, rel=1e-12)
    assert two_point_tail(n, eps) == pytest.approx(2 * stats.binom.cdf(30, n, 0.5), rel=1e-12)


def test_sanov_on_a_point_mass():
    mu = ProbabilityMeasure(TWO, [1.0, 0.0])
    with pytest.warns(RuntimeWarning):
        res = sanov_experiment(TWO, mu, 20, 0.1, 200, 0)
    assert res.tail_probability == 0.0 and res.passed


def test_sanov_matches_exact_tail():
    res = sanov_experiment(TWO, HALF, 50, 0.1, 4000, 11)
    exact = two_point_tail(50, 0.1)
    stderr = math.sqrt(exact * (1 - exact) / 4000)
    assert abs(res.tail_probability - exact) <= 3 * stderr
    assert res.summary["sharp_bound"] <= res.bound


def test_sanov_deterministic_and_job_independent():
    a = sanov_experiment(TWO, HALF, 30, 0.2, 300, 4)
    b = sanov_experiment(TWO, HALF, 30, 0.2, 300, 4)
    c = sanov_experiment(TWO, HALF, 30, 0.2, 300, 4, jobs=2)
    assert a.fingerprint() == b.fingerprint() == c.fingerprint()


def test_sanov_errors():
    with pytest.raises(ValueError):
        sanov_experiment(TWO, HALF, 0, 0.1, 10, 0)
    with pytest.raises(ValueError):
        sanov_experiment(TWO, HALF, 10, 0.0, 10, 0)


def test_median_tail_monotone():
    res = median_concentration(20, "coord_first", (0.05, 0.1, 0.2, 0.4), 20_000, 0)
    assert res.passed
    assert np.all(np.diff(res.statistics) <= 0)
    assert res.summary["fitted_rate"] > 0


def test_config_roundtrip_and_run(tmp_path):
    cfg = ExperimentConfig.from_json({"kind": "variance", "k": 5, "trials": 500, "seed": 2})
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    res = run_experiment(cfg)
    path = tmp_path / "v.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("function,statistic")
    assert len(lines) == 1 + len(BUILTIN_FUNCTIONS)
    with pytest.raises(ValueError):
        ExperimentConfig.from_json({"kind": "bogus"})
    with pytest.raises(ValueError):
        ExperimentConfig.from_json({"kind": "variance", "extra": 1})
