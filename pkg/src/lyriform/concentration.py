"""Monte Carlo experiments on concentration of measure.

Three experiments: variances of 1-Lipschitz functions on round spheres,
tail curves around the median, and deviation probabilities of empirical
measures in W_1.  Randomness is derived from the master seed and the trial
(or block) index only, so results do not depend on execution order.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .measures import ProbabilityMeasure
from .metric_core import FiniteMetricSpace
from .ot_distances import wasserstein_p

BLOCK = 4096
SAMPLE_BUDGET = 10**8
EPS_SLACK = 1e-12


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _pmap(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SphereFunction:
    """A 1-Lipschitz function on S^(k-1) with the geodesic metric, vectorized over rows."""

    name: str
    kind: str
    index: int = 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        k = x.shape[1]
        if self.kind == "coord":
            # |x_i - y_i| <= |x - y| <= geodesic distance
            return x[:, self.index % k]
        if self.kind == "dist_vertex":
            return np.arccos(np.clip(x[:, self.index % k], -1.0, 1.0))
        if self.kind == "dist_diagonal":
            return np.arccos(np.clip(x.sum(axis=1) / math.sqrt(k), -1.0, 1.0))
        if self.kind == "const":
            return np.zeros(x.shape[0])
        raise ValueError(f"unknown sphere function kind {self.kind!r}")


BUILTIN_FUNCTIONS = {
    "coord_first": SphereFunction("coord_first", "coord", 0),
    "coord_last": SphereFunction("coord_last", "coord", -1),
    "dist_pole": SphereFunction("dist_pole", "dist_vertex", 0),
    "dist_diagonal": SphereFunction("dist_diagonal", "dist_diagonal"),
}
CONSTANT = SphereFunction("constant", "const")


def sphere_function(name: str) -> SphereFunction:
    if name == "constant":
        return CONSTANT
    try:
        return BUILTIN_FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown function {name!r}; choose from {sorted(BUILTIN_FUNCTIONS)} or 'constant'") from None


@dataclass
class TrialResult:
    """Outcome of one experiment.

    ``statistics`` holds the per-trial (or per-sample) statistic, ``rows`` the
    tabular summary written to CSV.
    """

    kind: str
    statistics: np.ndarray
    tail_probability: Optional[float]
    bound: float
    passed: bool
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        if not self.rows:
            return
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "tail_probability": self.tail_probability,
            "bound": self.bound,
            "passed": self.passed,
            "summary": self.summary,
        }

    def fingerprint(self) -> str:
        """Stable text form used to compare replays."""
        return json.dumps(
            {"result": self.to_json(), "rows": self.rows, "stat": np.asarray(self.statistics).tobytes().hex()},
            sort_keys=True,
        )


def _sphere_block(args):
    k, count, seed, block, names = args
    rng = _rng(seed, block)
    g = rng.standard_normal((count, k))
    x = g / np.linalg.norm(g, axis=1, keepdims=True)
    return np.stack([sphere_function(n)(x) for n in names], axis=1)


def sample_sphere_values(k: int, trials: int, seed: int, names: Sequence[str], jobs: int = 1) -> np.ndarray:
    """Values of the named functions at ``trials`` uniform points of S^(k-1), drawn in fixed blocks."""
    blocks = [(k, min(BLOCK, trials - s), seed, b, tuple(names)) for b, s in enumerate(range(0, trials, BLOCK))]
    return np.concatenate(_pmap(_sphere_block, blocks, jobs), axis=0)


def variance_experiment(
    k: int,
    functions: Optional[Sequence[str]] = None,
    trials: int = 100_000,
    seed: int = 0,
    jobs: int = 1,
) -> TrialResult:
    """Sample variance of each test function against the bound 1/(k - 2).

    A function passes when its estimate is at most ``1/(k-2) + 3 * stderr``;
    the standard error of the sample variance uses the fourth central moment.
    """
    if k < 3:
        raise ValueError("sphere dimension k must be at least 3 for the variance bound")
    if trials < 2:
        raise ValueError("need at least two samples")
    names = list(functions) if functions is not None else list(BUILTIN_FUNCTIONS)
    values = sample_sphere_values(k, trials, seed, names, jobs)
    bound = 1.0 / (k - 2)
    rows = []
    all_pass = True
    for col, name in enumerate(names):
        v = values[:, col]
        centered = v - v.mean()
        var = float(np.mean(centered**2) * trials / (trials - 1))
        m4 = float(np.mean(centered**4))
        stderr = math.sqrt(max(m4 - var**2, 0.0) / trials)
        ok = var <= bound + 3.0 * stderr
        all_pass &= ok
        rows.append({"function": name, "statistic": var, "stderr": stderr, "bound": bound, "pass": ok})
    return TrialResult(
        "variance", values, None, bound, bool(all_pass), rows,
        {"k": k, "trials": trials, "seed": seed, "functions": names},
    )


def _sanov_trials(args):
    space, weights, n, seed, start, stop = args
    mu = ProbabilityMeasure(space, weights)
    out = np.empty(stop - start)
    for t in range(start, stop):
        rng = _rng(seed, t)
        counts = rng.multinomial(n, weights)
        out[t - start] = wasserstein_p(ProbabilityMeasure(space, counts / n), mu, 1.0)[0]
    return out


def sanov_experiment(
    space: FiniteMetricSpace,
    mu: ProbabilityMeasure,
    n: int,
    eps: float,
    trials: int = 10_000,
    seed: int = 0,
    jobs: int = 1,
) -> TrialResult:
    """Frequency of ``W_1(mu_n, mu) >= eps`` against ``exp(-n eps^2 / diam^2)``.

    ``mu_n`` is the empirical measure of ``n`` independent draws from ``mu``;
    each trial has its own seed derived from the master seed.  The event is
    tested with an absolute slack of 1e-12 so that decimal-exact deviations
    are not lost to rounding.  The sharper rate ``exp(-2 n eps^2 / diam^2)``
    is reported alongside.
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if n * trials > SAMPLE_BUDGET:
        raise ValueError(f"n * trials = {n * trials} exceeds the budget of {SAMPLE_BUDGET} draws")
    if not mu.space.same_as(space):
        raise ValueError("mu does not live on the given space")
    if np.any(mu.weights <= 0):
        warnings.warn("mu is not faithful: some points carry no mass", RuntimeWarning, stacklevel=2)
    chunk = max(1, -(-trials // max(jobs, 1)))
    parts = [(space, mu.weights, n, seed, s, min(s + chunk, trials)) for s in range(0, trials, chunk)]
    stat = np.concatenate(_pmap(_sanov_trials, parts, jobs))
    hits = stat >= eps - EPS_SLACK
    p_hat = float(hits.mean())
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / trials)
    diam = space.diam
    bound = math.exp(-n * eps**2 / diam**2) if diam > 0 else 0.0
    sharp = math.exp(-2.0 * n * eps**2 / diam**2) if diam > 0 else 0.0
    passed = p_hat <= bound + 3.0 * stderr
    rows = [
        {"trial": t, "statistic": float(stat[t]), "bound": bound, "pass": bool(not hits[t])}
        for t in range(trials)
    ]
    summary = {
        "n": n, "eps": eps, "trials": trials, "seed": seed, "diam": diam,
        "tail_probability": p_hat, "stderr": stderr, "bound": bound,
        "sharp_bound": sharp, "margin_to_sharp_bound": sharp - p_hat,
    }
    return TrialResult("sanov", stat, p_hat, bound, bool(passed), rows, summary)


def two_point_tail(n: int, eps: float, p: float = 0.5, dist: float = 1.0) -> float:
    """Exact ``P(W_1(mu_n, mu) >= eps)`` on two points at distance ``dist`` with ``mu = (p, 1-p)``.

    ``W_1 = |S/n - p| * dist`` where ``S`` counts draws of the first point.
    """
    s = np.arange(n + 1)
    w = np.abs(s / n - p) * dist
    pmf = stats.binom.pmf(s, n, p)
    return float(pmf[w >= eps - EPS_SLACK].sum())


def median_concentration(
    k: int,
    f: SphereFunction | str = "coord_first",
    eps_grid: Sequence[float] = (0.05, 0.1, 0.2, 0.3, 0.5),
    trials: int = 100_000,
    seed: int = 0,
    jobs: int = 1,
) -> TrialResult:
    """Empirical ``P(|f - M_f| > eps)`` over an eps grid, ``M_f`` the sample median.

    The fitted rate ``c`` of ``tail ~ C exp(-c k eps^2)`` is reported; no
    constants are asserted.  ``passed`` only records that the curve is
    nonincreasing in eps.
    """
    if k < 3:
        raise ValueError("sphere dimension k must be at least 3")
    name = f if isinstance(f, str) else f.name
    eps = np.asarray(sorted(eps_grid), dtype=float)
    if eps.size == 0 or np.any(eps <= 0):
        raise ValueError("eps grid must be nonempty and positive")
    values = sample_sphere_values(k, trials, seed, [name], jobs)[:, 0]
    med = float(np.median(values))
    dev = np.abs(values - med)
    tails = np.array([(dev > e).mean() for e in eps])
    reference = 2.0 * np.exp(-k * eps**2 / 2.0)
    pos = tails > 0
    rate = None
    if pos.sum() >= 2:
        slope, _ = np.polyfit(k * eps[pos] ** 2, np.log(tails[pos]), 1)
        rate = float(-slope)
    monotone = bool(np.all(np.diff(tails) <= 0))
    rows = [
        {"eps": float(e), "statistic": float(t), "bound": float(r), "pass": bool(t <= r)}
        for e, t, r in zip(eps, tails, reference)
    ]
    summary = {"k": k, "function": name, "trials": trials, "seed": seed, "median": med, "fitted_rate": rate, "monotone": monotone}
    return TrialResult("median", tails, None, float(reference[0]), monotone, rows, summary)


@dataclass
class ExperimentConfig:
    kind: str
    k: Optional[int] = None
    n: Optional[int] = None
    eps: float | list = 0.1
    trials: int = 1000
    seed: int = 0
    functions: Optional[list] = None
    space: Optional[dict] = None
    mu: Optional[list] = None

    def __post_init__(self):
        if self.kind not in ("variance", "sanov", "median"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        eps = self.eps if isinstance(self.eps, list) else [self.eps]
        if self.kind != "variance" and any(not e > 0 for e in eps):
            raise ValueError("eps must be positive")

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        return cls(**obj)

    def to_json(self) -> dict:
        return asdict(self)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> TrialResult:
    if config.kind == "variance":
        return variance_experiment(config.k, config.functions, config.trials, config.seed, jobs)
    if config.kind == "median":
        fname = (config.functions or ["coord_first"])[0]
        grid = config.eps if isinstance(config.eps, list) else [config.eps]
        return median_concentration(config.k, fname, grid, config.trials, config.seed, jobs)
    if config.space is None:
        space = FiniteMetricSpace([[0.0, 1.0], [1.0, 0.0]])
    else:
        space = FiniteMetricSpace.from_json(config.space)
    weights = config.mu if config.mu is not None else np.ones(space.size)
    mu = ProbabilityMeasure(space, weights)
    return sanov_experiment(space, mu, config.n, float(config.eps), config.trials, config.seed, jobs)
