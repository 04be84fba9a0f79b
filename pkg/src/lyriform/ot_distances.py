"""Wasserstein, Levy-Prokhorov and bottleneck distances on finite spaces.

All primal problems are solved exactly: transport by successive shortest
paths on the dense bipartite support graph, threshold problems by bipartite
max-flow.  Every solve is restricted to the supports of the two measures.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from ._kernels import bipartite_maxflow, transport_ssp
from .measures import ProbabilityMeasure, same_space
from .metric_core import FiniteMetricSpace

MAX_P = 64.0
MASS_EPS = 1e-14
FLOW_SLACK = 1e-10
LOG_COST_CAP = 690.0  # exp(690) is still finite


@dataclass(frozen=True, eq=False)
class Coupling:
    """Transport plan between two measures on the same space."""

    source: ProbabilityMeasure
    target: ProbabilityMeasure
    plan: np.ndarray

    def marginal_error(self) -> float:
        rows = np.abs(self.plan.sum(axis=1) - self.source.weights).max()
        cols = np.abs(self.plan.sum(axis=0) - self.target.weights).max()
        return float(max(rows, cols))

    def is_valid(self, tol: float = 1e-9) -> bool:
        return bool(self.plan.min() >= 0.0 and self.marginal_error() <= tol)

    def cost(self, p: float = 1.0) -> float:
        d = self.source.space.dist
        if math.isinf(p):
            mask = self.plan > MASS_EPS
            return float(d[mask].max()) if mask.any() else 0.0
        return float((self.plan * d**p).sum()) ** (1.0 / p)


def _supports(mu: ProbabilityMeasure, nu: ProbabilityMeasure):
    s = mu.support
    t = nu.support
    return s, t, mu.weights[s], nu.weights[t]


def _embed(space_size: int, s, t, block: np.ndarray) -> np.ndarray:
    plan = np.zeros((space_size, space_size))
    plan[np.ix_(s, t)] = np.maximum(block, 0.0)
    return plan


def _balanced(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return b * (a.sum() / b.sum())


def _solve_transport(cost: np.ndarray, a: np.ndarray, b: np.ndarray):
    plan, u, v, status = transport_ssp(
        np.ascontiguousarray(cost, dtype=float), a.astype(float), _balanced(a, b).astype(float), MASS_EPS
    )
    if status != 0:
        raise RuntimeError("transport solver did not converge")
    return plan, u, v


def wasserstein_p(mu: ProbabilityMeasure, nu: ProbabilityMeasure, p: float = 1.0) -> tuple[float, Coupling]:
    """Exact W_p for ``1 <= p < inf`` with an optimal coupling.

    Distances are divided by a reference scale before powering so that large
    ``p`` neither overflows nor loses the cheap arcs to rounding: the scale
    is W_inf(mu, nu) for ``p > 1`` and the diameter for ``p == 1``.  Values
    of ``p`` above 64 are clamped to 64.
    """
    space = same_space(mu, nu)
    if not p >= 1.0 or math.isinf(p) or math.isnan(p):
        raise ValueError(f"p must be a finite real >= 1, got {p!r}")
    if p > MAX_P:
        warnings.warn(f"p = {p} clamped to {MAX_P} for the primal solve", RuntimeWarning, stacklevel=2)
        p = MAX_P
    s, t, a, b = _supports(mu, nu)
    d = space.dist[np.ix_(s, t)]
    if p == 1.0:
        scale = space.diam
    else:
        scale = _winf_value(d, a, b)[0]
    if scale <= 0.0:
        plan = _embed(space.size, s, t, _diagonal_block(s, t, a))
        return 0.0, Coupling(mu, nu, plan)
    ratio = d / scale
    with np.errstate(divide="ignore"):
        logc = p * np.log(ratio)
    cost = np.exp(np.minimum(logc, LOG_COST_CAP))
    block, _, _ = _solve_transport(cost, a, b)
    total = float((block * cost).sum())
    value = scale * total ** (1.0 / p)
    return value, Coupling(mu, nu, _embed(space.size, s, t, block))


def _diagonal_block(s, t, a):
    # identical measures: ship every point to itself
    block = np.zeros((s.size, t.size))
    pos = {int(j): k for k, j in enumerate(t)}
    for r, i in enumerate(s):
        block[r, pos[int(i)]] = a[r]
    return block


def wasserstein_1_dual(mu: ProbabilityMeasure, nu: ProbabilityMeasure) -> tuple[float, np.ndarray]:
    """W_1 through the Kantorovich-Rubinstein dual.

    A linear program over potentials on the union of the supports, one
    Lipschitz constraint per ordered pair; the optimal potential is then
    extended to the whole space by the McShane formula, which keeps it
    1-Lipschitz.
    """
    space = same_space(mu, nu)
    diff = mu.weights - nu.weights
    u_idx = np.flatnonzero((mu.weights > 0) | (nu.weights > 0))
    k = u_idx.size
    if k == 1 or not np.any(diff != 0):
        return 0.0, np.zeros(space.size)
    d = space.dist[np.ix_(u_idx, u_idx)]
    ii, jj = np.nonzero(~np.eye(k, dtype=bool))
    rows = np.arange(ii.size)
    a_ub = csr_matrix(
        (np.concatenate([np.ones(ii.size), -np.ones(ii.size)]), (np.concatenate([rows, rows]), np.concatenate([ii, jj]))),
        shape=(ii.size, k),
    )
    bounds = [(None, None)] * k
    bounds[0] = (0.0, 0.0)
    res = linprog(
        -diff[u_idx], A_ub=a_ub, b_ub=d[ii, jj], bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"dual linear program failed: {res.message}")
    f_u = res.x
    f = np.min(f_u[None, :] + space.dist[:, u_idx], axis=1)
    f[u_idx] = f_u
    value = float(abs(f @ diff))
    return value, f


def _winf_value(d: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Smallest entry of ``d`` admitting a coupling supported on ``d <= r``."""
    b = _balanced(a, b)
    cand = np.unique(d)
    lo, hi = 0, cand.size - 1
    best_flow = None
    while lo < hi:
        mid = (lo + hi) // 2
        flow, total = bipartite_maxflow(d <= cand[mid], a, b, 1e-15)
        if total >= a.sum() - FLOW_SLACK:
            hi = mid
            best_flow = (mid, flow)
        else:
            lo = mid + 1
    if best_flow is None or best_flow[0] != lo:
        flow, _ = bipartite_maxflow(d <= cand[lo], a, b, 1e-15)
    else:
        flow = best_flow[1]
    return float(cand[lo]), flow


def wasserstein_inf(mu: ProbabilityMeasure, nu: ProbabilityMeasure) -> tuple[float, Coupling]:
    """W_inf by binary search over distance values with max-flow feasibility."""
    space = same_space(mu, nu)
    s, t, a, b = _supports(mu, nu)
    d = space.dist[np.ix_(s, t)]
    value, flow = _winf_value(d, a, b)
    return value, Coupling(mu, nu, _embed(space.size, s, t, flow))


def levy_prokhorov(mu: ProbabilityMeasure, nu: ProbabilityMeasure) -> float:
    """Levy-Prokhorov distance through its coupling characterization.

    With ``F(r)`` the largest mass movable along pairs at distance ``<= r``,
    the distance is ``inf{r > 0 : 1 - F(r) <= r}``.  ``F`` is a step function
    jumping only at distance values, so the infimum is found exactly at the
    first distance value ``d_k`` with ``d_k >= 1 - F(d_k)``.
    """
    space = same_space(mu, nu)
    s, t, a, b = _supports(mu, nu)
    b = _balanced(a, b)
    d = space.dist[np.ix_(s, t)]
    cand = np.unique(np.concatenate([[0.0], d.ravel()]))

    cache = {}

    def deficit(k):
        if k not in cache:
            _, total = bipartite_maxflow(d <= cand[k], a, b, 1e-15)
            cache[k] = max(0.0, 1.0 - total)
        return cache[k]

    lo, hi = 0, cand.size - 1  # deficit at the largest distance is zero
    while lo < hi:
        mid = (lo + hi) // 2
        if cand[mid] >= deficit(mid) - FLOW_SLACK:
            hi = mid
        else:
            lo = mid + 1
    if lo == 0:
        return 0.0
    prev = deficit(lo - 1)
    return float(min(cand[lo], prev))


def bottleneck_match(space: FiniteMetricSpace, xs: Sequence[int], ys: Sequence[int]) -> tuple[float, np.ndarray]:
    """min over bijections of the largest matched distance, with an optimal permutation.

    ``perm[i]`` is the position in ``ys`` matched to ``xs[i]``.
    """
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    if xs.size != ys.size:
        raise ValueError(f"point lists differ in length ({xs.size} vs {ys.size})")
    if xs.size == 0:
        raise ValueError("point lists must be nonempty")
    d = space.dist[np.ix_(xs, ys)]
    cand = np.unique(d)
    lo, hi = 0, cand.size - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        match = maximum_bipartite_matching(csr_matrix((d <= cand[mid]).astype(np.int8)), perm_type="column")
        if np.all(match >= 0):
            best = (mid, match)
            hi = mid - 1
        else:
            lo = mid + 1
    k, perm = best
    return float(cand[k]), perm.astype(np.int64)


def quasiconvexity_modulus(p: float, diam: float) -> Callable:
    """Modulus h with D(sum l_i mu_i, sum l_i nu_i) <= h(max_i D(mu_i, nu_i)).

    ``h(x) = diam**(1 - 1/p) * x**(1/p)`` for W_p; the identity for p = 1 and
    p = inf (the latter also serves the Levy-Prokhorov distance).
    """
    if not diam > 0:
        raise ValueError("diam must be positive")
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if p == 1 or math.isinf(p):
        return _identity
    c = diam ** (1.0 - 1.0 / p)

    def h(x):
        return c * np.power(x, 1.0 / p)

    return h


def _identity(x):
    return x


@dataclass(frozen=True)
class Distance:
    """A named distance on probability measures: ``w1``, ``wp``, ``winf`` or ``lp``."""

    kind: str = "w1"
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("w1", "wp", "winf", "lp"):
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if self.kind == "w1":
            object.__setattr__(self, "p", 1.0)
        elif self.kind in ("winf", "lp"):
            object.__setattr__(self, "p", math.inf)
        elif not 1 <= self.p < math.inf:
            raise ValueError("wp needs a finite p >= 1")

    def __call__(self, mu: ProbabilityMeasure, nu: ProbabilityMeasure) -> float:
        if self.kind == "w1":
            return wasserstein_p(mu, nu, 1.0)[0]
        if self.kind == "wp":
            return wasserstein_p(mu, nu, self.p)[0]
        if self.kind == "winf":
            return wasserstein_inf(mu, nu)[0]
        return levy_prokhorov(mu, nu)

    def modulus(self, diam: float) -> Callable:
        return quasiconvexity_modulus(self.p, diam)

    @property
    def name(self) -> str:
        return f"wp(p={self.p:g})" if self.kind == "wp" else self.kind

    def to_json(self) -> dict:
        return {"kind": self.kind, "p": None if math.isinf(self.p) else self.p}

    @classmethod
    def from_json(cls, obj) -> "Distance":
        if isinstance(obj, str):
            return cls(obj)
        return cls(obj.get("kind", "w1"), obj.get("p") or 1.0)


def distance(mu: ProbabilityMeasure, nu: ProbabilityMeasure, kind: str = "w1", p: Optional[float] = None) -> float:
    return Distance(kind, 1.0 if p is None else p)(mu, nu)
