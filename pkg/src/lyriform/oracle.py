"""Slow brute-force reference computations.

These recompute each quantity straight from its definition and share no code
with the solvers they are used to check.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ResourceLimitError
from .measures import ProbabilityMeasure, same_space
from .metric_core import FiniteMetricSpace

TRANSPORT_MAX_SUPPORT = 4
BOTTLENECK_MAX_N = 7
LP_MAX_POINTS = 5
LP_GRID_STEP = 1e-4


def _tree_flow(cells, a, b):
    """The unique flow supported on a spanning tree, or None if it goes negative."""
    m, n = a.size, b.size
    eq = np.zeros((m + n, len(cells)))
    for k, (i, j) in enumerate(cells):
        eq[i, k] = 1.0
        eq[m + j, k] = 1.0
    x = np.linalg.lstsq(eq, np.concatenate([a, b]), rcond=None)[0]
    if x.min() < -1e-12:
        return None
    flow = np.zeros((m, n))
    for k, (i, j) in enumerate(cells):
        flow[i, j] = max(x[k], 0.0)
    return flow


def _is_spanning_tree(cells, m, n):
    parent = list(range(m + n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in cells:
        ri, rj = find(i), find(m + j)
        if ri == rj:
            return False
        parent[ri] = rj
    return True


def transport_vertices(mu: ProbabilityMeasure, nu: ProbabilityMeasure, p: float = 1.0) -> float:
    """W_p as the cheapest basic feasible solution of the transportation polytope.

    Basic solutions are supported on spanning trees of the complete bipartite
    graph between the two supports; all of them are enumerated.
    """
    space = same_space(mu, nu)
    s = np.flatnonzero(mu.weights > 0)
    t = np.flatnonzero(nu.weights > 0)
    if s.size > TRANSPORT_MAX_SUPPORT or t.size > TRANSPORT_MAX_SUPPORT:
        raise ResourceLimitError(f"vertex enumeration limited to supports of size {TRANSPORT_MAX_SUPPORT}")
    a, b = mu.weights[s], nu.weights[t]
    m, n = s.size, t.size
    cost = space.dist[np.ix_(s, t)] ** p
    all_cells = [(i, j) for i in range(m) for j in range(n)]
    best = np.inf
    for cells in itertools.combinations(all_cells, m + n - 1):
        if not _is_spanning_tree(cells, m, n):
            continue
        flow = _tree_flow(cells, a, b)
        if flow is None:
            continue
        best = min(best, float((flow * cost).sum()))
    return best ** (1.0 / p)


def bottleneck_bruteforce(space: FiniteMetricSpace, xs, ys) -> tuple[float, tuple]:
    """Literal minimum over all permutations of the largest matched distance."""
    xs = list(xs)
    ys = list(ys)
    if len(xs) != len(ys):
        raise ValueError("point lists differ in length")
    n = len(xs)
    if n > BOTTLENECK_MAX_N:
        raise ResourceLimitError(f"brute-force matching limited to n <= {BOTTLENECK_MAX_N}")
    d = space.dist[np.ix_(xs, ys)]
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    worst = d[np.arange(n)[None, :], perms].max(axis=1)
    k = int(np.argmin(worst))
    return float(worst[k]), tuple(int(x) for x in perms[k])


def lp_subset_oracle(mu: ProbabilityMeasure, nu: ProbabilityMeasure, step: float = LP_GRID_STEP) -> float:
    """Smallest r on a grid with mu(U) <= nu(U_r) + r and vice versa for every subset U.

    ``U_r`` is the open r-neighbourhood.  Candidates are the grid ``k * step``
    on (0, 1] together with all distance values.
    """
    space = same_space(mu, nu)
    n = space.size
    if n > LP_MAX_POINTS:
        raise ResourceLimitError(f"subset oracle limited to {LP_MAX_POINTS} points")
    d = space.dist
    if np.array_equal(mu.weights, nu.weights):
        return 0.0
    subsets = np.array(list(itertools.product((0, 1), repeat=n)), dtype=bool)[1:]
    # distance from each point to each subset
    to_subset = np.where(subsets[:, :, None], d[None, :, :], np.inf).min(axis=1)
    mass_mu = subsets @ mu.weights
    mass_nu = subsets @ nu.weights
    grid = np.arange(1, int(round(1.0 / step)) + 1) * step
    cand = np.unique(np.concatenate([grid, d[d > 0].ravel()]))
    cand = cand[cand <= 1.0]
    chunk = 512
    for start in range(0, cand.size, chunk):
        r = cand[start:start + chunk]
        inside = to_subset[None, :, :] < r[:, None, None]
        nbr_nu = inside @ nu.weights
        nbr_mu = inside @ mu.weights
        ok = np.all(mass_mu[None, :] <= nbr_nu + r[:, None] + 1e-12, axis=1) & np.all(
            mass_nu[None, :] <= nbr_mu + r[:, None] + 1e-12, axis=1
        )
        hits = np.flatnonzero(ok)
        if hits.size:
            return float(r[hits[0]])
    return 1.0
