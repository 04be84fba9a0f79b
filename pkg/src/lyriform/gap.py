"""Upper certificates for the intertwining gap between measure simplices.

Two finite spaces are compared through a pair of affine maps
``f: P(M1) -> P(M2)`` and ``g: P(M2) -> P(M1)``.  A certificate records how
far ``f`` and ``g`` are from being isometric and from inverting each other,
measured on every dirac pair plus a batch of random mixtures.  It is a
sampled bound, not a proof over the whole simplex.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ResourceLimitError
from .lyre import W1, AffineStageMap, sample_pairs
from .measures import ProbabilityMeasure, dirac
from .metric_core import FiniteMetricSpace
from .ot_distances import Distance

GH_MAX_SIZE = 6


def _space_seed(seed: int, space: FiniteMetricSpace) -> int:
    digest = hashlib.sha256(np.ascontiguousarray(space.dist).tobytes()).digest()
    return int(np.random.SeedSequence([seed, int.from_bytes(digest[:4], "little")]).generate_state(1)[0])


def _sample_measures(space: FiniteMetricSpace, samples: int, seed: int):
    yield from (dirac(space, i) for i in range(space.size))
    for mu, nu in sample_pairs(space, samples, seed, diracs=False):
        yield mu
        yield nu


def _isometry_defect(fmap: AffineStageMap, d_src: Distance, d_tgt: Distance, samples: int, seed: int):
    dirac_part = 0.0
    overall = 0.0
    n = fmap.source.size
    for k, (mu, nu) in enumerate(sample_pairs(fmap.source, samples, seed)):
        gap = abs(d_tgt(fmap.apply(mu), fmap.apply(nu)) - d_src(mu, nu))
        overall = max(overall, gap)
        if k < n * (n - 1) // 2:
            dirac_part = max(dirac_part, gap)
    return overall, dirac_part


def _invertibility_defect(f: AffineStageMap, g: AffineStageMap, d: Distance, samples: int, seed: int):
    """max D(f(g(tau)), tau) over sampled measures tau on the source of ``g``."""
    fg = f.compose(g)
    dirac_part = 0.0
    overall = 0.0
    n = g.source.size
    for k, tau in enumerate(_sample_measures(g.source, samples, seed)):
        gap = d(fg.apply(tau), tau)
        overall = max(overall, gap)
        if k < n:
            dirac_part = max(dirac_part, gap)
    return overall, dirac_part


@dataclass
class GapCertificate:
    epsilon_bound: float
    forward: AffineStageMap
    backward: AffineStageMap
    isometry_defect: float
    invertibility_defect: float
    dirac_isometry_defect: float
    dirac_invertibility_defect: float
    eps: float
    pairs_per_space: int

    @property
    def meets_eps(self) -> bool:
        return self.epsilon_bound <= self.eps

    def to_json(self, include_maps: bool = False) -> dict:
        out = {
            "epsilon_bound": self.epsilon_bound,
            "isometry_defect": self.isometry_defect,
            "invertibility_defect": self.invertibility_defect,
            "dirac_isometry_defect": self.dirac_isometry_defect,
            "dirac_invertibility_defect": self.dirac_invertibility_defect,
            "eps": self.eps,
            "meets_eps": self.meets_eps,
            "samples": self.pairs_per_space,
        }
        if include_maps:
            out["forward"] = self.forward.to_json()
            out["backward"] = self.backward.to_json()
        return out


def nearest_point_map(space: FiniteMetricSpace, targets: Sequence[int]) -> np.ndarray:
    """Position in ``targets`` of the nearest target to each point, lowest position on ties."""
    t = np.asarray(targets, dtype=np.int64)
    return np.argmin(space.dist[:, t], axis=1)


def net_correspondence(space: FiniteMetricSpace, net: Sequence[int]):
    """Point maps between a space and a subset: nearest-point retraction and inclusion."""
    net = np.asarray(net, dtype=np.int64)
    return nearest_point_map(space, net), net.copy()


def greedy_alignment(m1: FiniteMetricSpace, m2: FiniteMetricSpace) -> np.ndarray:
    """Heuristic point map M1 -> M2 with small distortion.

    Points of M1 are visited in farthest-point order from point 0.  For every
    choice of image of the first point, each later point goes to the target
    adding the least distortion against the points already placed; the
    start giving the smallest final distortion wins.
    """
    d1, d2 = m1.dist, m2.dist
    n1, n2 = m1.size, m2.size
    order = [0]
    gap = d1[0].copy()
    for _ in range(n1 - 1):
        gap[order] = -1.0
        nxt = int(np.argmax(gap))
        order.append(nxt)
        np.minimum(gap, d1[nxt], out=gap)
    order = np.array(order)
    best_map, best_dis = None, np.inf
    for start in range(n2):
        img = np.empty(n1, dtype=np.int64)
        img[order[0]] = start
        dis = 0.0
        for k in range(1, n1):
            x = order[k]
            placed = order[:k]
            cost = np.abs(d1[x, placed][None, :] - d2[:, img[placed]]).max(axis=1)
            y = int(np.argmin(cost))
            img[x] = y
            dis = max(dis, float(cost[y]))
            if dis >= best_dis:
                break
        if dis < best_dis:
            best_dis, best_map = dis, img.copy()
    return best_map


def gamma_q_upper(
    m1: FiniteMetricSpace,
    m2: FiniteMetricSpace,
    eps: float,
    samples: int = 50,
    seed: int = 0,
    d1: Distance = W1,
    d2: Distance = W1,
    correspondence: Optional[tuple] = None,
) -> GapCertificate:
    """Sampled certificate for a pair of affine maps between P(M1) and P(M2).

    ``correspondence`` is a pair of point maps ``(M1 -> M2, M2 -> M1)`` given
    as index arrays; without it both are built by :func:`greedy_alignment`.
    Both maps, both isometry defects and both round trips are measured, so the
    bound does not depend on the order of the arguments.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if correspondence is None:
        f_pts = greedy_alignment(m1, m2)
        g_pts = greedy_alignment(m2, m1)
    else:
        f_pts, g_pts = correspondence
    f = AffineStageMap.from_point_map(m1, m2, f_pts)
    g = AffineStageMap.from_point_map(m2, m1, g_pts)
    s1, s2 = _space_seed(seed, m1), _space_seed(seed, m2)
    iso_f, iso_f_dirac = _isometry_defect(f, d1, d2, samples, s1)
    iso_g, iso_g_dirac = _isometry_defect(g, d2, d1, samples, s2)
    inv_2, inv_2_dirac = _invertibility_defect(f, g, d2, samples, s2)
    inv_1, inv_1_dirac = _invertibility_defect(g, f, d1, samples, s1)
    iso = max(iso_f, iso_g)
    inv = max(inv_1, inv_2)
    return GapCertificate(
        epsilon_bound=max(iso, inv),
        forward=f,
        backward=g,
        isometry_defect=iso,
        invertibility_defect=inv,
        dirac_isometry_defect=max(iso_f_dirac, iso_g_dirac),
        dirac_invertibility_defect=max(inv_1_dirac, inv_2_dirac),
        eps=float(eps),
        pairs_per_space=samples,
    )


@dataclass
class MapCheck:
    passed: bool
    isometry_defect: float
    invertibility_defect: float

    def to_json(self) -> dict:
        return {"passed": self.passed, "isometry_defect": self.isometry_defect, "invertibility_defect": self.invertibility_defect}


def check_maps(
    f: AffineStageMap,
    g: AffineStageMap,
    eps: float,
    samples: int = 50,
    seed: int = 0,
    d1: Distance = W1,
    d2: Distance = W1,
    tol: float = 1e-9,
) -> MapCheck:
    """Is ``f`` eps-isometric and ``f o g`` eps-close to the identity on sampled measures?

    Passing means both defects are at most ``eps`` (up to ``tol``).
    """
    iso, _ = _isometry_defect(f, d1, d2, samples, seed)
    inv, _ = _invertibility_defect(f, g, d2, samples, seed)
    return MapCheck(bool(iso <= eps + tol and inv <= eps + tol), iso, inv)


def gromov_hausdorff_small(m1: FiniteMetricSpace, m2: FiniteMetricSpace, max_size: int = GH_MAX_SIZE) -> float:
    """Exact Gromov-Hausdorff distance by branch and bound over correspondences.

    Distortion only grows when pairs are added, so it suffices to search
    correspondences made of one partner for every point of M1 plus one
    partner for each point of M2 left uncovered.
    """
    if max_size > GH_MAX_SIZE:
        raise ResourceLimitError(f"max_size is capped at {GH_MAX_SIZE}")
    if m1.size > max_size or m2.size > max_size:
        raise ResourceLimitError(f"spaces of size {m1.size} and {m2.size} exceed max_size {max_size}")
    d1, d2 = m1.dist, m2.dist
    n1, n2 = m1.size, m2.size
    # clash[x, y, x2, y2] = |d1(x, x2) - d2(y, y2)|
    clash = np.abs(d1[:, None, :, None] - d2[None, :, None, :])
    best = [float(max(d1.max(), d2.max()))]  # the full relation's distortion bound
    pairs: list = []

    def extend(x, y, current):
        worst = current
        for (a, b) in pairs:
            worst = max(worst, clash[x, y, a, b])
            if worst >= best[0]:
                return None
        return worst

    def search_x(i, current):
        if i == n1:
            search_y(0, current)
            return
        for y in range(n2):
            worst = extend(i, y, current)
            if worst is None:
                continue
            pairs.append((i, y))
            search_x(i + 1, worst)
            pairs.pop()

    def search_y(j, current):
        if j == n2:
            best[0] = current
            return
        if any(b == j for _, b in pairs):
            search_y(j + 1, current)
            return
        for x in range(n1):
            worst = extend(x, j, current)
            if worst is None:
                continue
            pairs.append((x, j))
            search_y(j + 1, worst)
            pairs.pop()

    search_x(0, 0.0)
    return 0.5 * best[0]
