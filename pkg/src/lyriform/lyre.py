"""Inverse systems of measure simplices with affine connecting maps.

A stage is a finite metric space together with a distance on its probability
measures.  Connecting maps are column-stochastic matrices, i.e. the affine
extensions of maps from points to measures.  The probability simplex
``Delta_k`` with its l1 metric is modelled as the measures on ``k + 1``
equidistant points at mutual distance 2 under W_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import IncompatibleThreadError, MalformedInputError, SpaceMismatchError
from .measures import ProbabilityMeasure, dirac
from .metric_core import FiniteMetricSpace, gen_equidistant, simplex_vertex_indices
from .ot_distances import Distance

THREAD_TOL = 1e-7
EXPANSION_TOL = 1e-7

W1 = Distance("w1")


@dataclass(frozen=True, eq=False)
class AffineStageMap:
    """Affine map between measure simplices, given by the images of the source points.

    ``matrix[:, i]`` is the image of the dirac at source point ``i``.
    """

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float, copy=True)
        if m.shape != (self.target.size, self.source.size):
            raise MalformedInputError(
                f"map matrix must be {self.target.size} x {self.source.size}, got {m.shape}"
            )
        if np.any(m < -1e-14) or np.any(np.abs(m.sum(axis=0) - 1.0) > 1e-9):
            raise MalformedInputError("map matrix columns must be probability vectors")
        m = np.maximum(m, 0.0)
        m /= m.sum(axis=0, keepdims=True)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, mu: ProbabilityMeasure) -> ProbabilityMeasure:
        if not mu.space.same_as(self.source):
            raise SpaceMismatchError("measure does not live on the map's source space")
        return ProbabilityMeasure(self.target, self.matrix @ mu.weights)

    __call__ = apply

    def compose(self, inner: "AffineStageMap") -> "AffineStageMap":
        """``self o inner``."""
        if not inner.target.same_as(self.source):
            raise SpaceMismatchError("maps are not composable")
        return AffineStageMap(inner.source, self.target, self.matrix @ inner.matrix)

    @classmethod
    def from_point_map(cls, source, target, images: Sequence[int]) -> "AffineStageMap":
        img = np.asarray(images, dtype=np.int64)
        m = np.zeros((target.size, source.size))
        m[img, np.arange(source.size)] = 1.0
        return cls(source, target, m)

    @classmethod
    def identity(cls, space: FiniteMetricSpace) -> "AffineStageMap":
        return cls(space, space, np.eye(space.size))

    def to_json(self) -> dict:
        return {"matrix": self.matrix.tolist()}


def simplex_space(k: int) -> FiniteMetricSpace:
    """Vertex set of Delta_k; W_1 of measures on it is the l1 distance of their weights."""
    return gen_equidistant(k + 1, 1.0)


def simplex_embed(k: int, target: FiniteMetricSpace) -> AffineStageMap:
    """Barycentric coordinates ``x`` in Delta_k to the measure ``sum_i x_i delta_{e_i}``.

    ``target`` is either ``k + 1`` equidistant points (``e_i`` = point ``i``)
    or a simplicial grid from :func:`gen_simplicial`, whose vertices play the
    role of the ``e_i``.
    """
    if target.coords is not None and target.coords.shape[1] == k + 1:
        vertices = simplex_vertex_indices(target)
    elif target.size == k + 1:
        vertices = list(range(k + 1))
    else:
        raise MalformedInputError(f"target has {target.size} points, expected {k + 1} or a simplicial grid")
    return AffineStageMap.from_point_map(simplex_space(k), target, vertices)


def skeleton_project(space: FiniteMetricSpace, k: int) -> AffineStageMap:
    """Affine map reading off barycentric coordinates: a measure goes to its barycenter in Delta_k."""
    if space.coords is None:
        raise MalformedInputError("source space has no barycentric coordinates")
    c = np.asarray(space.coords)
    if c.shape[1] != k + 1 or np.any(c < -1e-12) or np.any(np.abs(c.sum(axis=1) - 1.0) > 1e-9):
        raise MalformedInputError(f"coords are not barycentric coordinates on Delta_{k}")
    return AffineStageMap(space, simplex_space(k), c.T)


@dataclass
class NonexpansiveReport:
    passed: bool
    max_ratio: float
    worst_pair: Optional[tuple]
    pairs_checked: int

    def to_json(self) -> dict:
        worst = None
        if self.worst_pair is not None:
            worst = [np.asarray(w).tolist() for w in self.worst_pair]
        return {"passed": self.passed, "max_ratio": self.max_ratio, "worst_pair": worst, "pairs_checked": self.pairs_checked}


def _sample_pair(space: FiniteMetricSpace, rng: np.random.Generator):
    n = space.size
    out = []
    for _ in range(2):
        w = rng.dirichlet(np.full(n, rng.choice([0.2, 1.0])))
        if rng.random() < 0.5 and n > 1:
            keep = rng.random(n) < min(1.0, 3.0 / n + 0.1)
            keep[rng.integers(n)] = True
            w = np.where(keep, w, 0.0)
        out.append(ProbabilityMeasure(space, w))
    return out


def sample_pairs(space: FiniteMetricSpace, samples: int, seed: int, diracs: bool = True):
    """All dirac pairs, then ``samples`` random mixture pairs with per-pair sub-seeds."""
    if diracs:
        for i in range(space.size):
            for j in range(i + 1, space.size):
                yield dirac(space, i), dirac(space, j)
    for s in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(s,)))
        yield tuple(_sample_pair(space, rng))


def check_nonexpansive(
    fmap: AffineStageMap,
    samples: int = 100,
    seed: int = 0,
    source_distance: Distance = W1,
    target_distance: Distance = W1,
    tol: float = EXPANSION_TOL,
) -> NonexpansiveReport:
    """Largest observed ratio D_target(f mu, f nu) / D_source(mu, nu) over sampled pairs."""
    worst = 0.0
    worst_pair = None
    count = 0
    for mu, nu in sample_pairs(fmap.source, samples, seed):
        base = source_distance(mu, nu)
        count += 1
        if base <= 0.0:
            continue
        ratio = target_distance(fmap.apply(mu), fmap.apply(nu)) / base
        if ratio > worst:
            worst = ratio
            worst_pair = (mu.weights, nu.weights)
    return NonexpansiveReport(worst <= 1.0 + tol, float(worst), worst_pair, count)


@dataclass(frozen=True)
class Stage:
    space: FiniteMetricSpace
    distance: Distance = W1
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.scale <= 1.0:
            raise ValueError("stage scale factor must lie in (0, 1]")

    @property
    def metric_space(self) -> FiniteMetricSpace:
        return self.space if self.scale == 1.0 else self.space.scaled(self.scale)


@dataclass
class InductiveSystem:
    """Stages ``0..depth-1`` with ``maps[k]`` sending stage ``k + 1`` measures to stage ``k``.

    ``scale`` multiplies a stage's metric; it carries a per-stage metric
    adjustment sandwiched between a fixed fraction of the metric and the
    metric itself.
    """

    stages: list
    maps: list
    _spaces: list = field(init=False, repr=False)

    def __post_init__(self):
        if not self.stages:
            raise MalformedInputError("a system needs at least one stage")
        if len(self.maps) != len(self.stages) - 1:
            raise MalformedInputError("need exactly one connecting map between consecutive stages")
        for k, fmap in enumerate(self.maps):
            if not (fmap.source.same_as(self.stages[k + 1].space) and fmap.target.same_as(self.stages[k].space)):
                raise SpaceMismatchError(f"map {k} does not run from stage {k + 1} to stage {k}")
        self._spaces = [s.metric_space for s in self.stages]

    @property
    def depth(self) -> int:
        return len(self.stages)

    def thread_from_top(self, weights) -> list:
        """Compatible thread generated by pushing a top-stage measure down."""
        top = ProbabilityMeasure(self.stages[-1].space, weights)
        thread = [top]
        for fmap in reversed(self.maps):
            thread.append(fmap.apply(thread[-1]))
        return [m.weights for m in reversed(thread)]

    def _measures(self, thread) -> list:
        if len(thread) != self.depth:
            raise IncompatibleThreadError(f"thread has {len(thread)} stages, system has {self.depth}")
        out = []
        for k, w in enumerate(thread):
            weights = w.weights if isinstance(w, ProbabilityMeasure) else w
            out.append(ProbabilityMeasure(self._spaces[k], weights))
        for k, fmap in enumerate(self.maps):
            image = fmap.matrix @ out[k + 1].weights
            gap = float(np.abs(image - out[k].weights).sum())
            if gap > THREAD_TOL:
                raise IncompatibleThreadError(
                    f"thread incompatible at stage {k}: map of stage {k + 1} misses it by {gap:.3g} in l1"
                )
        return out

    def stage_distances(self, sigma, tau, distance: Optional[Distance] = None) -> np.ndarray:
        s = self._measures(sigma)
        t = self._measures(tau)
        return np.array([
            (distance or stage.distance)(a, b) for stage, a, b in zip(self.stages, s, t)
        ])

    def check_maps(self, samples: int = 20, seed: int = 0) -> list:
        return [
            check_nonexpansive(
                AffineStageMap(self._spaces[k + 1], self._spaces[k], fmap.matrix),
                samples, seed, self.stages[k + 1].distance, self.stages[k].distance,
            )
            for k, fmap in enumerate(self.maps)
        ]

    def to_json(self) -> dict:
        return {
            "stages": [
                {"space": s.space.to_json(), "distance": s.distance.to_json(), "scale": s.scale} for s in self.stages
            ],
            "maps": [m.to_json() for m in self.maps],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "InductiveSystem":
        try:
            stages = [
                Stage(FiniteMetricSpace.from_json(s["space"]), Distance.from_json(s.get("distance", "w1")), float(s.get("scale", 1.0)))
                for s in obj["stages"]
            ]
            maps = [
                AffineStageMap(stages[k + 1].space, stages[k].space, m["matrix"] if isinstance(m, dict) else m)
                for k, m in enumerate(obj.get("maps", []))
            ]
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, MalformedInputError):
                raise
            raise MalformedInputError(f"bad system JSON: {exc}") from exc
        return cls(stages, maps)


def limit_metric(system: InductiveSystem, sigma, tau) -> float:
    """Supremum over the truncation of the stage distances between two threads."""
    return float(system.stage_distances(sigma, tau).max())


def pro_winf(system: InductiveSystem, sigma, tau) -> tuple[float, np.ndarray]:
    """Tail maximum of stage-wise W_inf over the last ``ceil(depth / 2)`` stages, plus the full sequence."""
    seq = system.stage_distances(sigma, tau, Distance("winf"))
    tail = math.ceil(system.depth / 2)
    return float(seq[-tail:].max()), seq
