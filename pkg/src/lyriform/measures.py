"""Probability measures on finite metric spaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import MalformedInputError, SpaceMismatchError
from .metric_core import FiniteMetricSpace

MASS_TOL = 1e-12
CLAMP_TOL = 1e-14


def _normalize(w: np.ndarray) -> np.ndarray:
    if w.ndim != 1:
        raise MalformedInputError("weights must be a vector")
    if not np.all(np.isfinite(w)):
        raise MalformedInputError("weights must be finite")
    if np.any(w < -CLAMP_TOL):
        i = int(np.flatnonzero(w < -CLAMP_TOL)[0])
        raise MalformedInputError(f"negative weight {w[i]} at index {i}")
    w = np.where(w < 0, 0.0, w)
    total = w.sum()
    if not total > 0:
        raise MalformedInputError("weights have zero total mass")
    return w / total


@dataclass(frozen=True, eq=False)
class ProbabilityMeasure:
    """Nonnegative weights on the points of ``space``, renormalized to total mass one.

    Tiny negative entries (above ``-1e-14``) are clamped to zero first.
    """

    space: FiniteMetricSpace
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if w.shape[0] != self.space.size:
            raise MalformedInputError(
                f"measure has {w.shape[0]} weights but the space has {self.space.size} points"
            )
        w = _normalize(w)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj, space: FiniteMetricSpace) -> "ProbabilityMeasure":
        if isinstance(obj, dict):
            if "weights" not in obj:
                raise MalformedInputError("measure JSON needs 'weights'")
            obj = obj["weights"]
        try:
            return cls(space, np.asarray(obj, dtype=float))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, MalformedInputError):
                raise
            raise MalformedInputError(f"bad measure weights: {exc}") from exc


def same_space(mu: ProbabilityMeasure, nu: ProbabilityMeasure) -> FiniteMetricSpace:
    if not mu.space.same_as(nu.space):
        raise SpaceMismatchError("measures live on different spaces")
    return mu.space


def dirac(space: FiniteMetricSpace, i: int) -> ProbabilityMeasure:
    if not 0 <= i < space.size:
        raise IndexError(f"point index {i} out of range for a space of {space.size} points")
    w = np.zeros(space.size)
    w[i] = 1.0
    return ProbabilityMeasure(space, w)


def mixture(coeffs: Sequence[float], measures: Sequence[ProbabilityMeasure]) -> ProbabilityMeasure:
    """Convex combination ``sum_i coeffs[i] * measures[i]``."""
    lam = np.asarray(coeffs, dtype=float).reshape(-1)
    if lam.shape[0] == 0 or lam.shape[0] != len(measures):
        raise ValueError("coeffs and measures must be nonempty and of equal length")
    if np.any(lam < 0) or np.any(lam > 1) or abs(lam.sum() - 1.0) > MASS_TOL:
        raise ValueError(f"mixture coefficients must lie in [0, 1] and sum to 1 (sum = {lam.sum()!r})")
    space = measures[0].space
    for m in measures[1:]:
        same_space(measures[0], m)
    w = lam @ np.stack([m.weights for m in measures])
    return ProbabilityMeasure(space, w)


def pushforward(f, mu: ProbabilityMeasure, target: Optional[FiniteMetricSpace] = None) -> ProbabilityMeasure:
    """Image measure of ``mu`` under a point map.

    ``f`` is an integer array (or sequence) giving the image index of every
    source point.  ``target`` defaults to the source space.
    """
    target = mu.space if target is None else target
    img = np.asarray(f, dtype=np.int64).reshape(-1)
    if img.shape[0] != mu.space.size:
        raise MalformedInputError("point map must be defined on every source point")
    if img.size and (img.min() < 0 or img.max() >= target.size):
        bad = int(np.flatnonzero((img < 0) | (img >= target.size))[0])
        raise IndexError(f"point map sends {bad} to {img[bad]}, outside the target range")
    # bincount sums in ascending source index
    w = np.bincount(img, weights=mu.weights, minlength=target.size)
    return ProbabilityMeasure(target, w)


def empirical(space: FiniteMetricSpace, indices: Sequence[int], multiplicities: Optional[Sequence[int]] = None) -> ProbabilityMeasure:
    """Uniform measure over the listed occurrences (repeated indices add up)."""
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        raise ValueError("empirical measure needs at least one index")
    if idx.min() < 0 or idx.max() >= space.size:
        raise IndexError("index out of range for the space")
    if multiplicities is None:
        counts = np.ones(idx.size)
    else:
        counts = np.asarray(multiplicities, dtype=float).reshape(-1)
        if counts.shape != idx.shape or np.any(counts < 0) or counts.sum() <= 0:
            raise ValueError("multiplicities must be nonnegative, not all zero, one per index")
    w = np.bincount(idx, weights=counts, minlength=space.size)
    return ProbabilityMeasure(space, w)


def uniform(space: FiniteMetricSpace) -> ProbabilityMeasure:
    return ProbabilityMeasure(space, np.ones(space.size))


def random_measure(space: FiniteMetricSpace, rng: np.random.Generator, sparse: bool = False) -> ProbabilityMeasure:
    """Dirichlet(1) weights, optionally restricted to a random nonempty support."""
    w = rng.dirichlet(np.ones(space.size))
    if sparse and space.size > 1:
        keep = rng.random(space.size) < 0.5
        keep[rng.integers(space.size)] = True
        w = np.where(keep, w, 0.0)
    return ProbabilityMeasure(space, w)
