"""Finite metric spaces, length graphs and the example geometries.

Every continuous space handled by the package is represented by a finite
discretization: a point set with a full distance matrix
(:class:`FiniteMetricSpace`) or a weighted graph whose shortest-path metric
stands in for an intrinsic length metric (:class:`LengthGraph`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import DisconnectedGraphError, MalformedInputError, ResourceLimitError

DEFAULT_TOL = 1e-9

GASKET_MAX_LEVEL = 10
CARPET_MAX_LEVEL = 6
SIMPLICIAL_MAX_POINTS = 100_000
DENSE_METRIC_MAX_POINTS = 5_000


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """``n`` points with a full symmetric distance matrix.

    The matrix is copied and made read-only on construction.  Metric axioms are
    not enforced here; call :func:`validate_metric` for that.
    """

    dist: np.ndarray
    labels: Optional[tuple] = None
    coords: Optional[np.ndarray] = None

    def __post_init__(self):
        d = np.array(self.dist, dtype=float, copy=True)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise MalformedInputError(f"distance matrix must be square and nonempty, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise MalformedInputError("distance matrix contains non-finite entries")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != d.shape[0]:
                raise MalformedInputError("labels length does not match the number of points")
            object.__setattr__(self, "labels", labels)
        if self.coords is not None:
            c = np.array(self.coords, dtype=float, copy=True)
            if c.ndim != 2 or c.shape[0] != d.shape[0]:
                raise MalformedInputError("coords must be an (n, dim) array")
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    def __len__(self) -> int:
        return self.size

    @property
    def diam(self) -> float:
        return float(self.dist.max())

    @property
    def radius(self) -> float:
        return self.diam / 2.0

    def subspace(self, indices: Sequence[int]) -> "FiniteMetricSpace":
        """Restriction of the metric to ``indices`` (in the given order)."""
        idx = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else tuple(self.labels[i] for i in idx)
        coords = None if self.coords is None else self.coords[idx]
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)], labels=labels, coords=coords)

    def scaled(self, factor: float) -> "FiniteMetricSpace":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return FiniteMetricSpace(self.dist * factor, labels=self.labels, coords=self.coords)

    def same_as(self, other: "FiniteMetricSpace") -> bool:
        return self is other or (
            self.dist.shape == other.dist.shape and np.array_equal(self.dist, other.dist)
        )

    def to_json(self) -> dict:
        out = {"size": self.size, "dist": self.dist.tolist()}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "FiniteMetricSpace":
        try:
            dist = obj["dist"]
        except (KeyError, TypeError) as exc:
            raise MalformedInputError("space JSON needs a 'dist' matrix") from exc
        space = cls(dist, labels=obj.get("labels"), coords=obj.get("coords"))
        if "size" in obj and int(obj["size"]) != space.size:
            raise MalformedInputError("'size' does not match the distance matrix")
        return space


@dataclass(frozen=True, eq=False)
class LengthGraph:
    """Undirected graph with positive edge lengths.

    ``edges`` is an ``(E, 2)`` integer array and ``lengths`` the matching
    ``(E,)`` array of lengths.
    """

    vertices: int
    edges: np.ndarray
    lengths: np.ndarray
    coords: Optional[np.ndarray] = None

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        w = np.asarray(self.lengths, dtype=float).reshape(-1)
        if self.vertices < 1:
            raise MalformedInputError("a length graph needs at least one vertex")
        if e.shape[0] != w.shape[0]:
            raise MalformedInputError("edges and lengths differ in count")
        if e.size and (e.min() < 0 or e.max() >= self.vertices):
            raise MalformedInputError("edge endpoint out of range")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise MalformedInputError("edge lengths must be finite and strictly positive")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "lengths", w)
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.ndim != 2 or c.shape[0] != self.vertices:
                raise MalformedInputError("coords must be an (vertices, dim) array")
            object.__setattr__(self, "coords", c)

    @classmethod
    def from_edge_list(cls, vertices: int, edges, coords=None) -> "LengthGraph":
        rows = [tuple(e) for e in edges]
        if not rows:
            return cls(vertices, np.zeros((0, 2), dtype=np.int64), np.zeros(0), coords)
        uv = np.array([(int(u), int(v)) for u, v, _ in rows], dtype=np.int64)
        w = np.array([float(x) for _, _, x in rows])
        return cls(vertices, uv, w, coords)

    def _adjacency(self):
        n = self.vertices
        e = np.sort(self.edges, axis=1)
        keep = e[:, 0] != e[:, 1]
        e, w = e[keep], self.lengths[keep]
        # keep the shortest of parallel edges
        order = np.lexsort((w, e[:, 1], e[:, 0]))
        e, w = e[order], w[order]
        first = np.ones(e.shape[0], dtype=bool)
        first[1:] = np.any(e[1:] != e[:-1], axis=1)
        e, w = e[first], w[first]
        return coo_matrix((w, (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()

    def is_connected(self) -> bool:
        ncomp, _ = connected_components(self._adjacency(), directed=False)
        return ncomp == 1

    def to_json(self) -> dict:
        out = {
            "vertices": int(self.vertices),
            "edges": [[int(u), int(v), float(x)] for (u, v), x in zip(self.edges, self.lengths)],
        }
        if self.coords is not None:
            out["coords"] = np.asarray(self.coords).tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "LengthGraph":
        try:
            return cls.from_edge_list(int(obj["vertices"]), obj["edges"], obj.get("coords"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, MalformedInputError):
                raise
            raise MalformedInputError(f"bad length-graph JSON: {exc}") from exc


@dataclass
class MetricReport:
    ok: bool
    axiom: Optional[str] = None
    indices: tuple = field(default_factory=tuple)
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_metric(space, tol: float = DEFAULT_TOL) -> MetricReport:
    """Check the metric axioms on a distance matrix.

    Accepts a :class:`FiniteMetricSpace` or a raw square matrix.  Returns a
    report naming the first violated axiom and the offending indices.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    d = space.dist if isinstance(space, FiniteMetricSpace) else np.asarray(space, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MalformedInputError(f"distance matrix must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise MalformedInputError("distance matrix contains non-finite entries")
    n = d.shape[0]

    diag = np.abs(np.diag(d))
    bad = np.flatnonzero(diag > tol)
    if bad.size:
        i = int(bad[0])
        return MetricReport(False, "zero-diagonal", (i, i), f"dist[{i}][{i}] = {d[i, i]}")

    asym = np.abs(d - d.T) > tol
    if asym.any():
        i, j = map(int, np.argwhere(asym)[0])
        return MetricReport(False, "symmetry", (i, j), f"dist[{i}][{j}] = {d[i, j]} != dist[{j}][{i}] = {d[j, i]}")

    off = ~np.eye(n, dtype=bool)
    nonpos = off & (d <= 0)
    if nonpos.any():
        i, j = map(int, np.argwhere(nonpos)[0])
        return MetricReport(False, "positivity", (i, j), f"dist[{i}][{j}] = {d[i, j]} for distinct points")

    for j in range(n):
        via = d[:, j, None] + d[None, j, :]
        viol = d > via + tol
        if viol.any():
            i, k = map(int, np.argwhere(viol)[0])
            return MetricReport(
                False, "triangle", (i, j, k),
                f"dist[{i}][{k}] = {d[i, k]} > dist[{i}][{j}] + dist[{j}][{k}] = {via[i, k]}",
            )
    return MetricReport(True)


def intrinsic_metric(graph: LengthGraph) -> FiniteMetricSpace:
    """Shortest-path metric of a connected length graph."""
    n = graph.vertices
    if n > DENSE_METRIC_MAX_POINTS:
        raise ResourceLimitError(
            f"dense intrinsic metric limited to {DENSE_METRIC_MAX_POINTS} vertices, graph has {n}"
        )
    if n == 1:
        return FiniteMetricSpace(np.zeros((1, 1)), coords=graph.coords)
    dist = shortest_path(graph._adjacency(), method="D", directed=False)
    if not np.all(np.isfinite(dist)):
        i, j = map(int, np.argwhere(~np.isfinite(dist))[0])
        raise DisconnectedGraphError(f"graph is disconnected: vertex {j} is unreachable from vertex {i}")
    dist = np.minimum(dist, dist.T)
    np.fill_diagonal(dist, 0.0)
    return FiniteMetricSpace(dist, coords=graph.coords)


def gen_equidistant(n: int, r: float) -> FiniteMetricSpace:
    """``n`` points at mutual distance ``2r`` (so the radius is ``r``)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not r > 0:
        raise ValueError("r must be positive")
    d = np.full((n, n), 2.0 * r)
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(d, labels=tuple(f"x{i}" for i in range(n)))


def _dedupe_graph(keys: np.ndarray, edge_keys: np.ndarray, positions, length: float):
    """Map lattice keys to vertex ids and drop repeated edges."""
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    e = inv.reshape(-1, 2)
    e = np.sort(e, axis=1)
    e = np.unique(e, axis=0)
    return uniq, e, np.full(e.shape[0], length), positions(uniq)


def gen_sierpinski(kind: str, level: int) -> LengthGraph:
    """1-skeleton of the level-``level`` Sierpinski gasket or carpet, unit outer side."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    if kind == "gasket":
        if level > GASKET_MAX_LEVEL:
            raise ResourceLimitError(f"gasket level capped at {GASKET_MAX_LEVEL}")
        # lattice (u, v) -> (u + v/2, v*sqrt(3)/2) / 2**level
        corners = np.zeros((1, 2), dtype=np.int64)
        size = 1 << level
        for _ in range(level):
            size //= 2
            offsets = np.array([[0, 0], [size, 0], [0, size]], dtype=np.int64)
            corners = (corners[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
        u, v = corners[:, 0], corners[:, 1]
        a = np.stack([u, v], axis=1)
        b = np.stack([u + 1, v], axis=1)
        c = np.stack([u, v + 1], axis=1)
        ends = np.stack([a, b, a, c, b, c], axis=1).reshape(-1, 2)
        scale = 1.0 / (1 << level)

        def positions(k):
            return np.stack([(k[:, 0] + 0.5 * k[:, 1]) * scale, k[:, 1] * (math.sqrt(3) / 2) * scale], axis=1)

        verts, e, w, pos = _dedupe_graph(ends, None, positions, scale)
        return LengthGraph(verts.shape[0], e, w, pos)

    if kind == "carpet":
        if level > CARPET_MAX_LEVEL:
            raise ResourceLimitError(f"carpet level capped at {CARPET_MAX_LEVEL}")
        cells = np.zeros((1, 2), dtype=np.int64)
        offsets = np.array([(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1)], dtype=np.int64)
        for _ in range(level):
            cells = (3 * cells[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
        x, y = cells[:, 0], cells[:, 1]
        p00 = np.stack([x, y], axis=1)
        p10 = np.stack([x + 1, y], axis=1)
        p01 = np.stack([x, y + 1], axis=1)
        p11 = np.stack([x + 1, y + 1], axis=1)
        ends = np.stack([p00, p10, p01, p11, p00, p01, p10, p11], axis=1).reshape(-1, 2)
        scale = 1.0 / 3**level

        def positions(k):
            return k.astype(float) * scale

        verts, e, w, pos = _dedupe_graph(ends, None, positions, scale)
        return LengthGraph(verts.shape[0], e, w, pos)

    raise ValueError(f"unknown fractal kind {kind!r}; expected 'gasket' or 'carpet'")


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``, lexicographic."""
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(total + parts - 1 - prev - 1)
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(-1, parts)


def gen_simplicial(kind: str, k: int, mesh: int) -> FiniteMetricSpace:
    """Barycentric grid on the k-simplex: the ball (flat l1 metric) or its boundary sphere.

    Grid points have barycentric coordinates with denominator ``mesh``; they are
    stored in ``coords``.  For ``kind='sphere'`` only points on the boundary
    (some coordinate zero) are kept and distances are graph-intrinsic, the
    graph joining grid neighbours that lie on a common facet.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if mesh < 1:
        raise ValueError("mesh must be at least 1")
    count = math.comb(mesh + k, k)
    if count > SIMPLICIAL_MAX_POINTS:
        raise ResourceLimitError(f"mesh {mesh} on the {k}-simplex gives {count} points (limit {SIMPLICIAL_MAX_POINTS})")
    grid = _compositions(mesh, k + 1)
    if kind == "ball":
        bary = grid / mesh
        dist = np.abs(bary[:, None, :] - bary[None, :, :]).sum(axis=2)
        return FiniteMetricSpace(dist, labels=_grid_labels(grid), coords=bary)
    if kind != "sphere":
        raise ValueError(f"unknown simplicial kind {kind!r}; expected 'sphere' or 'ball'")

    grid = grid[(grid == 0).any(axis=1)]
    bary = grid / mesh
    index = {tuple(g): i for i, g in enumerate(grid)}
    step = 2.0 / mesh
    edges = []
    for i, g in enumerate(grid):
        for a in range(k + 1):
            if g[a] == 0:
                continue
            for b in range(k + 1):
                if b == a:
                    continue
                h = g.copy()
                h[a] -= 1
                h[b] += 1
                j = index.get(tuple(h), -1)
                if j > i and np.any((g == 0) & (h == 0)):
                    edges.append((i, j, step))
    graph = LengthGraph.from_edge_list(len(grid), edges, coords=bary)
    space = intrinsic_metric(graph)
    return FiniteMetricSpace(space.dist, labels=_grid_labels(grid), coords=bary)


def _grid_labels(grid: np.ndarray) -> tuple:
    return tuple("(" + ",".join(str(int(x)) for x in g) + ")" for g in grid)


def simplex_vertex_indices(space: FiniteMetricSpace) -> list[int]:
    """Indices of the simplex vertices e_1..e_{k+1} in a gen_simplicial grid."""
    if space.coords is None:
        raise ValueError("space carries no barycentric coordinates")
    c = space.coords
    out = []
    for a in range(c.shape[1]):
        hits = np.flatnonzero(np.isclose(c[:, a], 1.0))
        if hits.size != 1:
            raise ValueError(f"vertex e_{a + 1} not found in the grid")
        out.append(int(hits[0]))
    return out


def gen_sphere_sample(k: int, n: int, seed: int, max_retries: int = 100) -> FiniteMetricSpace:
    """``n`` uniform points on the unit sphere in R^k with great-circle distances."""
    if k < 2:
        raise ValueError("sphere dimension k must be at least 2")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    x = _unit_gaussian(rng, n, k)
    for _ in range(max_retries):
        dist = sphere_geodesic(x)
        np.fill_diagonal(dist, np.inf)
        dup = np.argwhere(dist <= 0.0)
        if dup.size == 0:
            break
        redo = np.unique(dup.max(axis=1))
        x[redo] = _unit_gaussian(rng, redo.size, k)
    else:
        raise RuntimeError("could not draw distinct sphere points")
    dist = sphere_geodesic(x)
    np.fill_diagonal(dist, 0.0)
    return FiniteMetricSpace(dist, coords=x)


def _unit_gaussian(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    g = rng.standard_normal((n, k))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sphere_geodesic(x: np.ndarray, y: Optional[np.ndarray] = None) -> np.ndarray:
    """Great-circle distances between rows of unit vectors."""
    y = x if y is None else y
    return np.arccos(np.clip(x @ y.T, -1.0, 1.0))


def eps_net(space: FiniteMetricSpace, eps: float) -> list[int]:
    """Greedy farthest-point eps-net, started at index 0, lowest-index tie-breaking."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    d = space.dist
    net = [0]
    gap = d[0].copy()
    while True:
        far = int(np.argmax(gap))
        if gap[far] <= eps:
            return net
        net.append(far)
        np.minimum(gap, d[far], out=gap)


@dataclass
class BoxCount:
    dimension: float
    scales: np.ndarray
    counts: np.ndarray
    intercept: float


def box_counting_dimension(graph: LengthGraph, scales: Sequence[float]) -> BoxCount:
    """Least-squares box-counting dimension of the vertex set.

    Boxes tile the bounding box from its lower corner; points on the far face
    are assigned to the last box along that axis.
    """
    if graph.coords is None:
        raise ValueError("box counting needs vertex coordinates")
    s = np.asarray(scales, dtype=float)
    if s.size < 2:
        raise ValueError("need at least two scales")
    if np.any(s <= 0) or np.any(np.diff(s) >= 0):
        raise ValueError("scales must be positive and strictly decreasing")
    pts = np.asarray(graph.coords, dtype=float)
    lo = pts.min(axis=0)
    extent = pts.max(axis=0) - lo
    rel = pts - lo
    counts = []
    for h in s:
        nbox = np.maximum(np.ceil(extent / h - 1e-9).astype(np.int64), 1)
        idx = np.minimum(np.floor(rel / h + 1e-9).astype(np.int64), nbox - 1)
        counts.append(np.unique(idx, axis=0).shape[0])
    counts = np.array(counts)
    slope, intercept = np.polyfit(np.log(1.0 / s), np.log(counts), 1)
    return BoxCount(float(slope), s, counts, float(intercept))
