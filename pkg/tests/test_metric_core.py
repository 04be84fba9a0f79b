import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from lyriform.errors import DisconnectedGraphError, MalformedInputError, ResourceLimitError
from lyriform.metric_core import (
    FiniteMetricSpace,
    LengthGraph,
    box_counting_dimension,
    eps_net,
    gen_equidistant,
    gen_sierpinski,
    gen_simplicial,
    gen_sphere_sample,
    intrinsic_metric,
    simplex_vertex_indices,
    sphere_geodesic,
    validate_metric,
)


def _graph_oracle(graph: LengthGraph, i: int, j: int) -> float:
    """Shortest path length by enumerating all simple paths."""
    g = nx.Graph()
    for (u, v), w in zip(graph.edges, graph.lengths):
        u, v = int(u), int(v)
        if not g.has_edge(u, v) or g[u][v]["w"] > w:
            g.add_edge(u, v, w=float(w))
    best = math.inf
    for path in nx.all_simple_paths(g, i, j):
        best = min(best, sum(g[a][b]["w"] for a, b in zip(path, path[1:])))
    return best


class TestValidateMetric:
    def test_two_points_pass(self):
        assert validate_metric(np.array([[0.0, 1.0], [1.0, 0.0]])).ok

    def test_asymmetry(self):
        rep = validate_metric(np.array([[0.0, 1.0], [2.0, 0.0]]))
        assert not rep.ok and rep.axiom == "symmetry" and rep.indices == (0, 1)

    def test_triangle(self):
        rep = validate_metric(np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0.0]]))
        assert not rep.ok and rep.axiom == "triangle" and rep.indices == (0, 1, 2)

    def test_diagonal_and_positivity(self):
        assert validate_metric(np.array([[0.5, 1.0], [1.0, 0.0]])).axiom == "zero-diagonal"
        assert validate_metric(np.array([[0.0, 0.0], [0.0, 0.0]])).axiom == "positivity"

    def test_tolerance(self):
        d = np.array([[0, 1, 2 + 1e-10], [1, 0, 1], [2 + 1e-10, 1, 0.0]])
        assert validate_metric(d, 1e-9).ok
        assert not validate_metric(d, 0.0).ok

    @pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.array([[0.0, np.nan], [np.nan, 0.0]])])
    def test_malformed(self, bad):
        with pytest.raises(MalformedInputError):
            validate_metric(bad)


class TestIntrinsic:
    def test_path(self):
        g = LengthGraph.from_edge_list(3, [(0, 1, 2.0), (1, 2, 3.0)])
        assert intrinsic_metric(g).dist[0, 2] == 5.0

    def test_triangle_shortcut(self):
        g = LengthGraph.from_edge_list(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)])
        assert intrinsic_metric(g).dist[0, 2] == 2.0

    def test_gasket_level1_corners(self):
        g = gen_sierpinski("gasket", 1)
        m = intrinsic_metric(g)
        corners = [i for i, c in enumerate(g.coords) if np.allclose(c, [0, 0]) or np.allclose(c, [1, 0]) or np.allclose(c, [0.5, math.sqrt(3) / 2])]
        assert len(corners) == 3
        for a, b in itertools.combinations(corners, 2):
            assert _graph_oracle(g, a, b) == pytest.approx(1.0)
            assert m.dist[a, b] == pytest.approx(1.0)

    def test_disconnected(self):
        g = LengthGraph.from_edge_list(4, [(0, 1, 1.0), (2, 3, 1.0)])
        with pytest.raises(DisconnectedGraphError, match="unreachable"):
            intrinsic_metric(g)

    def test_nonpositive_length(self):
        with pytest.raises(MalformedInputError):
            LengthGraph.from_edge_list(2, [(0, 1, 0.0)])

    def test_matches_path_enumeration(self):
        rng = np.random.default_rng(3)
        edges = [(i, i + 1, float(rng.uniform(0.5, 2))) for i in range(5)]
        edges += [(int(a), int(b), float(rng.uniform(0.5, 3))) for a, b in rng.integers(0, 6, (6, 2)) if a != b]
        g = LengthGraph.from_edge_list(6, edges)
        m = intrinsic_metric(g)
        for i, j in itertools.combinations(range(6), 2):
            assert m.dist[i, j] == pytest.approx(_graph_oracle(g, i, j))
        assert validate_metric(m, 0.0).ok

    def test_not_longer_than_random_paths(self):
        g = gen_sierpinski("carpet", 1)
        m = intrinsic_metric(g)
        rng = np.random.default_rng(0)
        adj = {}
        for (u, v), w in zip(g.edges, g.lengths):
            adj.setdefault(int(u), []).append((int(v), w))
            adj.setdefault(int(v), []).append((int(u), w))
        for _ in range(200):
            start = cur = int(rng.integers(g.vertices))
            length = 0.0
            for _ in range(int(rng.integers(1, 12))):
                nxt, w = adj[cur][int(rng.integers(len(adj[cur])))]
                length += w
                cur = nxt
            assert m.dist[start, cur] <= length + 1e-12


class TestGenerators:
    def test_equidistant(self):
        assert gen_equidistant(1, 0.3).size == 1
        m = gen_equidistant(3, 0.5)
        assert np.all(m.dist[~np.eye(3, dtype=bool)] == 1.0)
        m4 = gen_equidistant(4, 1.0)
        assert m4.diam == 2.0 and m4.radius == 1.0
        assert validate_metric(m4, 0.0).ok

    def test_gasket_counts(self):
        g0 = gen_sierpinski("gasket", 0)
        assert g0.vertices == 3 and len(g0.edges) == 3 and np.all(g0.lengths == 1.0)
        g1 = gen_sierpinski("gasket", 1)
        assert g1.vertices == 6 and len(g1.edges) == 9 and np.all(g1.lengths == 0.5)
        for level in range(5):
            g = gen_sierpinski("gasket", level)
            assert len(g.edges) == 3 ** (level + 1)
            assert g.vertices == (3 ** (level + 1) + 3) // 2

    def test_carpet_level1(self):
        g = gen_sierpinski("carpet", 1)
        # 4 x 4 lattice points and the 24 unit segments around the 8 outer cells
        assert g.vertices == 16 and len(g.edges) == 24
        assert np.allclose(g.lengths, 1 / 3)
        assert g.is_connected()

    def test_budget(self):
        with pytest.raises(ResourceLimitError):
            gen_sierpinski("gasket", 11)
        with pytest.raises(ResourceLimitError):
            gen_sierpinski("carpet", 7)
        with pytest.raises(ResourceLimitError):
            gen_simplicial("ball", 10, 60)

    @pytest.mark.parametrize("kind,level", [("gasket", 3), ("carpet", 2)])
    def test_fractal_metric_bilipschitz(self, kind, level):
        g = gen_sierpinski(kind, level)
        m = intrinsic_metric(g)
        assert validate_metric(m, 1e-9).ok
        eu = np.linalg.norm(g.coords[:, None] - g.coords[None], axis=2)
        off = ~np.eye(g.vertices, dtype=bool)
        assert np.all(m.dist[off] >= eu[off] - 1e-12)
        ratio = (m.dist[off] / eu[off]).max()
        assert ratio < 4.0

    def test_simplicial_examples(self):
        ball = gen_simplicial("ball", 2, 1)
        assert ball.size == 3 and np.all(ball.dist[~np.eye(3, dtype=bool)] == 2.0)
        sphere = gen_simplicial("sphere", 2, 2)
        assert sphere.size == 6
        mids = [i for i, c in enumerate(sphere.coords) if np.count_nonzero(c) == 2]
        for a, b in itertools.combinations(mids, 2):
            assert sphere.dist[a, b] == pytest.approx(2.0)

    @pytest.mark.parametrize("kind", ["sphere", "ball"])
    @pytest.mark.parametrize("k,mesh", [(2, 3), (3, 2), (4, 2)])
    def test_vertex_distance_two(self, kind, k, mesh):
        m = gen_simplicial(kind, k, mesh)
        v = simplex_vertex_indices(m)
        for a, b in itertools.combinations(v, 2):
            assert m.dist[a, b] == pytest.approx(2.0)
        assert validate_metric(m, 0.0 if kind == "ball" else 1e-9).ok

    def test_sphere_graph_metric_dominates_l1(self):
        m = gen_simplicial("sphere", 3, 3)
        l1 = np.abs(m.coords[:, None] - m.coords[None]).sum(axis=2)
        assert np.all(m.dist >= l1 - 1e-12)

    def test_ball_l1_additive_on_segments(self):
        m = gen_simplicial("ball", 2, 4)
        c = m.coords
        idx = {tuple(np.round(x * 4).astype(int)): i for i, x in enumerate(c)}
        a, b = idx[(4, 0, 0)], idx[(0, 2, 2)]
        mid = idx[(2, 1, 1)]
        assert m.dist[a, b] == pytest.approx(m.dist[a, mid] + m.dist[mid, b])

    def test_sphere_sample(self):
        x = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
        assert sphere_geodesic(x)[0, 1] == pytest.approx(math.pi)
        s = gen_sphere_sample(3, 1000, 11)
        assert np.array_equal(s.dist, gen_sphere_sample(3, 1000, 11).dist)
        mean = s.dist[~np.eye(1000, dtype=bool)].mean()
        # on S^2 the inner product of two uniform points is uniform on [-1, 1]
        exact = integrate.quad(lambda t: np.arccos(t) / 2, -1, 1)[0]
        assert exact == pytest.approx(math.pi / 2)
        assert abs(mean - exact) < 0.05
        assert validate_metric(s, 1e-9).ok


class TestEpsNet:
    def test_examples(self):
        m = gen_equidistant(4, 0.5)
        assert eps_net(m, 0.5) == [0, 1, 2, 3]
        assert eps_net(m, 1.0) == [0]
        m2 = gen_simplicial("ball", 2, 3)
        assert eps_net(m2, m2.diam) == [0]
        min_off = m2.dist[~np.eye(m2.size, dtype=bool)].min()
        assert len(eps_net(m2, min_off / 2)) == m2.size

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 25), st.floats(0.05, 1.5), st.integers(0, 10**6))
    def test_covering_and_separated(self, n, eps, seed):
        x = np.random.default_rng(seed).random((n, 2))
        m = FiniteMetricSpace(np.linalg.norm(x[:, None] - x[None], axis=2))
        net = eps_net(m, eps)
        assert net[0] == 0
        assert np.all(m.dist[:, net].min(axis=1) <= eps)
        sub = m.dist[np.ix_(net, net)]
        assert np.all(sub[~np.eye(len(net), dtype=bool)] > eps)


class TestBoxCounting:
    def test_segment(self):
        n = 2**10
        g = LengthGraph(n + 1, np.c_[np.arange(n), np.arange(1, n + 1)], np.full(n, 1 / n),
                        np.c_[np.linspace(0, 1, n + 1), np.zeros(n + 1)])
        box = box_counting_dimension(g, [2.0**-i for i in range(1, 7)])
        assert abs(box.dimension - 1.0) < 0.05

    def test_square(self):
        k = 64
        xy = np.array([(i / k, j / k) for i in range(k + 1) for j in range(k + 1)])
        g = LengthGraph(len(xy), np.zeros((0, 2)), np.zeros(0), xy)
        box = box_counting_dimension(g, [2.0**-i for i in range(1, 6)])
        assert abs(box.dimension - 2.0) < 0.05

    def test_errors(self):
        g = LengthGraph.from_edge_list(2, [(0, 1, 1.0)])
        with pytest.raises(ValueError, match="coordinates"):
            box_counting_dimension(g, [0.5, 0.25])
        g2 = gen_sierpinski("gasket", 2)
        with pytest.raises(ValueError):
            box_counting_dimension(g2, [0.25, 0.5])


def test_json_roundtrip():
    m = gen_simplicial("sphere", 2, 2)
    back = FiniteMetricSpace.from_json(m.to_json())
    assert back.same_as(m) and back.labels == m.labels
    g = gen_sierpinski("carpet", 1)
    gb = LengthGraph.from_json(g.to_json())
    assert np.array_equal(intrinsic_metric(gb).dist, intrinsic_metric(g).dist)
    with pytest.raises(MalformedInputError):
        FiniteMetricSpace.from_json({"size": 3, "dist": [[0, 1], [1, 0]]})
