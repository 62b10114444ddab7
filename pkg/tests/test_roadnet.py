import math

import numpy as np
import pytest

from evcosim.roadnet import (CHOverlay, Edge, EdgeWeights, RoadNetwork,
                             Unreachable, ch_preprocess, dijkstra_route,
                             astar_route, path_cost, path_length, path_time,
                             route)


def make_net(edges, coords=None):
    junctions = {}
    for e in edges:
        junctions.setdefault(e.src, None)
        junctions.setdefault(e.dst, None)
    if coords:
        junctions.update(coords)
    return RoadNetwork(junctions, edges)


@pytest.fixture
def triangle():
    return make_net([Edge("AB", "A", "B", 1, 1), Edge("BC", "B", "C", 1, 1),
                     Edge("AC", "A", "C", 3, 1)])


def test_triangle_route(triangle):
    w = EdgeWeights(triangle, "shortest")
    for algo in ("dijkstra", "astar", "ch"):
        path = route(triangle, "AB", "BC", w, algo)
        assert path == ["AB", "BC"]
        assert path_cost(triangle, path, w) == 2


def test_origin_equals_dest(triangle):
    w = EdgeWeights(triangle, "shortest")
    for algo in ("dijkstra", "astar", "ch"):
        assert route(triangle, "AC", "AC", w, algo) == ["AC"]


def test_unreachable():
    net = make_net([Edge("e1", "A", "B", 1, 1), Edge("e2", "C", "D", 1, 1)])
    w = EdgeWeights(net, "shortest")
    for algo in ("dijkstra", "astar", "ch"):
        with pytest.raises(Unreachable):
            route(net, "e1", "e2", w, algo)


def test_path_accessors():
    net = make_net([Edge("a", "A", "B", 500, 10), Edge("b", "B", "C", 300, 10)])
    w = EdgeWeights(net, "fastest")
    assert path_length(net, ["a", "b"]) == 800
    assert path_length(net, []) == 0
    w.apt = {"a": 60.0, "b": 90.0}
    assert path_time(net, ["a", "b"], w) == 150
    assert path_time(net, [], w) == 0


def test_apt_smoothing_and_floor():
    net = make_net([Edge("a", "A", "B", 100, 10)])  # free flow 10 s
    w = EdgeWeights(net, "fastest")
    assert w.weight("a") == 10.0
    w.observe("a", 30.0)
    assert w.weight("a") == pytest.approx(0.75 * 10 + 0.25 * 30)
    # observations cannot drag the weight below free flow
    for _ in range(50):
        w.observe("a", 1.0)
    assert w.weight("a") == 10.0


def test_shortest_weights_are_lengths():
    net = make_net([Edge("a", "A", "B", 123.5, 10)])
    w = EdgeWeights(net, "shortest")
    w.observe("a", 999.0)  # no-op in shortest mode
    assert w.weight("a") == 123.5


def test_uturn_only_at_dead_end():
    # in/out stub pair: continuation requires a U-turn at the dead end
    edges = [Edge("in", "A", "B", 100, 10, dead_end=True),
             Edge("out", "B", "A", 100, 10),
             Edge("loop1", "A", "C", 100, 10), Edge("loop2", "C", "A", 100, 10)]
    net = make_net(edges)
    w = EdgeWeights(net, "shortest")
    assert route(net, "in", "out", w) == ["in", "out"]
    # non-dead-end edge may not U-turn: loop1 -> loop2 must be illegal
    assert "loop2" not in net.successors("loop1")
    with pytest.raises(Unreachable):
        route(net, "loop1", "loop2", w)


def test_single_edge_graph_ch_trivial():
    net = make_net([Edge("only", "A", "B", 10, 5)])
    w = EdgeWeights(net, "shortest")
    overlay = ch_preprocess(net, w)
    assert overlay.route("only", "only") == ["only"]


def random_net(rng, n_junctions=25, n_edges=100, coords=False):
    junctions = {f"j{i}": ((float(i % 5) * 100.0, float(i // 5) * 100.0)
                           if coords else None)
                 for i in range(n_junctions)}
    edges = []
    for i in range(n_edges):
        a, b = rng.integers(n_junctions, size=2)
        if a == b:
            continue
        edges.append(Edge(f"e{i:03d}", f"j{a}", f"j{b}",
                          float(rng.integers(1, 60)), 10.0))
    return RoadNetwork(junctions, edges)


def test_three_algorithms_agree_on_random_graphs():
    rng = np.random.default_rng(42)
    for _ in range(8):
        net = random_net(rng)
        w = EdgeWeights(net, "shortest")
        overlay = ch_preprocess(net, w)
        ids = sorted(net.edges)
        for _ in range(40):
            o = ids[rng.integers(len(ids))]
            d = ids[rng.integers(len(ids))]
            costs = []
            for algo in ("dijkstra", "astar"):
                try:
                    costs.append(path_cost(net, route(net, o, d, w, algo), w))
                except Unreachable:
                    costs.append(None)
            try:
                costs.append(path_cost(net, overlay.route(o, d), w))
            except Unreachable:
                costs.append(None)
            assert costs[0] == costs[1] == costs[2]


def grid_net(n=5, spacing=100.0):
    junctions = {f"g{r}{c}": (c * spacing, r * spacing)
                 for r in range(n) for c in range(n)}
    edges = []
    for r in range(n):
        for c in range(n):
            for (r2, c2) in ((r, c + 1), (r + 1, c)):
                if r2 < n and c2 < n:
                    edges.append(Edge(f"g{r}{c}_g{r2}{c2}", f"g{r}{c}",
                                      f"g{r2}{c2}", spacing, 10.0))
                    edges.append(Edge(f"g{r2}{c2}_g{r}{c}", f"g{r2}{c2}",
                                      f"g{r}{c}", spacing, 10.0))
    return RoadNetwork(junctions, edges)


def test_grid_ch_matches_astar_weight():
    net = grid_net(5)
    w = EdgeWeights(net, "shortest")
    overlay = ch_preprocess(net, w)
    rng = np.random.default_rng(3)
    ids = sorted(net.edges)
    for _ in range(50):
        o = ids[rng.integers(len(ids))]
        d = ids[rng.integers(len(ids))]
        ca = path_cost(net, astar_route(net, o, d, w), w)
        cc = path_cost(net, overlay.route(o, d), w)
        assert ca == pytest.approx(cc, rel=1e-9)


def test_astar_equals_dijkstra_paths_on_grid():
    # lexicographic tie-break makes the two comparable path-for-path
    net = grid_net(4)
    w = EdgeWeights(net, "shortest")
    rng = np.random.default_rng(5)
    ids = sorted(net.edges)
    for _ in range(60):
        o = ids[rng.integers(len(ids))]
        d = ids[rng.integers(len(ids))]
        assert dijkstra_route(net, o, d, w) == astar_route(net, o, d, w)


def test_lexicographic_tie_break():
    # two equal-cost A..D paths: via B (edges 1*) and via C (edges 2*)
    edges = [Edge("s", "S", "A", 1, 1),
             Edge("1a", "A", "B", 1, 1), Edge("1b", "B", "D", 1, 1),
             Edge("2a", "A", "C", 1, 1), Edge("2b", "C", "D", 1, 1),
             Edge("t", "D", "T", 1, 1)]
    net = make_net(edges)
    w = EdgeWeights(net, "shortest")
    assert dijkstra_route(net, "s", "t", w) == ["s", "1a", "1b", "t"]


def test_fastest_mode_reroutes_after_observations():
    edges = [Edge("s", "S", "A", 10, 10),
             Edge("top", "A", "B", 100, 10),
             Edge("bot1", "A", "C", 60, 10), Edge("bot2", "C", "B", 60, 10),
             Edge("t", "B", "T", 10, 10)]
    net = make_net(edges)
    w = EdgeWeights(net, "fastest")
    assert route(net, "s", "t", w) == ["s", "top", "t"]
    for _ in range(20):
        w.observe("top", 300.0)   # congestion on the direct road
    assert route(net, "s", "t", w) == ["s", "bot1", "bot2", "t"]


def test_ch_overlay_tracks_weight_version():
    net = grid_net(3)
    w = EdgeWeights(net, "fastest")
    overlay = ch_preprocess(net, w)
    assert overlay.weights_version == w.version
    w.observe(sorted(net.edges)[0], 100.0)
    assert overlay.weights_version != w.version
