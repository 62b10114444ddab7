"""Directed road graph with static and travel-time routing.

Trips live on edges: a vehicle starts on one edge and ends on another, so
all three routing algorithms search the edge-transition graph (nodes are
edges, arcs are junction-legal continuations).  U-turns are only allowed
on dead-end edges.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field


class Unreachable(Exception):
    """No edge sequence connects origin to destination."""


@dataclass(frozen=True)
class Edge:
    id: str
    src: str
    dst: str
    length: float          # m
    speed_limit: float     # m/s
    lane_count: int = 1
    dead_end: bool = False

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"edge {self.id}: length must be > 0")
        if self.speed_limit <= 0:
            raise ValueError(f"edge {self.id}: speed_limit must be > 0")
        if self.lane_count < 1:
            raise ValueError(f"edge {self.id}: lane_count must be >= 1")

    @property
    def free_flow_time(self) -> float:
        return self.length / self.speed_limit


class RoadNetwork:
    """Static directed graph of junctions and road edges.

    Bi-directional roads are represented as two independent edges.  The
    graph never mutates after construction; routing structures are built
    once and cached.
    """

    def __init__(self, junctions: dict[str, tuple[float, float] | None],
                 edges: list[Edge]):
        self.junctions = dict(junctions)
        self.edges: dict[str, Edge] = {}
        out: dict[str, list[str]] = {j: [] for j in self.junctions}
        for e in edges:
            if e.id in self.edges:
                raise ValueError(f"duplicate edge id {e.id}")
            if e.src not in self.junctions or e.dst not in self.junctions:
                raise ValueError(f"edge {e.id} references unknown junction")
            self.edges[e.id] = e
            out[e.src].append(e.id)
        self._out = {j: tuple(sorted(ids)) for j, ids in out.items()}
        self._succ: dict[str, tuple[str, ...]] = {}
        for e in self.edges.values():
            nxt = []
            for nid in self._out[e.dst]:
                n = self.edges[nid]
                is_uturn = n.src == e.dst and n.dst == e.src
                if is_uturn and not e.dead_end:
                    continue
                nxt.append(nid)
            self._succ[e.id] = tuple(nxt)
        self._pred: dict[str, list[str]] = {eid: [] for eid in self.edges}
        for eid, succs in self._succ.items():
            for s in succs:
                self._pred[s].append(eid)

    def successors(self, edge_id: str) -> tuple[str, ...]:
        return self._succ[edge_id]

    def predecessors(self, edge_id: str) -> list[str]:
        return self._pred[edge_id]

    @property
    def has_coordinates(self) -> bool:
        return all(c is not None for c in self.junctions.values())

    def max_speed_limit(self) -> float:
        return max(e.speed_limit for e in self.edges.values())

    def junction_distance(self, a: str, b: str) -> float:
        ca, cb = self.junctions[a], self.junctions[b]
        if ca is None or cb is None:
            raise ValueError("network has no coordinates")
        return math.hypot(ca[0] - cb[0], ca[1] - cb[1])

    def edge_midpoint(self, edge_id: str) -> tuple[float, float]:
        e = self.edges[edge_id]
        ca, cb = self.junctions[e.src], self.junctions[e.dst]
        if ca is None or cb is None:
            raise ValueError("network has no coordinates")
        return ((ca[0] + cb[0]) / 2.0, (ca[1] + cb[1]) / 2.0)

    @classmethod
    def from_json(cls, path_or_obj) -> "RoadNetwork":
        if isinstance(path_or_obj, (str, bytes)) or hasattr(path_or_obj, "__fspath__"):
            with open(path_or_obj) as f:
                obj = json.load(f)
        else:
            obj = path_or_obj
        junctions: dict[str, tuple[float, float] | None] = {}
        for j in obj["junctions"]:
            if "x" in j and "y" in j:
                junctions[j["id"]] = (float(j["x"]), float(j["y"]))
            else:
                junctions[j["id"]] = None
        edges = [Edge(id=e["id"], src=e["from"], dst=e["to"],
                      length=float(e["length_m"]), speed_limit=float(e["speed_mps"]),
                      lane_count=int(e.get("lanes", 1)),
                      dead_end=bool(e.get("dead_end", False)))
                 for e in obj["edges"]]
        return cls(junctions, edges)

    def to_json_obj(self) -> dict:
        junctions = []
        for jid, coord in self.junctions.items():
            j = {"id": jid}
            if coord is not None:
                j["x"], j["y"] = coord
            junctions.append(j)
        edges = [{"id": e.id, "from": e.src, "to": e.dst, "length_m": e.length,
                  "speed_mps": e.speed_limit, "lanes": e.lane_count,
                  "dead_end": e.dead_end} for e in self.edges.values()]
        return {"junctions": junctions, "edges": edges}


APT_SMOOTHING = 0.25


@dataclass
class EdgeWeights:
    """Edge weights for routing: static lengths or smoothed passing times.

    In 'fastest' mode each completed traversal feeds an exponential moving
    average of the passing time, floored at the edge's free-flow time.
    """
    net: RoadNetwork
    mode: str = "shortest"          # 'shortest' | 'fastest'
    apt: dict[str, float] = field(default_factory=dict)
    version: int = 0

    def __post_init__(self):
        if self.mode not in ("shortest", "fastest"):
            raise ValueError(f"unknown weight mode {self.mode!r}")

    def weight(self, edge_id: str) -> float:
        e = self.net.edges[edge_id]
        if self.mode == "shortest":
            return e.length
        return self.apt.get(edge_id, e.free_flow_time)

    def observe(self, edge_id: str, seconds: float) -> None:
        if self.mode != "fastest":
            return
        floor = self.net.edges[edge_id].free_flow_time
        prev = self.apt.get(edge_id, floor)
        new = (1.0 - APT_SMOOTHING) * prev + APT_SMOOTHING * seconds
        self.apt[edge_id] = max(floor, new)
        self.version += 1


def path_length(net: RoadNetwork, path: list[str]) -> float:
    """Total length in meters of an edge sequence (empty path -> 0)."""
    return sum(net.edges[eid].length for eid in path)


def path_time(net: RoadNetwork, path: list[str], weights: EdgeWeights) -> float:
    """Total passing time in seconds under 'fastest' weights (free-flow
    fallback when an edge has no observation)."""
    total = 0.0
    for eid in path:
        e = net.edges[eid]
        total += weights.apt.get(eid, e.free_flow_time) if weights.mode == "fastest" \
            else e.free_flow_time
    return total


def path_cost(net: RoadNetwork, path: list[str], weights: EdgeWeights) -> float:
    return sum(weights.weight(eid) for eid in path)


def _check_edges(net: RoadNetwork, origin: str, dest: str) -> None:
    if origin not in net.edges:
        raise KeyError(f"unknown origin edge {origin!r}")
    if dest not in net.edges:
        raise KeyError(f"unknown destination edge {dest!r}")


def dijkstra_route(net: RoadNetwork, origin: str, dest: str,
                   weights: EdgeWeights) -> list[str]:
    return _best_first_route(net, origin, dest, weights, heuristic=None)


def astar_route(net: RoadNetwork, origin: str, dest: str,
                weights: EdgeWeights) -> list[str]:
    """A* on the edge graph.  The heuristic is the straight-line distance
    to the destination (divided by the network's top speed limit in
    'fastest' mode), which is admissible and consistent as long as edge
    lengths dominate the straight-line distance between their endpoints.
    Falls back to Dijkstra when the network carries no coordinates.
    """
    if not net.has_coordinates:
        return _best_first_route(net, origin, dest, weights, heuristic=None)
    target = net.junctions[net.edges[dest].dst]
    scale = 1.0 / net.max_speed_limit() if weights.mode == "fastest" else 1.0

    def heuristic(edge_id: str) -> float:
        c = net.junctions[net.edges[edge_id].dst]
        return math.hypot(c[0] - target[0], c[1] - target[1]) * scale

    return _best_first_route(net, origin, dest, weights, heuristic)


def _best_first_route(net, origin, dest, weights, heuristic):
    """Shared Dijkstra/A* kernel.

    Ties on path cost are broken toward the lexicographically smallest
    edge-id sequence, so equal-cost queries are reproducible and the two
    algorithms can be compared path-for-path.
    """
    _check_edges(net, origin, dest)
    if origin == dest:
        return [origin]
    h0 = heuristic(origin) if heuristic else 0.0
    # heap entries: (priority, path); g-cost tracked separately
    start = (origin,)
    heap = [(h0, start)]
    gcost = {origin: 0.0}
    best_path: dict[str, tuple[str, ...]] = {origin: start}
    done: set[str] = set()
    while heap:
        prio, path = heapq.heappop(heap)
        node = path[-1]
        if node in done:
            continue
        done.add(node)
        if node == dest:
            return list(path)
        g = gcost[node]
        for nxt in net.successors(node):
            if nxt in done:
                continue
            ng = g + weights.weight(nxt)
            npath = path + (nxt,)
            old = gcost.get(nxt)
            if old is not None and (ng > old or (ng == old and npath >= best_path[nxt])):
                continue
            gcost[nxt] = ng
            best_path[nxt] = npath
            nh = heuristic(nxt) if heuristic else 0.0
            heapq.heappush(heap, (ng + nh, npath))
    raise Unreachable(f"no path from edge {origin!r} to edge {dest!r}")


class CHOverlay:
    """Contraction-hierarchy overlay over the edge-transition graph.

    Preprocessing contracts nodes in importance order, inserting shortcut
    arcs that preserve all shortest distances; queries then run a
    bidirectional upward search.  The overlay is immutable once built and
    must be rebuilt after weight updates ('fastest' mode).
    """

    def __init__(self, net: RoadNetwork, weights: EdgeWeights):
        self.net = net
        self.weights_version = weights.version
        self.mode = weights.mode
        nodes = sorted(net.edges)
        self._index = {eid: i for i, eid in enumerate(nodes)}
        self._nodes = nodes
        n = len(nodes)
        # arc weight of u->v is the cost of entering edge v
        w = [weights.weight(eid) for eid in nodes]
        self._enter_cost = w
        fwd: list[dict[int, float]] = [dict() for _ in range(n)]
        bwd: list[dict[int, float]] = [dict() for _ in range(n)]
        for eid in nodes:
            u = self._index[eid]
            for s in net.successors(eid):
                v = self._index[s]
                cost = w[v]
                if v != u and cost < fwd[u].get(v, math.inf):
                    fwd[u][v] = cost
                    bwd[v][u] = cost
        self._middle: dict[tuple[int, int], int] = {}
        self._order = self._contract(fwd, bwd)
        # upward adjacency built during contraction
        self._up_fwd = self._final_fwd
        self._up_bwd = self._final_bwd

    # -- preprocessing -------------------------------------------------
    def _contract(self, fwd, bwd):
        n = len(self._nodes)
        rank = [0] * n
        contracted = [False] * n
        level = [0] * n
        deleted = [0] * n

        def simulate(v):
            # shortcuts needed if v were contracted now; witness searches
            # run only here, at contraction time
            ins = [(u, c) for u, c in bwd[v].items() if not contracted[u]]
            outs = [(t, c) for t, c in fwd[v].items() if not contracted[t]]
            shortcuts = []
            for u, cu in ins:
                if not outs:
                    break
                limit = cu + max(c for _, c in outs)
                dist = self._witness_search(fwd, contracted, u, v, limit,
                                            {t for t, _ in outs})
                for t, ct in outs:
                    if t == u:
                        continue
                    through = cu + ct
                    if dist.get(t, math.inf) > through:
                        shortcuts.append((u, t, through))
            return shortcuts

        def priority(v):
            # cheap edge-difference estimate: an extra shortcut kept by the
            # estimate only reorders contraction, never breaks exactness
            ins = sum(1 for u in bwd[v] if not contracted[u])
            outs = sum(1 for t in fwd[v] if not contracted[t])
            return (ins * outs - ins - outs) + 2 * level[v] + deleted[v]

        heap = [(priority(v), v) for v in range(n)]
        heapq.heapify(heap)
        order = []
        while heap:
            _, v = heapq.heappop(heap)
            if contracted[v]:
                continue
            p = priority(v)
            if heap and p > heap[0][0]:
                heapq.heappush(heap, (p, v))
                continue
            contracted[v] = True
            rank[v] = len(order)
            order.append(v)
            for u, t, c in simulate(v):
                if c < fwd[u].get(t, math.inf):
                    fwd[u][t] = c
                    bwd[t][u] = c
                    self._middle[(u, t)] = v
            for u in list(bwd[v]):
                if not contracted[u]:
                    deleted[u] += 1
                    level[u] = max(level[u], level[v] + 1)
            for t in list(fwd[v]):
                if not contracted[t]:
                    deleted[t] += 1
                    level[t] = max(level[t], level[v] + 1)
        self._rank = rank
        self._final_fwd = [
            sorted((t, c) for t, c in fwd[u].items() if rank[t] > rank[u])
            for u in range(n)]
        self._final_bwd = [
            sorted((s, c) for s, c in bwd[u].items() if rank[s] > rank[u])
            for u in range(n)]
        return order

    @staticmethod
    def _witness_search(fwd, contracted, source, skip, limit, targets):
        """Hop- and settle-limited Dijkstra from source avoiding `skip`,
        pruned at `limit`.  A missed witness only ever causes an extra
        (harmless) shortcut."""
        dist = {source: 0.0}
        get = dist.get
        inf = math.inf
        heap = [(0.0, 0, source)]
        remaining = set(targets)
        remaining.discard(source)
        settled = 0
        while heap and remaining and settled < 300:
            d, hops, u = heapq.heappop(heap)
            if d > limit:
                break
            if d > get(u, inf):
                continue
            settled += 1
            remaining.discard(u)
            if hops >= 5:
                continue
            for t, c in fwd[u].items():
                if t == skip or contracted[t]:
                    continue
                nd = d + c
                if nd <= limit and nd < get(t, inf):
                    dist[t] = nd
                    heapq.heappush(heap, (nd, hops + 1, t))
        return dist

    # -- queries -------------------------------------------------------
    def route(self, origin: str, dest: str) -> list[str]:
        _check_edges(self.net, origin, dest)
        if origin == dest:
            return [origin]
        s, t = self._index[origin], self._index[dest]
        df, pf = self._upward_search(self._up_fwd, s)
        db, pb = self._upward_search(self._up_bwd, t)
        best, meet = math.inf, -1
        for v, d in df.items():
            dv = db.get(v)
            if dv is not None and d + dv < best:
                best, meet = d + dv, v
        if meet < 0:
            raise Unreachable(f"no path from edge {origin!r} to edge {dest!r}")
        up = self._walk_parents(pf, s, meet)
        down = self._walk_parents(pb, t, meet)
        arcs = [(up[i], up[i + 1]) for i in range(len(up) - 1)]
        arcs += [(down[i + 1], down[i]) for i in reversed(range(len(down) - 1))]
        nodes = [s]
        for a in arcs:
            nodes.extend(self._unpack(a))
        return [self._nodes[v] for v in nodes]

    def cost(self, origin: str, dest: str) -> float:
        path = self.route(origin, dest)
        return sum(self._enter_cost[self._index[e]] for e in path)

    @staticmethod
    def _upward_search(adj, source):
        dist = {source: 0.0}
        parent = {source: -1}
        heap = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist.get(u, math.inf):
                continue
            for v, c in adj[u]:
                nd = d + c
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    parent[v] = u
                    heapq.heappush(heap, (nd, v))
        return dist, parent

    @staticmethod
    def _walk_parents(parent, source, target):
        seq = [target]
        cur = target
        while cur != source:
            cur = parent[cur]
            seq.append(cur)
        seq.reverse()
        return seq

    def _unpack(self, arc):
        """Expand a (possibly shortcut) arc into original node steps."""
        mid = self._middle.get(arc)
        if mid is None:
            return [arc[1]]
        return self._unpack((arc[0], mid)) + self._unpack((mid, arc[1]))


def ch_preprocess(net: RoadNetwork, weights: EdgeWeights) -> CHOverlay:
    return CHOverlay(net, weights)


def route(net: RoadNetwork, origin: str, dest: str, weights: EdgeWeights,
          algo: str = "dijkstra", overlay: CHOverlay | None = None) -> list[str]:
    """Minimum-weight edge sequence from origin edge to dest edge.

    All algorithms agree on total path weight; 'ch' requires (or builds)
    an overlay for the given weights.
    """
    if algo == "dijkstra":
        return dijkstra_route(net, origin, dest, weights)
    if algo == "astar":
        return astar_route(net, origin, dest, weights)
    if algo == "ch":
        if overlay is None:
            overlay = ch_preprocess(net, weights)
        return overlay.route(origin, dest)
    raise ValueError(f"unknown routing algorithm {algo!r}")
