"""Directed weighted graphs, shortest-path costs, supports and capacity matrices."""

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DisconnectedGraph, EmptySupport, UnreachablePair

INF = np.inf
DEFAULT_ZERO_THRESHOLD = 1e-12


class Edge(NamedTuple):
    src: int
    dst: int
    weight: float
    capacity: float = INF


@dataclass(frozen=True, eq=False)
class Graph:
    """Finite directed graph with per-edge costs/capacities and per-node storage.

    Unbounded capacities and storage are stored as ``+inf``.
    """

    n: int
    edges: tuple
    storage: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("graph needs at least one node")
        edges = tuple(Edge(int(e[0]), int(e[1]), float(e[2]),
                           INF if len(e) < 4 or e[3] is None else float(e[3]))
                      for e in self.edges)
        seen = set()
        for e in edges:
            if not (0 <= e.src < self.n and 0 <= e.dst < self.n):
                raise ConfigError(f"edge {e.src}->{e.dst} references a node outside [0, {self.n})")
            if e.src == e.dst:
                raise ConfigError(f"self-loop on node {e.src}; retention is modelled by storage")
            if not np.isfinite(e.weight) or e.weight < 0:
                raise ConfigError(f"edge {e.src}->{e.dst} has invalid weight {e.weight}")
            if np.isnan(e.capacity) or e.capacity < 0:
                raise ConfigError(f"edge {e.src}->{e.dst} has invalid capacity {e.capacity}")
            if (e.src, e.dst) in seen:
                raise ConfigError(f"duplicate edge {e.src}->{e.dst}")
            seen.add((e.src, e.dst))
        object.__setattr__(self, "edges", edges)

        if self.storage is None:
            storage = np.full(self.n, INF)
        else:
            storage = np.array([INF if s is None else s for s in self.storage], dtype=np.float64)
        if storage.shape != (self.n,):
            raise ConfigError(f"storage has length {storage.size}, expected {self.n}")
        if np.any(np.isnan(storage)) or np.any(storage < 0):
            raise ConfigError("storage bounds must be nonnegative")
        storage.setflags(write=False)
        object.__setattr__(self, "storage", storage)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_dict(cls, data):
        try:
            n = int(data["n"])
            raw = [list(e) for e in data.get("edges", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed graph description: {exc}") from exc
        for e in raw:
            if len(e) not in (3, 4):
                raise ConfigError(f"edge entry {e} must be [src, dst, weight, capacity|null]")
        if data.get("undirected", False):
            mirrored = [[e[1], e[0], *e[2:]] for e in raw]
            present = {(e[0], e[1]) for e in raw}
            raw = raw + [e for e in mirrored if (e[0], e[1]) not in present]
        g = cls(n, tuple(raw), data.get("storage"))
        g.check_connected()
        return g

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        def enc(x):
            return None if np.isinf(x) else float(x)
        return {
            "n": self.n,
            "edges": [[e.src, e.dst, e.weight, enc(e.capacity)] for e in self.edges],
            "storage": [enc(s) for s in self.storage],
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    # -- queries --------------------------------------------------------------

    def edge_index(self):
        return {(e.src, e.dst): e for e in self.edges}

    def has_edge(self, src, dst):
        return any(e.src == src and e.dst == dst for e in self.edges)

    def check_connected(self):
        """Raise DisconnectedGraph unless the underlying undirected graph is connected."""
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            parent[find(e.src)] = find(e.dst)
        roots = {find(i) for i in range(self.n)}
        if len(roots) > 1:
            raise DisconnectedGraph(f"graph is not connected ({len(roots)} components)")

    # -- mutations (return new graphs) ----------------------------------------

    def without_edge(self, src, dst):
        if not self.has_edge(src, dst):
            raise ConfigError(f"cannot remove nonexistent edge {src}->{dst}")
        return Graph(self.n, tuple(e for e in self.edges if (e.src, e.dst) != (src, dst)), self.storage)

    def with_edge(self, src, dst, weight, capacity=INF):
        if self.has_edge(src, dst):
            raise ConfigError(f"edge {src}->{dst} already exists")
        return Graph(self.n, self.edges + ((src, dst, weight, capacity),), self.storage)

    def with_capacity(self, src, dst, capacity):
        if not self.has_edge(src, dst):
            raise ConfigError(f"cannot set capacity of nonexistent edge {src}->{dst}")
        cap = INF if capacity is None else capacity
        edges = tuple(e._replace(capacity=cap) if (e.src, e.dst) == (src, dst) else e
                      for e in self.edges)
        return Graph(self.n, edges, self.storage)

    def with_storage(self, node, bound):
        if not 0 <= node < self.n:
            raise ConfigError(f"node {node} outside [0, {self.n})")
        storage = self.storage.copy()
        storage[node] = INF if bound is None else bound
        return Graph(self.n, self.edges, storage)


def adjacency_with_self_loops(graph):
    """Boolean matrix A + I; entry (i, j) is true iff i == j or edge i->j exists."""
    adj = np.eye(graph.n, dtype=bool)
    for e in graph.edges:
        adj[e.src, e.dst] = True
    adj.setflags(write=False)
    return adj


def shortest_path_costs(graph):
    """All directed shortest-path distances, one label-setting pass per source."""
    out = [[] for _ in range(graph.n)]
    for e in graph.edges:
        out[e.src].append((e.dst, e.weight))
    cost = np.full((graph.n, graph.n), INF)
    for s in range(graph.n):
        dist = cost[s]
        dist[s] = 0.0
        heap = [(0.0, s)]
        done = np.zeros(graph.n, dtype=bool)
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v, w in out[u]:
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        if not done.all():
            raise UnreachablePair(s, int(np.flatnonzero(~done)[0]))
    cost.setflags(write=False)
    return cost


def new_support(rho, adj, zero_threshold=DEFAULT_ZERO_THRESHOLD):
    """Nodes that hold mass or are one out-edge away from a node holding mass."""
    reach = np.asarray(adj, dtype=np.float64).T @ np.asarray(rho, dtype=np.float64)
    support = np.flatnonzero(reach > zero_threshold)
    if support.size == 0:
        raise EmptySupport("no node carries mass above the zero threshold")
    return support


def build_capacity_matrix(graph, adj, support):
    """n x n* edge-capacity matrix over the support columns.

    Rows are source nodes, columns destination support nodes. The diagonal
    (mass staying put) is unbounded; every pair without an edge gets 0.
    """
    support = np.asarray(support, dtype=int)
    cap = np.zeros((graph.n, graph.n))
    for e in graph.edges:
        cap[e.src, e.dst] = e.capacity
    np.fill_diagonal(cap, INF)
    cap[~np.asarray(adj, dtype=bool)] = 0.0
    return cap[:, support]
