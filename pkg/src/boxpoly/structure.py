"""Interaction graphs and hypergraphs, and component elimination.

Nodes are nonnegative integers. Graph edges are 2-element frozensets,
hypergraph edges are frozensets of size at least two.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from itertools import combinations

from .poly import Polynomial

DEFAULT_NEIGHBORHOOD_CAP = 24


class AssumptionViolated(ValueError):
    """A structural precondition (connectivity, size cap) does not hold."""


@dataclass(frozen=True)
class Graph:
    nodes: frozenset
    edges: frozenset = frozenset()
    _adj: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = frozenset(frozenset(e) for e in self.edges)
        for e in edges:
            if len(e) != 2:
                raise ValueError(f"graph edge {sorted(e)} is not a pair of distinct nodes")
            if not e <= nodes:
                raise ValueError(f"edge {sorted(e)} references a missing node")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, nodes: Iterable, edges: Iterable) -> "Graph":
        return cls(frozenset(nodes), frozenset(frozenset(e) for e in edges))

    @property
    def adjacency(self) -> dict:
        if self._adj is None:
            adj = {v: set() for v in self.nodes}
            for e in self.edges:
                a, b = tuple(e)
                adj[a].add(b)
                adj[b].add(a)
            object.__setattr__(self, "_adj", adj)
        return self._adj

    def neighbors(self, v) -> set:
        return self.adjacency[v]

    def degree(self, v) -> int:
        return len(self.adjacency[v])

    def has_edge(self, a, b) -> bool:
        return b in self.adjacency.get(a, ())

    def induced(self, subset) -> "Graph":
        subset = frozenset(subset)
        return Graph(subset, frozenset(e for e in self.edges if e <= subset))

    def to_json(self) -> dict:
        return {
            "nodes": sorted(self.nodes),
            "edges": sorted(sorted(e) for e in self.edges),
        }


@dataclass(frozen=True)
class Hypergraph:
    nodes: frozenset
    edges: frozenset = frozenset()

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = frozenset(frozenset(e) for e in self.edges)
        for e in edges:
            if len(e) < 2:
                raise ValueError(f"hyperedge {sorted(e)} has fewer than two nodes")
            if not e <= nodes:
                raise ValueError(f"hyperedge {sorted(e)} references a missing node")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    def sorted_edges(self) -> list:
        """Edges in the canonical order used for incidence-graph identifiers."""
        return sorted((tuple(sorted(e)) for e in self.edges))

    def to_json(self) -> dict:
        return {"nodes": sorted(self.nodes), "edges": [list(e) for e in self.sorted_edges()]}


def interaction_graph(p: Polynomial) -> Graph:
    """Node per variable, edge {i, j} iff the x_i x_j coefficient is nonzero."""
    if p.degree() > 2:
        raise ValueError(f"interaction graph needs degree <= 2, got {p.degree()}")
    edges = [frozenset(v for v, _ in m) for m in p.terms if len(m) == 2]
    return Graph(frozenset(range(p.nvars)), frozenset(edges))


def interaction_hypergraph(p: Polynomial) -> Hypergraph:
    edges = {frozenset(v for v, _ in m) for m in p.terms if len(m) >= 2}
    return Hypergraph(frozenset(range(p.nvars)), frozenset(edges))


def intersection_graph(h: Hypergraph) -> Graph:
    pairs = set()
    for e in h.edges:
        for a, b in combinations(sorted(e), 2):
            pairs.add(frozenset((a, b)))
    return Graph(h.nodes, frozenset(pairs))


def edge_node_offset(h: Hypergraph) -> int:
    return max(h.nodes) + 1 if h.nodes else 0


def incidence_graph(h: Hypergraph) -> Graph:
    """Bipartite node/edge graph.

    The k-th edge in :meth:`Hypergraph.sorted_edges` order becomes node
    ``edge_node_offset(h) + k``.
    """
    offset = edge_node_offset(h)
    nodes = set(h.nodes)
    pairs = []
    for k, e in enumerate(h.sorted_edges()):
        w = offset + k
        nodes.add(w)
        pairs.extend(frozenset((v, w)) for v in e)
    return Graph(frozenset(nodes), frozenset(pairs))


def induced_subhypergraph(h: Hypergraph, c) -> Hypergraph:
    c = frozenset(c)
    if not c <= h.nodes:
        raise ValueError("node set is not contained in the hypergraph")
    edges = {e & c for e in h.edges if len(e & c) >= 2}
    return Hypergraph(c, frozenset(edges))


class _DisjointSet:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def connected_components(h: Hypergraph | Graph) -> list[frozenset]:
    """Node sets linked by edge chains, ordered by smallest node."""
    ds = _DisjointSet(h.nodes)
    for e in h.edges:
        it = iter(e)
        first = next(it)
        for v in it:
            ds.union(first, v)
    groups: dict = {}
    for v in h.nodes:
        groups.setdefault(ds.find(v), set()).add(v)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def neighborhood(h: Hypergraph | Graph, c) -> frozenset:
    """Nodes outside ``c`` sharing an edge with some node of ``c``."""
    c = frozenset(c)
    out = set()
    for e in h.edges:
        if e & c:
            out |= e - c
    return frozenset(out)


def is_connected_set(h: Hypergraph | Graph, c) -> bool:
    c = frozenset(c)
    if not c:
        return False
    if isinstance(h, Graph):
        sub = Hypergraph(c, frozenset(e for e in h.edges if e <= c))
    else:
        sub = induced_subhypergraph(h, c)
    return len(connected_components(sub)) == 1


def eliminate_component_graph(g: Graph, c) -> Graph:
    """Delete the connected set ``c`` and make its neighborhood a clique."""
    c = frozenset(c)
    if not c <= g.nodes:
        raise ValueError("component is not contained in the graph")
    if not is_connected_set(g, c):
        raise AssumptionViolated(f"node set {sorted(c)} does not induce a connected subgraph")
    nbr = neighborhood(g, c)
    edges = {e for e in g.edges if not e & c}
    edges.update(frozenset(p) for p in combinations(sorted(nbr), 2))
    return Graph(g.nodes - c, frozenset(edges))


def eliminate_component_hypergraph(h: Hypergraph, c, cap: int = DEFAULT_NEIGHBORHOOD_CAP) -> Hypergraph:
    """Remove ``c`` (shrinking edges) and add the complete hypergraph on N(c)."""
    c = frozenset(c)
    if not c <= h.nodes:
        raise ValueError("component is not contained in the hypergraph")
    if not is_connected_set(h, c):
        raise AssumptionViolated(f"node set {sorted(c)} does not induce a connected subhypergraph")
    nbr = sorted(neighborhood(h, c))
    if len(nbr) > cap:
        raise AssumptionViolated(
            f"neighborhood of size {len(nbr)} exceeds cap {cap}: "
            f"complete hypergraph would add {2 ** len(nbr) - len(nbr) - 1} edges")
    edges = {e - c for e in h.edges if len(e - c) >= 2}
    for size in range(2, len(nbr) + 1):
        edges.update(frozenset(f) for f in combinations(nbr, size))
    return Hypergraph(h.nodes - c, frozenset(edges))
