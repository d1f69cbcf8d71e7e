"""Binary polynomial optimization: brute force and tree-decomposition DP.

An instance is a multilinear polynomial over binary nodes, stored as a
hypergraph with a cost per edge plus linear node costs and a constant.
Costs are ``Fraction`` (exact mode) or ``float`` (numeric mode).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .poly import Polynomial, format_rational, to_fraction
from .structure import Hypergraph, intersection_graph
from .treewidth import TreeDecomposition, heuristic_decomposition, validate

BRUTE_CAP = 22
FLOAT_TIE_REL = 1e-12


def _num_json(v):
    return format_rational(v) if isinstance(v, Fraction) else float(v)


def _num_parse(v):
    return float(v) if isinstance(v, float) else to_fraction(v)


@dataclass(frozen=True)
class BpoInstance:
    nodes: tuple
    edge_costs: dict = field(default_factory=dict)
    node_costs: dict = field(default_factory=dict)
    constant: object = Fraction(0)

    def __post_init__(self):
        nodes = tuple(sorted(set(self.nodes)))
        node_set = set(nodes)
        edges = {}
        for e, c in self.edge_costs.items():
            e = frozenset(e)
            if len(e) < 2:
                raise ValueError(f"edge {sorted(e)} needs at least two nodes; use node_costs")
            if not e <= node_set:
                raise ValueError(f"edge {sorted(e)} references a missing node")
            if c:
                edges[e] = edges.get(e, 0) + c
        for v in self.node_costs:
            if v not in node_set:
                raise ValueError(f"node cost on missing node {v}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edge_costs", {e: c for e, c in edges.items() if c})
        object.__setattr__(self, "node_costs", {v: c for v, c in self.node_costs.items() if c})

    @classmethod
    def from_polynomial(cls, p: Polynomial, nodes=None) -> "BpoInstance":
        """Multilinearize ``p`` (z^k = z on binaries) and read off the costs."""
        q = p.multilinearize()
        edges, linear, const = {}, {}, Fraction(0)
        for m, c in q.terms.items():
            if not m:
                const = c
            elif len(m) == 1:
                linear[m[0][0]] = c
            else:
                edges[frozenset(v for v, _ in m)] = c
        nodes = range(p.nvars) if nodes is None else nodes
        return cls(tuple(nodes), edges, linear, const)

    @property
    def hypergraph(self) -> Hypergraph:
        return Hypergraph(frozenset(self.nodes), frozenset(self.edge_costs))

    @property
    def is_exact(self) -> bool:
        costs = [self.constant, *self.edge_costs.values(), *self.node_costs.values()]
        return not any(isinstance(c, float) for c in costs)

    def terms(self):
        """All (support, cost) pairs including singletons; the constant is separate."""
        out = [((v,), c) for v, c in sorted(self.node_costs.items())]
        out += [(tuple(sorted(e)), c) for e, c in sorted(self.edge_costs.items(), key=lambda t: sorted(t[0]))]
        return out

    def objective(self, assignment) -> object:
        total = self.constant
        for supp, c in self.terms():
            if all(assignment[v] for v in supp):
                total = total + c
        return total

    def to_json(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [{"nodes": list(s), "cost": _num_json(c)} for s, c in self.terms() if len(s) > 1],
            "node_costs": [{"node": s[0], "cost": _num_json(c)} for s, c in self.terms() if len(s) == 1],
            "constant": _num_json(self.constant),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BpoInstance":
        edges = {frozenset(e["nodes"]): _num_parse(e["cost"]) for e in doc.get("edges", [])}
        linear = {int(e["node"]): _num_parse(e["cost"]) for e in doc.get("node_costs", [])}
        return cls(tuple(doc["nodes"]), edges, linear, _num_parse(doc.get("constant", "0")))


def _scaled_costs(costs):
    """Common-denominator integers for exact vectorised sums."""
    den = 1
    for c in costs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    return den, [int(c * den) for c in costs]


def solve_brute(inst: BpoInstance):
    """Exhaustive minimum; ties go to the lexicographically smallest assignment."""
    n = len(inst.nodes)
    if n > BRUTE_CAP:
        raise ValueError(f"brute force limited to {BRUTE_CAP} nodes, got {n}")
    pos = {v: n - 1 - j for j, v in enumerate(inst.nodes)}
    idx = np.arange(1 << n, dtype=np.int64)
    terms = inst.terms()
    exact = inst.is_exact
    if exact:
        den, ints = _scaled_costs([inst.constant] + [c for _, c in terms])
        bound = sum(abs(a) for a in ints)
        dtype = np.int64 if bound < (1 << 62) else object
        vals = np.full(1 << n, ints[0], dtype=dtype)
        weights = ints[1:]
    else:
        vals = np.full(1 << n, float(inst.constant))
        weights = [float(c) for _, c in terms]
    for (supp, _), w in zip(terms, weights):
        mask = 0
        for v in supp:
            mask |= 1 << pos[v]
        hit = (idx & mask) == mask
        vals[hit] += w
    best = int(np.argmin(vals))
    bits = {v: (best >> pos[v]) & 1 for v in inst.nodes}
    value = Fraction(int(vals[best]), den) if exact else float(vals[best])
    return value, bits


def charge_terms(inst: BpoInstance, td: TreeDecomposition) -> dict:
    """Map bag index -> list of (support, cost), each term at its smallest containing bag."""
    where: dict = {}
    for i, bag in enumerate(td.bags):
        for v in bag:
            where.setdefault(v, set()).add(i)
    charged: dict = {i: [] for i in range(len(td.bags))}
    for supp, c in inst.terms():
        cands = set.intersection(*(where.get(v, set()) for v in supp))
        if not cands:
            raise ValueError(f"no bag contains the support {list(supp)}")
        charged[min(cands)].append((supp, c))
    return charged


def _argmin_first(flat, exact):
    if exact:
        return int(np.argmin(flat))
    m = flat.min()
    return int(np.nonzero(flat <= m + FLOAT_TIE_REL * max(1.0, abs(m)))[0][0])


def solve_treedp(inst: BpoInstance, td: TreeDecomposition, check: bool = True):
    """Minimize by passing min-messages from leaves to the root of the bag tree."""
    if check:
        g = intersection_graph(inst.hypergraph)
        errors = validate(td, g)
        if errors:
            raise ValueError("invalid tree decomposition: " + "; ".join(errors[:3]))
    exact = inst.is_exact
    dtype = object if exact else float
    zero = Fraction(0) if exact else 0.0
    nb = len(td.bags)
    order_of = [tuple(sorted(b)) for b in td.bags]
    charged = charge_terms(inst, td)

    adj = {i: [] for i in range(nb)}
    for a, b in td.tree_edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = [None] * nb
    visit = []
    roots = []
    seen = [False] * nb
    for r in range(nb):
        if seen[r]:
            continue
        roots.append(r)
        seen[r] = True
        queue = deque([r])
        while queue:
            u = queue.popleft()
            visit.append(u)
            for w in sorted(adj[u]):
                if not seen[w]:
                    seen[w] = True
                    parent[w] = u
                    queue.append(w)

    tables = [None] * nb
    for i in range(nb):
        bag = order_of[i]
        axis = {v: j for j, v in enumerate(bag)}
        t = np.full((2,) * len(bag), zero, dtype=dtype)
        for supp, c in charged[i]:
            sl = [slice(None)] * len(bag)
            for v in supp:
                sl[axis[v]] = 1
            t[tuple(sl)] += c if exact else float(c)
        tables[i] = t

    for u in reversed(visit):
        p = parent[u]
        if p is None:
            continue
        bag, pbag = order_of[u], set(order_of[p])
        drop = tuple(j for j, v in enumerate(bag) if v not in pbag)
        msg = np.min(tables[u], axis=drop) if drop else tables[u]
        shape = [2 if v in set(bag) else 1 for v in order_of[p]]
        tables[p] = tables[p] + np.reshape(msg, shape)

    assignment = {}
    value = inst.constant if exact else float(inst.constant)
    for u in visit:
        bag = order_of[u]
        t = tables[u]
        sl = tuple(assignment[v] if v in assignment else slice(None) for v in bag)
        sub = t[sl]
        free = [v for v in bag if v not in assignment]
        flat = np.ravel(sub)
        k = _argmin_first(flat, exact)
        if parent[u] is None:
            value = value + flat[k]
        for j, v in enumerate(free):
            assignment[v] = (k >> (len(free) - 1 - j)) & 1
    for v in inst.nodes:
        assignment.setdefault(v, 0)
    return value, assignment


def solve_heuristic(inst: BpoInstance):
    """DP over a min-fill decomposition of the intersection graph: ``(value, assignment, td)``."""
    td = heuristic_decomposition(intersection_graph(inst.hypergraph))
    value, assignment = solve_treedp(inst, td, check=False)
    return value, assignment, td
