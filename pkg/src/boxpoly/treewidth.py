"""Tree decompositions: validation, min-fill heuristic, exact small-graph search."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

from .structure import Graph

DEFAULT_EXACT_BUDGET = 14


class TreewidthBudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple
    tree_edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(frozenset(b) for b in self.bags))
        object.__setattr__(self, "tree_edges", tuple(tuple(sorted(e)) for e in self.tree_edges))

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "bags": [sorted(b) for b in self.bags],
            "tree_edges": [list(e) for e in self.tree_edges],
        }

    @classmethod
    def from_json(cls, doc) -> "TreeDecomposition":
        return cls(tuple(doc["bags"]), tuple(tuple(e) for e in doc["tree_edges"]))


def validate(td: TreeDecomposition, g: Graph) -> list[str]:
    """All violated decomposition conditions; an empty list means valid."""
    problems = []
    m = len(td.bags)
    adj = {i: [] for i in range(m)}
    for a, b in td.tree_edges:
        if not (0 <= a < m and 0 <= b < m) or a == b:
            problems.append(f"tree edge ({a}, {b}) does not join two distinct bags")
            continue
        adj[a].append(b)
        adj[b].append(a)
    if m and len(td.tree_edges) != m - 1:
        problems.append(f"tree has {len(td.tree_edges)} edges for {m} bags")
    if m:
        seen = {0}
        stack = [0]
        while stack:
            for j in adj[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        if len(seen) != m:
            problems.append("bag tree is not connected")
    covered = frozenset().union(*td.bags) if td.bags else frozenset()
    missing = g.nodes - covered
    if missing:
        problems.append(f"nodes not covered by any bag: {sorted(missing)[:10]}")
    extra = covered - g.nodes
    if extra:
        problems.append(f"bags mention unknown nodes: {sorted(extra)[:10]}")
    for e in sorted(g.edges, key=sorted):
        if not any(e <= b for b in td.bags):
            problems.append(f"edge {sorted(e)} is not contained in any bag")
    holders: dict = {}
    for i, b in enumerate(td.bags):
        for v in b:
            holders.setdefault(v, []).append(i)
    for v in sorted(holders):
        idx = holders[v]
        if len(idx) == 1:
            continue
        keep = set(idx)
        seen = {idx[0]}
        stack = [idx[0]]
        while stack:
            for j in adj[stack.pop()]:
                if j in keep and j not in seen:
                    seen.add(j)
                    stack.append(j)
        if len(seen) != len(keep):
            problems.append(f"bags containing node {v} do not form a connected subtree")
    return problems


# ---------------------------------------------------------------------------
# Elimination orderings
# ---------------------------------------------------------------------------


def decomposition_from_order(g: Graph, order) -> TreeDecomposition:
    """Tree decomposition induced by eliminating nodes in ``order``."""
    order = list(order)
    if set(order) != set(g.nodes) or len(order) != len(g.nodes):
        raise ValueError("elimination order must list every node exactly once")
    if not order:
        return TreeDecomposition((frozenset(),), ())
    pos = {v: k for k, v in enumerate(order)}
    adj = {v: set(nb) for v, nb in g.adjacency.items()}
    bags = []
    parent = []
    for v in order:
        nb = adj[v]
        bags.append(frozenset(nb) | {v})
        parent.append(min((pos[u] for u in nb), default=None))
        for u in nb:
            adj[u].discard(v)
            adj[u] |= nb - {u}
        del adj[v]
    m = len(order)
    edges = []
    roots = []
    for k, par in enumerate(parent):
        if par is None:
            roots.append(k)
        else:
            edges.append((k, par))
    # link the roots of separate components into one tree
    for a, b in zip(roots, roots[1:]):
        edges.append((a, b))
    return TreeDecomposition(tuple(bags), tuple(edges))


def order_width(g: Graph, order) -> int:
    adj = {v: set(nb) for v, nb in g.adjacency.items()}
    width = -1 if not order else 0
    for v in order:
        nb = adj.pop(v)
        width = max(width, len(nb))
        for u in nb:
            adj[u].discard(v)
            adj[u] |= nb - {u}
    return width


def _fill(adj, v) -> int:
    nb = list(adj[v])
    missing = 0
    for i, a in enumerate(nb):
        na = adj[a]
        for b in nb[i + 1:]:
            if b not in na:
                missing += 1
    return missing


def min_fill_order(g: Graph) -> list:
    """Greedy min-fill order; ties by degree, then smallest node."""
    adj = {v: set(nb) for v, nb in g.adjacency.items()}
    key = {v: (_fill(adj, v), len(adj[v])) for v in adj}
    heap = [(f, d, v) for v, (f, d) in key.items()]
    heapq.heapify(heap)
    order = []
    while heap:
        f, d, v = heapq.heappop(heap)
        if v not in adj or key[v] != (f, d):
            continue
        nb = adj.pop(v)
        del key[v]
        order.append(v)
        for u in nb:
            adj[u].discard(v)
            adj[u] |= nb - {u}
        touched = set(nb)
        for u in nb:
            touched |= adj[u]
        for u in touched:
            k = (_fill(adj, u), len(adj[u]))
            if k != key[u]:
                key[u] = k
                heapq.heappush(heap, (k[0], k[1], u))
    return order


def heuristic_decomposition(g: Graph) -> TreeDecomposition:
    return decomposition_from_order(g, min_fill_order(g))


# ---------------------------------------------------------------------------
# Lower bounds
# ---------------------------------------------------------------------------


def minor_min_width(g: Graph) -> int:
    """Contraction-degeneracy lower bound on treewidth (-1 for the empty graph)."""
    if not g.nodes:
        return -1
    adj = {v: set(nb) for v, nb in g.adjacency.items()}
    return _mmw_sets(adj)


def _mmw_sets(adj) -> int:
    lb = 0
    while len(adj) > 1:
        v = min(adj, key=lambda x: (len(adj[x]), x))
        nb = adj[v]
        lb = max(lb, len(nb))
        if not nb:
            del adj[v]
            continue
        u = min(nb, key=lambda x: (len(adj[x] & nb), len(adj[x]), x))
        # contract v into u
        del adj[v]
        for w in nb:
            adj[w].discard(v)
        for w in nb - {u}:
            adj[w].add(u)
            adj[u].add(w)
    return lb


# ---------------------------------------------------------------------------
# Exact treewidth
# ---------------------------------------------------------------------------


def _is_clique(adj, nodes) -> bool:
    nodes = list(nodes)
    for i, a in enumerate(nodes):
        na = adj[a]
        for b in nodes[i + 1:]:
            if b not in na:
                return False
    return True


def _eliminate_sets(adj, v):
    nb = adj.pop(v)
    for u in nb:
        adj[u].discard(v)
        adj[u] |= nb - {u}
    return nb


def _safe_reductions(adj, low: int):
    """Apply simplicial / almost-simplicial rules in place.

    Returns ``(order, width_so_far, low)``: the treewidth of the input equals
    ``max(width_so_far, tw(remaining))``.
    """
    order = []
    width = 0
    changed = True
    while changed and adj:
        changed = False
        for v in sorted(adj, key=lambda x: (len(adj[x]), x)):
            nb = adj[v]
            d = len(nb)
            if _is_clique(adj, nb):
                low = max(low, d)
            elif d <= low and any(_is_clique(adj, nb - {u}) for u in nb):
                pass
            else:
                continue
            width = max(width, d)
            order.append(v)
            _eliminate_sets(adj, v)
            changed = True
            break
    return order, width, low


def _bits(x):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def _mmw_bits(adj: dict) -> int:
    adj = dict(adj)
    lb = 0
    while len(adj) > 1:
        v = min(adj, key=lambda x: (bin(adj[x]).count("1"), x))
        nb = adj[v]
        d = bin(nb).count("1")
        lb = max(lb, d)
        vb = 1 << v
        del adj[v]
        if not nb:
            continue
        u = min(_bits(nb), key=lambda x: (bin(adj[x] & nb).count("1"), bin(adj[x]).count("1"), x))
        ub = 1 << u
        for w in _bits(nb):
            adj[w] &= ~vb
        rest = nb & ~ub
        for w in _bits(rest):
            adj[w] |= ub
        adj[u] |= rest
    return lb


def _eliminate_bits(adj: dict, v: int) -> dict:
    nb = adj[v]
    vb = 1 << v
    out = {}
    for u, a in adj.items():
        if u == v:
            continue
        if nb >> u & 1:
            a = (a | nb) & ~(1 << u) & ~vb
        out[u] = a
    return out


def _fill_bits(adj, v) -> int:
    nb = adj[v]
    missing = 0
    for a in _bits(nb):
        missing += bin(nb & ~adj[a] & ~(1 << a)).count("1")
    return missing // 2


def _branch_and_bound(adj: dict, lower: int, upper: int, upper_order: list):
    """Search elimination orders of a bitmask graph for width below ``upper``."""
    best = [upper, list(upper_order)]
    memo: dict = {}

    def rec(adj, g, order):
        if best[0] <= lower:
            return
        n = len(adj)
        if n == 0 or n - 1 <= g:
            if g < best[0]:
                best[0], best[1] = g, order + sorted(adj)
            return
        if max(g, _mmw_bits(adj)) >= best[0]:
            return
        key = frozenset(adj)
        if memo.get(key, n + 1) <= g:
            return
        memo[key] = g
        forced = None
        for v in adj:
            nb = adj[v]
            d = bin(nb).count("1")
            if _fill_bits(adj, v) == 0:
                forced = v
                break
            if d <= g:
                for u in _bits(nb):
                    rest = nb & ~(1 << u)
                    if all(rest & ~adj[w] & ~(1 << w) == 0 for w in _bits(rest)):
                        forced = v
                        break
                if forced is not None:
                    break
        if forced is not None:
            d = bin(adj[forced]).count("1")
            if max(g, d) < best[0]:
                rec(_eliminate_bits(adj, forced), max(g, d), order + [forced])
            return
        cands = sorted(adj, key=lambda x: (_fill_bits(adj, x), bin(adj[x]).count("1"), x))
        for v in cands:
            d = bin(adj[v]).count("1")
            if max(g, d) >= best[0]:
                continue
            rec(_eliminate_bits(adj, v), max(g, d), order + [v])
            if best[0] <= lower:
                return

    rec(adj, 0, [])
    return best[0], best[1]


def exact_treewidth(g: Graph, budget: Optional[int] = DEFAULT_EXACT_BUDGET):
    """Exact treewidth and an optimal decomposition.

    Safe reduction rules shrink the graph first; ``budget`` caps the number
    of nodes left for the branch-and-bound search (None for no cap).
    """
    if not g.nodes:
        return -1, TreeDecomposition((frozenset(),), ())
    adj = {v: set(nb) for v, nb in g.adjacency.items()}
    low = _mmw_sets({v: set(nb) for v, nb in adj.items()})
    red_order, red_width, low = _safe_reductions(adj, low)
    kernel = sorted(adj)
    if budget is not None and len(kernel) > budget:
        raise TreewidthBudgetExceeded(
            f"{len(kernel)} nodes remain after reductions, budget is {budget}")
    if kernel:
        kg = Graph(frozenset(kernel), frozenset(frozenset((a, b)) for a in adj for b in adj[a]))
        k_order = min_fill_order(kg)
        k_width = order_width(kg, k_order)
        idx = {v: k for k, v in enumerate(kernel)}
        bits = {idx[v]: sum(1 << idx[u] for u in adj[v]) for v in kernel}
        lower = max(low, red_width, _mmw_bits(bits))
        if max(red_width, k_width) > lower:
            width, border = _branch_and_bound(
                bits, lower, k_width, [idx[v] for v in k_order])
            if width < k_width:
                k_order = [kernel[k] for k in border]
                k_width = width
        total = max(red_width, k_width)
    else:
        k_order = []
        total = red_width
    td = decomposition_from_order(g, red_order + k_order)
    assert td.width == total, (td.width, total)
    return total, td


@dataclass(frozen=True)
class WidthVerdict:
    answer: str  # "yes", "no" or "unknown"
    bound: int
    lower: int
    upper: int
    decomposition: Optional[TreeDecomposition] = None

    def to_json(self) -> dict:
        out = {"answer": self.answer, "bound": self.bound, "lower": self.lower, "upper": self.upper}
        if self.decomposition is not None:
            out["decomposition"] = self.decomposition.to_json()
        return out


def check_width_at_most(g: Graph, k: int, budget: Optional[int] = DEFAULT_EXACT_BUDGET) -> WidthVerdict:
    """Certified answer to ``tw(g) <= k``; "unknown" when neither bound decides."""
    td = heuristic_decomposition(g)
    upper = td.width
    lower = minor_min_width(g)
    if upper <= k:
        return WidthVerdict("yes", k, lower, upper, td)
    if lower > k:
        return WidthVerdict("no", k, lower, upper)
    try:
        width, exact_td = exact_treewidth(g, budget)
    except TreewidthBudgetExceeded:
        return WidthVerdict("unknown", k, lower, upper)
    if width <= k:
        return WidthVerdict("yes", k, width, width, exact_td)
    return WidthVerdict("no", k, width, width)
