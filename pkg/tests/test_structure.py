from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxpoly.generate import GenSpec, generate
from boxpoly.poly import Polynomial, quadratic_parts
from boxpoly.structure import (
    AssumptionViolated,
    Graph,
    Hypergraph,
    connected_components,
    edge_node_offset,
    eliminate_component_graph,
    eliminate_component_hypergraph,
    incidence_graph,
    induced_subhypergraph,
    interaction_graph,
    interaction_hypergraph,
    intersection_graph,
    neighborhood,
)

from strategies import polynomials, quadratics


def alternating_path(m):
    # p_i at 2i, z_i at 2i+1
    return generate(GenSpec("path-blocks", m=m, seed=11))


@st.composite
def hypergraphs(draw, max_nodes=8, max_edges=10):
    n = draw(st.integers(1, max_nodes))
    edges = set()
    if n >= 2:
        for _ in range(draw(st.integers(0, max_edges))):
            e = draw(st.sets(st.integers(0, n - 1), min_size=2, max_size=min(n, 4)))
            edges.add(frozenset(e))
    return Hypergraph(frozenset(range(n)), frozenset(edges))


def test_graph_rejects_bad_edges():
    with pytest.raises(ValueError):
        Graph.from_edges([0, 1], [(0, 2)])
    with pytest.raises(ValueError):
        Graph(frozenset([0]), frozenset([frozenset([0])]))
    with pytest.raises(ValueError):
        Hypergraph(frozenset([0, 1]), frozenset([frozenset([0])]))


def test_interaction_graph_of_path_family_is_a_path():
    m = 6
    g = interaction_graph(alternating_path(m))
    assert len(g.nodes) == 2 * m - 1
    assert g.edges == {frozenset((i, i + 1)) for i in range(2 * m - 2)}


def test_interaction_graph_without_bilinear_terms():
    x = Polynomial.variables(3)
    g = interaction_graph(x[0] ** 2 - x[1] + x[2] ** 2)
    assert not g.edges and len(g.nodes) == 3


def test_interaction_graph_rejects_cubic():
    x = Polynomial.variables(2)
    with pytest.raises(ValueError):
        interaction_graph(x[0] ** 2 * x[1])


@settings(max_examples=50, deadline=None)
@given(quadratics(max_vars=6))
def test_interaction_graph_matches_offdiagonal(p):
    Q = quadratic_parts(p).Q
    expected = {frozenset((i, j)) for i in range(p.nvars) for j in range(i + 1, p.nvars) if Q[i][j]}
    assert interaction_graph(p).edges == expected
    assert interaction_graph(p) == intersection_graph(interaction_hypergraph(p))


def test_interaction_hypergraph_examples():
    x = Polynomial.variables(3)
    assert interaction_hypergraph(x[0] * x[1] * x[2] + x[0] ** 2).edges == {frozenset((0, 1, 2))}
    assert interaction_hypergraph(x[0] ** 2 * x[1] + x[0] * x[1] ** 3).edges == {frozenset((0, 1))}


@settings(max_examples=50, deadline=None)
@given(polynomials(max_vars=5))
def test_every_mixed_support_is_an_edge(p):
    h = interaction_hypergraph(p)
    for m in p.terms:
        if len(m) >= 2:
            assert frozenset(v for v, _ in m) in h.edges
    assert h.nodes == frozenset(range(p.nvars))


def test_intersection_graph_examples():
    h = Hypergraph(frozenset(range(3)), frozenset([frozenset((0, 1, 2))]))
    assert intersection_graph(h).edges == {frozenset(e) for e in combinations(range(3), 2)}
    g = Hypergraph(frozenset(range(4)), frozenset([frozenset((0, 1)), frozenset((2, 3))]))
    assert intersection_graph(g).edges == g.edges


@settings(max_examples=50, deadline=None)
@given(hypergraphs())
def test_intersection_graph_pairs(h):
    g = intersection_graph(h)
    for a, b in combinations(sorted(h.nodes), 2):
        assert g.has_edge(a, b) == any({a, b} <= e for e in h.edges)


def test_incidence_graph_examples():
    h = Hypergraph(frozenset([0, 1]), frozenset([frozenset((0, 1))]))
    g = incidence_graph(h)
    assert g.nodes == {0, 1, 2} and g.edges == {frozenset((0, 2)), frozenset((1, 2))}
    empty = Hypergraph(frozenset(range(3)))
    assert incidence_graph(empty).nodes == {0, 1, 2} and not incidence_graph(empty).edges


@settings(max_examples=50, deadline=None)
@given(hypergraphs())
def test_incidence_degrees(h):
    g = incidence_graph(h)
    offset = edge_node_offset(h)
    for k, e in enumerate(h.sorted_edges()):
        assert g.degree(offset + k) == len(e)
    for v in h.nodes:
        assert g.degree(v) == sum(v in e for e in h.edges)


def test_induced_subhypergraph_examples():
    h = Hypergraph(frozenset(range(3)), frozenset([frozenset((0, 1, 2))]))
    assert induced_subhypergraph(h, {0, 1}).edges == {frozenset((0, 1))}
    h2 = Hypergraph(frozenset(range(4)), frozenset([frozenset((0, 1))]))
    assert not induced_subhypergraph(h2, {2, 3}).edges


@settings(max_examples=50, deadline=None)
@given(hypergraphs(), st.data())
def test_induced_subhypergraph_definition(h, data):
    c = data.draw(st.sets(st.sampled_from(sorted(h.nodes))))
    sub = induced_subhypergraph(h, c)
    assert sub.edges == {e & c for e in h.edges if len(e & c) >= 2}


def test_components_examples():
    h = interaction_hypergraph(alternating_path(4))
    assert connected_components(h) == [frozenset(range(7))]
    assert connected_components(Hypergraph(frozenset(range(3)))) == [frozenset([i]) for i in range(3)]


def _bfs_components(g: Graph):
    seen, out = set(), []
    for s in sorted(g.nodes):
        if s in seen:
            continue
        comp, stack = {s}, [s]
        while stack:
            u = stack.pop()
            for w in g.neighbors(u):
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        out.append(frozenset(comp))
    return out


@settings(max_examples=80, deadline=None)
@given(hypergraphs())
def test_components_match_intersection_graph(h):
    assert sorted(connected_components(h), key=min) == sorted(_bfs_components(intersection_graph(h)), key=min)


def test_neighborhood_examples():
    p = alternating_path(5)
    g = interaction_graph(p)
    # interior continuous node p_2 sits at index 4 between z_1 = 3 and z_2 = 5
    assert neighborhood(g, {4}) == {3, 5}
    assert neighborhood(g, g.nodes) == frozenset()


@settings(max_examples=50, deadline=None)
@given(hypergraphs(), st.data())
def test_neighborhood_definition(h, data):
    c = data.draw(st.sets(st.sampled_from(sorted(h.nodes))))
    expected = {u for u in h.nodes - c if any(u in e and e & c for e in h.edges)}
    assert neighborhood(h, c) == expected


def test_eliminate_graph_path_family():
    g = interaction_graph(alternating_path(5))
    for p_node in range(0, 9, 2):
        g = eliminate_component_graph(g, {p_node})
    assert g.nodes == {1, 3, 5, 7}
    assert g.edges == {frozenset((1, 3)), frozenset((3, 5)), frozenset((5, 7))}


def test_eliminate_graph_isolated_component():
    g = Graph.from_edges(range(4), [(0, 1), (2, 3)])
    out = eliminate_component_graph(g, {2, 3})
    assert out.nodes == {0, 1} and out.edges == {frozenset((0, 1))}


def test_eliminate_graph_requires_connected_set():
    g = Graph.from_edges(range(3), [(0, 1)])
    with pytest.raises(AssumptionViolated):
        eliminate_component_graph(g, {0, 2})


def test_eliminate_hypergraph_examples():
    h = Hypergraph(frozenset(range(3)), frozenset([frozenset((0, 1)), frozenset((1, 2))]))
    out = eliminate_component_hypergraph(h, {1})
    assert out.nodes == {0, 2} and out.edges == {frozenset((0, 2))}
    h2 = Hypergraph(frozenset(range(4)), frozenset([frozenset((0, 1))]))
    out2 = eliminate_component_hypergraph(h2, {3})
    assert out2.nodes == {0, 1, 2} and out2.edges == h2.edges


def test_eliminate_hypergraph_cap():
    h = Hypergraph(frozenset(range(6)), frozenset([frozenset(range(6))]))
    with pytest.raises(AssumptionViolated, match="cap"):
        eliminate_component_hypergraph(h, {0}, cap=3)


def test_eliminate_hypergraph_keeps_shrunk_edges():
    h = Hypergraph(frozenset(range(5)), frozenset([frozenset((0, 1, 2, 3)), frozenset((3, 4))]))
    out = eliminate_component_hypergraph(h, {0})
    assert frozenset((1, 2, 3)) in out.edges and frozenset((3, 4)) in out.edges
    assert {frozenset(s) for s in [(1, 2), (1, 3), (2, 3)]} <= out.edges


@settings(max_examples=60, deadline=None)
@given(hypergraphs(max_nodes=7, max_edges=8), st.data())
def test_component_elimination_order_independent(h, data):
    s = data.draw(st.sets(st.sampled_from(sorted(h.nodes))))
    comps = connected_components(induced_subhypergraph(h, s))
    nbrs = {c: neighborhood(h, c) for c in comps}
    results = []
    for order in (comps, list(reversed(comps))):
        cur = h
        for c in order:
            assert neighborhood(cur, c) == nbrs[c]
            cur = eliminate_component_hypergraph(cur, c)
        results.append(cur)
    assert results[0] == results[1]


def test_json_shapes():
    h = Hypergraph(frozenset(range(3)), frozenset([frozenset((2, 0))]))
    assert h.to_json() == {"nodes": [0, 1, 2], "edges": [[0, 2]]}
    g = Graph.from_edges(range(3), [(2, 1)])
    assert g.to_json() == {"nodes": [0, 1, 2], "edges": [[1, 2]]}
