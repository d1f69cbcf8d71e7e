import itertools
import random
from fractions import Fraction as F

import pytest

from boxpoly.bpo import BpoInstance, charge_terms, solve_brute, solve_heuristic, solve_treedp
from boxpoly.generate import GenSpec, generate
from boxpoly.structure import intersection_graph
from boxpoly.treewidth import TreeDecomposition, exact_treewidth, heuristic_decomposition


def random_banded(rng, n, band=6, float_costs=False):
    """Random instance whose edges live inside windows of ``band + 1`` consecutive nodes."""
    perm = list(range(n))
    rng.shuffle(perm)
    cost = (lambda: rng.uniform(-5, 5)) if float_costs else (lambda: F(rng.randint(-6, 6), rng.randint(1, 3)))
    edges = {}
    if n >= 2:
        for _ in range(rng.randint(0, 2 * n)):
            start = rng.randint(0, max(0, n - 2))
            window = perm[start:start + band + 1]
            if len(window) < 2:
                continue
            e = frozenset(rng.sample(window, rng.randint(2, min(4, len(window)))))
            edges[e] = cost()
    linear = {v: cost() for v in range(n) if rng.random() < 0.8}
    return BpoInstance(tuple(range(n)), edges, linear, cost())


def brute_by_enumeration(inst):
    best = None
    for bits in itertools.product((0, 1), repeat=len(inst.nodes)):
        a = dict(zip(inst.nodes, bits))
        v = inst.objective(a)
        if best is None or v < best[0]:
            best = (v, a)
    return best


def test_single_edge():
    inst = BpoInstance((0, 1), {frozenset((0, 1)): F(-1)})
    assert solve_brute(inst) == (F(-1), {0: 1, 1: 1})


def test_nonnegative_costs_give_zero():
    inst = BpoInstance((0, 1, 2), {frozenset((0, 2)): F(2)}, {1: F(1, 2)})
    assert solve_brute(inst) == (F(0), {0: 0, 1: 0, 2: 0})


def test_brute_lexicographic_ties():
    inst = BpoInstance((0, 1, 2), {}, {0: F(-1), 1: F(0), 2: F(-1)})
    value, bits = solve_brute(inst)
    assert value == -2 and bits == {0: 1, 1: 0, 2: 1}


def test_brute_cap():
    with pytest.raises(ValueError):
        solve_brute(BpoInstance(tuple(range(23))))


def test_brute_matches_enumeration():
    rng = random.Random(1)
    for _ in range(60):
        inst = random_banded(rng, rng.randint(0, 8))
        assert solve_brute(inst) == brute_by_enumeration(inst)


def test_separable():
    costs = {0: F(3), 1: F(-2), 2: F(-1, 3), 3: F(0)}
    inst = BpoInstance((0, 1, 2, 3), {}, costs)
    td = heuristic_decomposition(intersection_graph(inst.hypergraph))
    value, _ = solve_treedp(inst, td)
    assert value == sum(min(c, 0) for c in costs.values())


def test_path_family_reduced_problem():
    # z-nodes of the alternating path with unit rewards between neighbours
    for m in range(2, 7):
        p = generate(GenSpec("path-blocks", m=m, seed=m))
        inst = BpoInstance.from_polynomial(p)
        g = intersection_graph(inst.hypergraph)
        width, td = exact_treewidth(g)
        assert width == 1
        assert solve_treedp(inst, td)[0] == solve_brute(inst)[0]


def test_treedp_matches_brute_random():
    rng = random.Random(2)
    for _ in range(150):
        inst = random_banded(rng, rng.randint(1, 14), band=rng.randint(1, 5))
        value, a, td = solve_heuristic(inst)
        assert value == solve_brute(inst)[0]
        assert inst.objective(a) == value


def test_treedp_float_mode():
    rng = random.Random(3)
    for _ in range(50):
        inst = random_banded(rng, rng.randint(1, 12), float_costs=True)
        value, a, _ = solve_heuristic(inst)
        ref, _ = solve_brute(inst)
        assert abs(value - ref) <= 1e-9 * (1 + abs(ref))
        assert abs(inst.objective(a) - value) <= 1e-9 * (1 + abs(value))


def test_treedp_rejects_bad_decomposition():
    inst = BpoInstance((0, 1, 2), {frozenset((0, 1, 2)): F(-1)})
    td = TreeDecomposition((frozenset((0, 1)), frozenset((1, 2))), ((0, 1),))
    with pytest.raises(ValueError, match="invalid tree decomposition"):
        solve_treedp(inst, td)


def test_charging_partition():
    rng = random.Random(4)
    for _ in range(40):
        inst = random_banded(rng, rng.randint(1, 10))
        value, a, td = solve_heuristic(inst)
        charged = charge_terms(inst, td)
        seen = [t for terms in charged.values() for t in terms]
        assert sorted(seen, key=repr) == sorted(inst.terms(), key=repr)
        for i, terms in charged.items():
            for supp, _ in terms:
                assert set(supp) <= td.bags[i]
                assert all(not set(supp) <= td.bags[j] for j in range(i))
        rebuilt = inst.constant + sum((c for terms in charged.values() for supp, c in terms
                                       if all(a[v] for v in supp)), F(0))
        assert rebuilt == value


def test_from_polynomial_multilinearizes():
    from boxpoly.poly import Polynomial
    z = Polynomial.variables(2)
    inst = BpoInstance.from_polynomial(-z[0] ** 2 + 3 * z[0] * z[1] ** 2 + 2)
    assert inst.node_costs == {0: -1}
    assert inst.edge_costs == {frozenset((0, 1)): 3}
    assert inst.constant == 2


def test_json_round_trip():
    rng = random.Random(5)
    inst = random_banded(rng, 7)
    assert BpoInstance.from_json(inst.to_json()) == inst
    finst = random_banded(rng, 5, float_costs=True)
    assert BpoInstance.from_json(finst.to_json()) == finst
