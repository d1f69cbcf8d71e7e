import json
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxpoly.poly import (
    InstanceFormatError,
    Polynomial,
    chord_deficit,
    collect_in_variable,
    evaluate,
    mobius_coefficients,
    multilinear_from_table,
    parse,
    quadratic_parts,
    serialize,
    substitute,
)

from oracles import evaluate_multilinear_on_cube
from strategies import points, polynomials, quadratics, rationals

X = Polynomial.variables(2)
x0, x1 = X
CUBIC = -x0 ** 3 + (1 - x1) * x0 ** 2 + x0 * x1          # -x0^3 + (1 - x1) x0^2 + x0 x1
FACTORED = x0 * (1 - x0) * (x0 + x1)


def test_cubic_and_factored_form_agree():
    assert CUBIC == FACTORED


def test_parse_example():
    doc = ('{"n":2,"terms":[{"coef":"-1","exps":[[0,3]]},{"coef":"1","exps":[[0,2]]},'
           '{"coef":"-1","exps":[[0,2],[1,1]]},{"coef":"1","exps":[[0,1],[1,1]]}]}')
    assert parse(doc) == CUBIC


def test_parse_empty_terms():
    p = parse('{"n":1,"terms":[]}')
    assert p.is_zero() and p.nvars == 1


def test_parse_merges_duplicates_and_drops_zeros():
    p = parse('{"n":2,"terms":[{"coef":"1/2","exps":[[0,1]]},{"coef":"1/2","exps":[[0,1]]},'
              '{"coef":"3","exps":[[1,2]]},{"coef":"-3","exps":[[1,2]]},{"coef":"0","exps":[]}]}')
    assert p == x0


@pytest.mark.parametrize("doc, fragment", [
    ('{"n":2,"terms":[', "malformed JSON"),
    ('{"n":2,"terms":[{"coef":"1","exps":[[2,1]]}]}', "term 0"),
    ('{"n":2,"terms":[{"coef":"1","exps":[]},{"coef":"x","exps":[[0,1]]}]}', "term 1"),
    ('{"n":2,"terms":[{"coef":"1","exps":[[0,-1]]}]}', "negative exponent"),
    ('{"n":2,"terms":[{"coef":1.5,"exps":[[0,1]]}]}', "term 0"),
    ('[1,2]', "JSON object"),
])
def test_parse_errors(doc, fragment):
    with pytest.raises(InstanceFormatError, match=fragment):
        parse(doc)


def test_serialize_is_grlex_sorted_and_stable():
    text = serialize(CUBIC)
    exps = [t["exps"] for t in json.loads(text)["terms"]]
    degrees = [sum(e for _, e in mono) for mono in exps]
    assert degrees == sorted(degrees)
    assert serialize(parse(text)) == text


@settings(max_examples=50, deadline=None)
@given(polynomials(max_vars=5))
def test_round_trip(p):
    assert parse(serialize(p)) == p


@pytest.mark.parametrize("point", [(F(0), F(7, 10)), (F(1), F(1, 3))])
def test_evaluate_vanishes_at_endpoints(point):
    assert evaluate(FACTORED, point) == 0


def test_evaluate_zero_polynomial():
    assert Polynomial.zero(3).evaluate([F(1, 2)] * 3) == 0


def test_evaluate_dimension_mismatch():
    with pytest.raises(ValueError):
        CUBIC.evaluate([F(0)])


def test_evaluate_float_mode():
    v = CUBIC.evaluate([0.5, 0.25])
    assert isinstance(v, float)
    assert v == pytest.approx(float(CUBIC.evaluate([F(1, 2), F(1, 4)])))


def test_substitute_examples():
    assert substitute(CUBIC, {0: 0}).is_zero()
    assert substitute(CUBIC, {}) == CUBIC
    with pytest.raises(ValueError):
        substitute(CUBIC, {5: 0})
    with pytest.raises(ValueError):
        substitute(CUBIC, {0: 2})


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_substitute_then_evaluate(data):
    p = data.draw(polynomials())
    pt = data.draw(points(p.nvars))
    fixed = data.draw(st.sets(st.integers(0, p.nvars - 1)))
    q = substitute(p, {v: pt[v] for v in fixed})
    assert not any(v in fixed for v in q.support())
    assert q.evaluate(pt) == p.evaluate(pt)


def test_collect_example():
    a = collect_in_variable(CUBIC, 0)
    assert a == [Polynomial.zero(2), x1, 1 - x1, Polynomial.constant(2, -1)]


def test_collect_constant():
    c = Polynomial.constant(3, F(5, 2))
    for i in range(3):
        assert collect_in_variable(c, i) == [c]


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_collect_reconstructs(data):
    p = data.draw(polynomials())
    i = data.draw(st.integers(0, p.nvars - 1))
    coeffs = collect_in_variable(p, i)
    xi = Polynomial.variable(p.nvars, i)
    total = Polynomial.zero(p.nvars)
    for m, a in enumerate(coeffs):
        assert i not in a.support()
        total = total + a * xi ** m
    assert total == p


def test_chord_deficit_example():
    d = chord_deficit(FACTORED, 0)
    assert d.delta == FACTORED
    assert d.h == x0 + x1
    assert d.divisible


def test_chord_deficit_multilinear_variable():
    p = x0 * x1 * 3 - x1 + 2
    d = chord_deficit(p, 0)
    assert d.delta.is_zero() and d.h.is_zero()


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_chord_deficit_exact(data):
    p = data.draw(polynomials(max_exp=4))
    i = data.draw(st.integers(0, p.nvars - 1))
    d = chord_deficit(p, i)
    xi = Polynomial.variable(p.nvars, i)
    assert xi * (1 - xi) * d.h == d.delta
    assert d.delta == p - (1 - xi) * p.substitute({i: 0}) - xi * p.substitute({i: 1})


def test_multilinear_from_table_examples():
    a, b = F(3, 7), F(-2)
    z = Polynomial.variable(1, 0)
    assert multilinear_from_table(1, [a, b]) == a + (b - a) * z
    z0, z1 = Polynomial.variables(2)
    assert multilinear_from_table(2, {(0, 0): 0, (1, 0): 0, (0, 1): 0, (1, 1): 1}) == z0 * z1


def test_multilinear_from_table_errors():
    with pytest.raises(ValueError, match="missing"):
        multilinear_from_table(2, {(0, 0): 1, (1, 1): 2})
    with pytest.raises(ValueError, match="cap"):
        multilinear_from_table(3, [0] * 8, cap=2)


def test_multilinear_m4_exhaustive():
    rng = random.Random(4)
    table = [F(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(16)]
    p = multilinear_from_table(4, table)
    assert p.is_multilinear()
    for mask in range(16):
        z = [F(mask >> j & 1) for j in range(4)]
        assert p.evaluate(z) == table[mask]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 8).flatmap(lambda m: st.tuples(st.just(m), st.lists(rationals, min_size=1 << m, max_size=1 << m))))
def test_multilinear_interpolates(args):
    m, table = args
    p = multilinear_from_table(m, table)
    assert evaluate_multilinear_on_cube(p, m) == table


def test_mobius_float_and_exact_agree():
    vals = [F(1), F(-2, 3), F(5), F(1, 7)]
    exact = mobius_coefficients(vals)
    approx = mobius_coefficients([float(v) for v in vals])
    assert [float(a) for a in exact] == pytest.approx(list(approx))


def test_quadratic_parts_examples():
    Q, c, c0 = quadratic_parts(x0 ** 2 - x0)
    assert Q[0][0] == 1 and c[0] == -1 and c0 == 0
    Q, _, _ = quadratic_parts(3 * x0 * x1)
    assert Q[0][1] == Q[1][0] == F(3, 2)
    with pytest.raises(ValueError):
        quadratic_parts(x0 ** 3)


@settings(max_examples=50, deadline=None)
@given(quadratics(max_vars=4))
def test_quadratic_parts_reconstruct(p):
    Q, c, c0 = quadratic_parts(p)
    xs = Polynomial.variables(p.nvars)
    total = Polynomial.constant(p.nvars, c0)
    for i in range(p.nvars):
        total = total + c[i] * xs[i]
        for j in range(p.nvars):
            total = total + Q[i][j] * xs[i] * xs[j]
            assert Q[i][j] == Q[j][i]
    assert total == p


@settings(max_examples=100, deadline=None)
@given(polynomials(max_vars=4))
def test_canonical_form(p):
    for q in (p, p * p, p - p, p.substitute({0: F(1, 2)}), p.multilinearize()):
        for mono, coef in q.terms.items():
            assert coef != 0
            assert all(e > 0 for _, e in mono)
            assert all(0 <= v < q.nvars for v, _ in mono)
            assert coef.denominator > 0
