"""Exact sparse multivariate polynomials over the rationals.

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by variable,
with every exponent positive; the empty tuple is the constant monomial.
Coefficients are :class:`fractions.Fraction` and zero coefficients are never
stored, so two polynomials are equal iff their term maps are equal.
"""

from __future__ import annotations

import json
import re
from collections.abc import Mapping, Sequence
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import NamedTuple

import numpy as np

Monomial = tuple  # tuple[tuple[int, int], ...]

ONE: Monomial = ()

_RATIONAL_RE = re.compile(r"^\s*[+-]?\d+(\s*/\s*\d+)?\s*$")

DEFAULT_TABLE_ARITY_CAP = 24


class InstanceFormatError(ValueError):
    """Raised when an instance document cannot be turned into a polynomial."""


def make_monomial(exps) -> Monomial:
    """Canonical monomial from a ``{var: exp}`` mapping or ``(var, exp)`` pairs.

    Repeated variables have their exponents added; zero exponents vanish.
    """
    items = exps.items() if isinstance(exps, Mapping) else exps
    acc: dict[int, int] = {}
    for var, exp in items:
        if exp < 0:
            raise ValueError(f"negative exponent {exp} for variable {var}")
        if exp:
            acc[var] = acc.get(var, 0) + exp
    return tuple(sorted(acc.items()))


def monomial_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def monomial_support(m: Monomial) -> frozenset:
    return frozenset(v for v, _ in m)


def _mul_monomials(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for v, e in b:
        acc[v] = acc.get(v, 0) + e
    return tuple(sorted(acc.items()))


def grlex_key(m: Monomial):
    """Sort key for graded-lex order on dense exponent vectors."""
    return (monomial_degree(m), tuple((-v, e) for v, e in m))


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        if not _RATIONAL_RE.match(value):
            raise ValueError(f"not a rational literal: {value!r}")
        return Fraction(value.replace(" ", ""))
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables with rational coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms=None):
        if nvars < 0:
            raise ValueError("nvars must be nonnegative")
        clean: dict[Monomial, Fraction] = {}
        if terms:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for mono, coef in items:
                mono = make_monomial(mono) if not _is_canonical(mono) else mono
                for v, _ in mono:
                    if not 0 <= v < nvars:
                        raise ValueError(f"variable index {v} out of range for nvars={nvars}")
                c = clean.get(mono, 0) + to_fraction(coef)
                if c:
                    clean[mono] = c
                else:
                    clean.pop(mono, None)
        self.nvars = nvars
        self._terms = clean
        self._hash = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "Polynomial":
        # trusted path: terms already canonical with nonzero Fraction values
        p = cls.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c) -> "Polynomial":
        c = to_fraction(c)
        return cls._raw(nvars, {ONE: c} if c else {})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        if not 0 <= i < nvars:
            raise ValueError(f"variable index {i} out of range for nvars={nvars}")
        return cls._raw(nvars, {((i, 1),): Fraction(1)})

    @classmethod
    def variables(cls, nvars: int) -> list["Polynomial"]:
        return [cls.variable(nvars, i) for i in range(nvars)]

    # -- basic queries -----------------------------------------------------

    @property
    def terms(self) -> Mapping:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0 here."""
        return max((monomial_degree(m) for m in self._terms), default=0)

    def degree_in(self, i: int) -> int:
        return max((e for m in self._terms for v, e in m if v == i), default=0)

    def support(self) -> frozenset:
        return frozenset(v for m in self._terms for v, _ in m)

    def constant_term(self) -> Fraction:
        return self._terms.get(ONE, Fraction(0))

    def coefficient(self, mono) -> Fraction:
        return self._terms.get(make_monomial(mono), Fraction(0))

    def sorted_terms(self) -> list:
        return sorted(self._terms.items(), key=lambda t: grlex_key(t[0]))

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for m, c in other._terms.items():
            s = terms.get(m, 0) + c
            if s:
                terms[m] = s
            else:
                terms.pop(m, None)
        return Polynomial._raw(max(self.nvars, other.nvars), terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = to_fraction(other)
            if not c:
                return Polynomial.zero(self.nvars)
            return Polynomial._raw(self.nvars, {m: v * c for m, v in self._terms.items()})
        terms: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mul_monomials(m1, m2)
                s = terms.get(m, 0) + c1 * c2
                if s:
                    terms[m] = s
                else:
                    terms.pop(m, None)
        return Polynomial._raw(max(self.nvars, other.nvars), terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = Polynomial.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ({ONE: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"Polynomial({self.nvars}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            mono = "*".join(f"x{v}" if e == 1 else f"x{v}^{e}" for v, e in m)
            if not mono:
                parts.append(format_rational(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{format_rational(c)}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- evaluation and substitution --------------------------------------

    def evaluate(self, x: Sequence):
        """Value at ``x``; exact when every coordinate is rational, float otherwise."""
        if len(x) != self.nvars:
            raise ValueError(f"point has {len(x)} coordinates, polynomial has {self.nvars} variables")
        total = Fraction(0)
        for m, c in self._terms.items():
            t = c
            for v, e in m:
                t = t * x[v] ** e
            total = total + t
        return total

    def substitute(self, fixings: Mapping) -> "Polynomial":
        """Fix some variables to given values; nvars is unchanged."""
        if not fixings:
            return self
        vals = {}
        for v, val in fixings.items():
            if not 0 <= v < self.nvars:
                raise ValueError(f"cannot fix variable {v}: nvars={self.nvars}")
            q = to_fraction(val)
            if not 0 <= q <= 1:
                raise ValueError(f"fixed value {q} for variable {v} lies outside [0, 1]")
            vals[v] = q
        terms: dict = {}
        for m, c in self._terms.items():
            keep = []
            for v, e in m:
                if v in vals:
                    c = c * vals[v] ** e
                    if not c:
                        break
                else:
                    keep.append((v, e))
            if not c:
                continue
            key = tuple(keep)
            s = terms.get(key, 0) + c
            if s:
                terms[key] = s
            else:
                terms.pop(key, None)
        return Polynomial._raw(self.nvars, terms)

    def remap(self, mapping: Mapping, nvars: int) -> "Polynomial":
        """Rename variables through ``mapping`` into a space of ``nvars`` variables."""
        terms: dict = {}
        for m, c in self._terms.items():
            key = make_monomial((mapping[v], e) for v, e in m)
            s = terms.get(key, 0) + c
            if s:
                terms[key] = s
            else:
                terms.pop(key, None)
        for m in terms:
            for v, _ in m:
                if not 0 <= v < nvars:
                    raise ValueError(f"remapped index {v} out of range for nvars={nvars}")
        return Polynomial._raw(nvars, terms)

    def multilinearize(self) -> "Polynomial":
        """Replace every power ``x^k`` (k >= 1) by ``x``; agrees with self on {0,1}^n."""
        terms: dict = {}
        for m, c in self._terms.items():
            key = tuple((v, 1) for v, _ in m)
            s = terms.get(key, 0) + c
            if s:
                terms[key] = s
            else:
                terms.pop(key, None)
        return Polynomial._raw(self.nvars, terms)

    def is_multilinear(self) -> bool:
        return all(e == 1 for m in self._terms for _, e in m)


def _is_canonical(mono) -> bool:
    if not isinstance(mono, tuple):
        return False
    prev = -1
    for item in mono:
        if not (isinstance(item, tuple) and len(item) == 2):
            return False
        v, e = item
        if v <= prev or e <= 0:
            return False
        prev = v
    return True


# ---------------------------------------------------------------------------
# Free-function interface
# ---------------------------------------------------------------------------


def evaluate(p: Polynomial, x: Sequence):
    return p.evaluate(x)


def substitute(p: Polynomial, fixings: Mapping) -> Polynomial:
    return p.substitute(fixings)


def collect_in_variable(p: Polynomial, i: int) -> list[Polynomial]:
    """Coefficients ``a_0 .. a_d`` with ``p = sum_m a_m * x_i**m`` and no a_m mentioning x_i."""
    if not 0 <= i < p.nvars:
        raise ValueError(f"variable index {i} out of range for nvars={p.nvars}")
    buckets: dict[int, dict] = {}
    for m, c in p.terms.items():
        power = 0
        rest = []
        for v, e in m:
            if v == i:
                power = e
            else:
                rest.append((v, e))
        buckets.setdefault(power, {})[tuple(rest)] = c
    top = max(buckets, default=0)
    return [Polynomial._raw(p.nvars, buckets.get(k, {})) for k in range(top + 1)]


class ChordDeficit(NamedTuple):
    delta: Polynomial
    h: Polynomial
    divisible: bool


def chord_deficit(p: Polynomial, i: int) -> ChordDeficit:
    """Gap between ``p`` and its chord in ``x_i``, and its quotient by ``x_i (1 - x_i)``.

    ``delta = p - (1 - x_i) p|_{x_i=0} - x_i p|_{x_i=1}`` vanishes at both
    endpoints, so ``delta = x_i (1 - x_i) h`` exactly.
    """
    if not 0 <= i < p.nvars:
        raise ValueError(f"variable index {i} out of range for nvars={p.nvars}")
    xi = Polynomial.variable(p.nvars, i)
    delta = p - (1 - xi) * p.substitute({i: 0}) - xi * p.substitute({i: 1})
    b = collect_in_variable(delta, i)
    if not b[0].is_zero():
        raise ArithmeticError("chord deficit does not vanish at x_i = 0")
    # delta = x_i * R(x_i) with R(t) = sum_k b[k+1] t^k, and R(t) = (1 - t) H(t):
    # the coefficients of H are the prefix sums of those of R.
    r = b[1:]
    h_coeffs = []
    acc = Polynomial.zero(p.nvars)
    for rk in r[:-1]:
        acc = acc + rk
        h_coeffs.append(acc)
    remainder = acc + r[-1] if r else acc
    if not remainder.is_zero():
        raise ArithmeticError("chord deficit is not divisible by x_i (1 - x_i)")
    h = Polynomial.zero(p.nvars)
    for k, hk in enumerate(h_coeffs):
        h = h + hk * Polynomial._raw(p.nvars, {((i, k),) if k else ONE: Fraction(1)})
    return ChordDeficit(delta, h, True)


def _table_to_list(m: int, table) -> list:
    size = 1 << m
    if isinstance(table, Mapping):
        out = [None] * size
        for key, val in table.items():
            if isinstance(key, tuple):
                if len(key) != m or any(b not in (0, 1) for b in key):
                    raise ValueError(f"bad table key {key!r} for arity {m}")
                mask = sum(b << j for j, b in enumerate(key))
            else:
                mask = int(key)
                if not 0 <= mask < size:
                    raise ValueError(f"table mask {mask} out of range for arity {m}")
            out[mask] = val
    else:
        out = list(table)
        if len(out) != size:
            raise ValueError(f"table has {len(out)} entries, expected {size}")
    missing = [mask for mask, v in enumerate(out) if v is None]
    if missing:
        raise ValueError(f"table is missing {len(missing)} entries (first mask {missing[0]})")
    return out


def mobius_coefficients(values: Sequence) -> np.ndarray:
    """Subset Möbius transform of a table indexed by bitmask (bit j <-> z_j).

    Returns ``c`` with ``c[S] = sum_{T subset S} (-1)^{|S - T|} values[T]``,
    computed with the O(m 2^m) butterfly. Works for floats and Fractions.
    """
    size = len(values)
    m = size.bit_length() - 1
    if size != 1 << m:
        raise ValueError("table length must be a power of two")
    if all(isinstance(v, (float, np.floating)) for v in values):
        a = np.array(values, dtype=float)
    else:
        a = np.empty(size, dtype=object)
        a[:] = [to_fraction(v) for v in values]
    for j in range(m):
        view = a.reshape(-1, 2, 1 << j)
        view[:, 1, :] -= view[:, 0, :]
    return a


def multilinear_from_table(m: int, table, cap: int = DEFAULT_TABLE_ARITY_CAP) -> Polynomial:
    """The unique multilinear polynomial in ``m`` variables matching ``table`` on {0,1}^m.

    ``table`` is either a sequence indexed by bitmask (bit j of the index is
    z_j) or a mapping keyed by bit tuples or masks. Values must be rational.
    """
    if m > cap:
        raise ValueError(f"table arity {m} exceeds cap {cap}")
    values = _table_to_list(m, table)
    coeffs = mobius_coefficients([to_fraction(v) for v in values])
    terms = {}
    for mask in range(1 << m):
        c = coeffs[mask]
        if c:
            terms[tuple((j, 1) for j in range(m) if mask >> j & 1)] = c
    return Polynomial._raw(m, terms)


class QuadraticParts(NamedTuple):
    Q: list
    c: list
    c0: Fraction


def quadratic_parts(p: Polynomial) -> QuadraticParts:
    """Symmetric ``Q``, vector ``c`` and constant with ``p = x'Qx + c'x + c0``."""
    if p.degree() > 2:
        raise ValueError(f"quadratic_parts needs degree <= 2, got {p.degree()}")
    n = p.nvars
    Q = [[Fraction(0)] * n for _ in range(n)]
    c = [Fraction(0)] * n
    c0 = Fraction(0)
    for m, coef in p.terms.items():
        if not m:
            c0 = coef
        elif len(m) == 1:
            (v, e), = m
            if e == 1:
                c[v] = coef
            else:
                Q[v][v] = coef
        else:
            (i, _), (j, _) = m
            Q[i][j] = Q[j][i] = coef / 2
    return QuadraticParts(Q, c, c0)


# ---------------------------------------------------------------------------
# JSON instance format
# ---------------------------------------------------------------------------


def parse_instance(doc) -> Polynomial:
    """Build a polynomial from a decoded instance document (a dict)."""
    if not isinstance(doc, Mapping):
        raise InstanceFormatError("instance must be a JSON object")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise InstanceFormatError("field 'n' must be a nonnegative integer")
    raw_terms = doc.get("terms")
    if not isinstance(raw_terms, list):
        raise InstanceFormatError("field 'terms' must be a list")
    terms: dict = {}
    for pos, term in enumerate(raw_terms):
        if not isinstance(term, Mapping) or "coef" not in term:
            raise InstanceFormatError(f"term {pos}: expected an object with 'coef' and 'exps'")
        coef = term["coef"]
        if isinstance(coef, bool) or not isinstance(coef, (str, int)):
            raise InstanceFormatError(f"term {pos}: coefficient must be a rational string")
        try:
            c = to_fraction(coef)
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceFormatError(f"term {pos}: {exc}") from None
        exps = term.get("exps", [])
        if not isinstance(exps, list):
            raise InstanceFormatError(f"term {pos}: 'exps' must be a list of [var, exp] pairs")
        pairs = []
        for pair in exps:
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(t, int) and not isinstance(t, bool) for t in pair)):
                raise InstanceFormatError(f"term {pos}: bad exponent entry {pair!r}")
            var, exp = pair
            if not 0 <= var < n:
                raise InstanceFormatError(f"term {pos}: variable index {var} out of range for n={n}")
            if exp < 0:
                raise InstanceFormatError(f"term {pos}: negative exponent {exp}")
            pairs.append((var, exp))
        mono = make_monomial(pairs)
        s = terms.get(mono, 0) + c
        if s:
            terms[mono] = s
        else:
            terms.pop(mono, None)
    return Polynomial._raw(n, terms)


def parse(text: str) -> Polynomial:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"malformed JSON: {exc}") from None
    return parse_instance(doc)


def to_instance(p: Polynomial) -> dict:
    return {
        "n": p.nvars,
        "terms": [
            {"coef": format_rational(c), "exps": [[v, e] for v, e in m]}
            for m, c in p.sorted_terms()
        ],
    }


def serialize(p: Polynomial) -> str:
    return json.dumps(to_instance(p), separators=(",", ":"))


def input_length(p: Polynomial) -> int:
    """Bits needed to write down all coefficients and exponents."""
    bits = 0
    for m, c in p.terms.items():
        bits += c.numerator.bit_length() + 1 + c.denominator.bit_length()
        for v, e in m:
            bits += max(v.bit_length(), 1) + e.bit_length()
    return bits
