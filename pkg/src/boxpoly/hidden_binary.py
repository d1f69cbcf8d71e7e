"""Detect variables that may be fixed to 0 or 1 without losing optimality.

For quadratics a variable is hidden-binary when its diagonal coefficient is
nonpositive (the objective is concave along that coordinate). For general
degree two sufficient tests are tried per variable: the coefficient
polynomials of ``x_i^m`` for ``m >= 2`` have only nonpositive coefficients,
or the chord deficit quotient has only nonnegative coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .poly import Polynomial, chord_deficit, collect_in_variable, format_rational, make_monomial

QUADRATIC_DIAG = "quadratic_diag"
CONCAVE_COEFFS = "concave_coeffs"
CHORD_DOMINANCE = "chord_dominance"


@dataclass(frozen=True)
class BinaryCertificate:
    variable: int
    rule: str
    witness: Any

    def to_json(self) -> dict:
        w = self.witness
        if isinstance(w, Fraction):
            w = format_rational(w)
        elif isinstance(w, Polynomial):
            w = str(w)
        elif isinstance(w, list):
            w = [str(a) for a in w]
        return {"variable": self.variable, "rule": self.rule, "witness": w}


@dataclass(frozen=True)
class Partition:
    vminus: frozenset
    vplus: frozenset
    certificates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "vminus": sorted(self.vminus),
            "vplus": sorted(self.vplus),
            "certificates": [self.certificates[v].to_json() for v in sorted(self.certificates)],
        }


def detect_quadratic(p: Polynomial) -> Partition:
    """Split by the sign of the diagonal coefficient of each variable."""
    if p.degree() > 2:
        raise ValueError(f"detect_quadratic needs degree <= 2, got {p.degree()}")
    diag = {m[0][0]: c for m, c in p.terms.items() if len(m) == 1 and m[0][1] == 2}
    certs = {}
    plus = set()
    for i in range(p.nvars):
        q = diag.get(i, Fraction(0))
        if q > 0:
            plus.add(i)
        else:
            certs[i] = BinaryCertificate(i, QUADRATIC_DIAG, q)
    return Partition(frozenset(certs), frozenset(plus), certs)


def concave_coeffs_holds(coeffs: list) -> bool:
    return all(c <= 0 for a in coeffs[2:] for c in a.terms.values())


def chord_dominance_holds(h: Polynomial) -> bool:
    return all(c >= 0 for c in h.terms.values())


def detect_general(p: Polynomial) -> Partition:
    certs = {}
    plus = set()
    for i in range(p.nvars):
        coeffs = collect_in_variable(p, i)
        if concave_coeffs_holds(coeffs):
            certs[i] = BinaryCertificate(i, CONCAVE_COEFFS, coeffs[2:])
            continue
        h = chord_deficit(p, i).h
        if chord_dominance_holds(h):
            certs[i] = BinaryCertificate(i, CHORD_DOMINANCE, h)
        else:
            plus.add(i)
    return Partition(frozenset(certs), frozenset(plus), certs)


def detect(p: Polynomial) -> Partition:
    return detect_quadratic(p) if p.degree() <= 2 else detect_general(p)


def recheck_certificate(p: Polynomial, cert: BinaryCertificate) -> bool:
    """Re-derive the witness from ``p`` and re-run its sign test."""
    i = cert.variable
    if cert.rule == QUADRATIC_DIAG:
        q = p.coefficient(make_monomial({i: 2}))
        return q == cert.witness and q <= 0
    if cert.rule == CONCAVE_COEFFS:
        coeffs = collect_in_variable(p, i)
        return coeffs[2:] == list(cert.witness) and concave_coeffs_holds(coeffs)
    if cert.rule == CHORD_DOMINANCE:
        h = chord_deficit(p, i).h
        return h == cert.witness and chord_dominance_holds(h)
    return False
