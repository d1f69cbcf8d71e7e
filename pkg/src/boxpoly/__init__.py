"""Box-constrained polynomial minimization via hidden binaries and tree decompositions."""

from .pipeline import Bounds, Solution, SolverOptions, analyze, certify, check_assumptions, decompose, solve
from .poly import Polynomial, parse, serialize

__all__ = [
    "Bounds",
    "Polynomial",
    "Solution",
    "SolverOptions",
    "analyze",
    "certify",
    "check_assumptions",
    "decompose",
    "parse",
    "serialize",
    "solve",
]
