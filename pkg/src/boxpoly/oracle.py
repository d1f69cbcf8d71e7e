"""Whole-instance reference solvers, independent of the decomposition pipeline.

Quadratics: face enumeration over the full box (exact, n <= 12 by default).
Higher degree: a dense grid followed by bounded L-BFGS-B polish from the
best grid points. The reported ``gap_bound`` is the worst-case grid excess
``L * h * sqrt(n) / 2`` with ``L = sum |c| |alpha|``; polishing only lowers
the value, so the true minimum lies in ``[value - gap_bound, value]``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .block_solver import solve_quadratic_box
from .poly import Polynomial

QUADRATIC_ORACLE_CAP = 12
GRID_ORACLE_CAP = 9


class OracleResult(NamedTuple):
    value: object
    point: tuple
    gap_bound: float
    method: str


def _arrays(p: Polynomial):
    items = list(p.terms.items())
    coefs = np.array([float(c) for _, c in items], dtype=float)
    E = np.zeros((len(items), p.nvars), dtype=np.int64)
    for t, (m, _) in enumerate(items):
        for v, e in m:
            E[t, v] = e
    return coefs, E


def _values(coefs, E, X):
    X = np.atleast_2d(X)
    out = np.zeros(X.shape[0])
    for c, row in zip(coefs, E):
        term = np.full(X.shape[0], c)
        for v in np.nonzero(row)[0]:
            term = term * X[:, v] ** row[v]
        out += term
    return out


def _gradient(coefs, E, x):
    g = np.zeros(E.shape[1])
    for c, row in zip(coefs, E):
        for v in np.nonzero(row)[0]:
            d = row.copy()
            d[v] -= 1
            g[v] += c * row[v] * np.prod(x ** d)
    return g


def grid_oracle(p: Polynomial, max_points: int = 300_000, polish: int = 16) -> OracleResult:
    from scipy.optimize import minimize

    n = p.nvars
    if n > GRID_ORACLE_CAP:
        raise ValueError(f"grid oracle limited to {GRID_ORACLE_CAP} variables, got {n}")
    coefs, E = _arrays(p)
    if n == 0:
        return OracleResult(float(p.constant_term()), (), 0.0, "grid")
    per_axis = max(2, int(math.floor(max_points ** (1.0 / n))))
    axis = np.linspace(0.0, 1.0, per_axis)
    total = per_axis ** n
    best_vals = np.empty(0)
    best_pts = np.empty((0, n))
    chunk = 50_000
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        digits = np.stack([(idx // per_axis ** (n - 1 - j)) % per_axis for j in range(n)], axis=1)
        X = axis[digits]
        vals = _values(coefs, E, X)
        keep = np.argsort(vals, kind="stable")[:polish]
        best_vals = np.concatenate([best_vals, vals[keep]])
        best_pts = np.vstack([best_pts, X[keep]])
        order = np.argsort(best_vals, kind="stable")[:polish]
        best_vals, best_pts = best_vals[order], best_pts[order]
    value, point = float(best_vals[0]), best_pts[0]
    fun = lambda x: float(_values(coefs, E, x)[0])
    jac = lambda x: _gradient(coefs, E, x)
    for x0 in best_pts:
        res = minimize(fun, x0, jac=jac, method="L-BFGS-B", bounds=[(0.0, 1.0)] * n,
                       options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 500})
        x = np.clip(res.x, 0.0, 1.0)
        v = fun(x)
        if v < value:
            value, point = v, x
    lipschitz = float(sum(abs(c) * row.sum() for c, row in zip(coefs, E)))
    h = 1.0 / (per_axis - 1)
    gap = lipschitz * h * math.sqrt(n) / 2.0
    return OracleResult(value, tuple(float(v) for v in point), gap, "grid")


def quadratic_oracle(p: Polynomial, cap: int = QUADRATIC_ORACLE_CAP) -> OracleResult:
    if p.nvars > cap:
        raise ValueError(f"exact oracle limited to {cap} variables, got {p.nvars}")
    value, point = solve_quadratic_box(p, cap=max(cap, p.nvars))
    return OracleResult(value, point, 0.0, "faces")


def oracle(p: Polynomial, **kwargs) -> OracleResult:
    if p.degree() <= 2:
        return quadratic_oracle(p)
    return grid_oracle(p, **kwargs)
