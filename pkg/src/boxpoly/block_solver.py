"""Minimize a polynomial over a small box, and tabulate block minima.

Quadratics are solved exactly by walking the faces of the box. A face whose
free coordinates ``J`` carry a Hessian block ``Q_JJ`` that is not positive
semidefinite cannot hold a minimizer in its relative interior, and neither
can any face with more free coordinates, so those subtrees are skipped.
Candidates are screened in floating point and the survivors near the
minimum are recomputed over the rationals, so the reported value and point
are exact.

Higher-degree blocks go through a numeric solver: a grid and projected
gradient polish give the incumbent, and a box-refinement search with
second-order Taylor lower bounds certifies it to a requested tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import NamedTuple, Optional

import numpy as np

from .poly import Polynomial, format_rational, quadratic_parts

log = logging.getLogger(__name__)

DEFAULT_QUADRATIC_CAP = 20
DEFAULT_NUMERIC_CAP = 6
DEFAULT_TABLE_CAP = 1 << 20

# float screening window, relative to the scale of the objective
_SCREEN_MARGIN = 1e-7
_FEAS_SLACK = 1e-9


class CapExceeded(ValueError):
    pass


# ---------------------------------------------------------------------------
# Exact rational linear algebra
# ---------------------------------------------------------------------------


def is_psd(A) -> bool:
    """Exact positive-semidefiniteness test by symmetric elimination."""
    A = [list(row) for row in A]
    n = len(A)
    for i in range(n):
        d = A[i][i]
        if d < 0:
            return False
        if d == 0:
            if any(A[i][j] for j in range(i + 1, n)):
                return False
            continue
        for j in range(i + 1, n):
            f = A[j][i] / d
            if f:
                for col in range(i + 1, n):
                    A[j][col] -= f * A[i][col]
    return True


def row_reduce(A):
    """Gauss-Jordan: returns ``(T, pivots)`` with ``T @ A`` in reduced row echelon form."""
    n = len(A)
    A = [list(row) for row in A]
    T = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    r = 0
    pivots = []
    for col in range(len(A[0]) if A else 0):
        p = next((i for i in range(r, n) if A[i][col]), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        T[r], T[p] = T[p], T[r]
        inv = 1 / A[r][col]
        A[r] = [a * inv for a in A[r]]
        T[r] = [t * inv for t in T[r]]
        for i in range(n):
            if i != r and A[i][col]:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
                T[i] = [a - f * b for a, b in zip(T[i], T[r])]
        pivots.append(col)
        r += 1
    return T, pivots


@dataclass
class _Face:
    free: tuple          # J
    fixed: tuple         # K
    T: list              # row transform of 2 Q_JJ
    pivots: list
    T_float: np.ndarray
    Q_JK: list
    Q_KK: list


class QuadraticBoxSolver:
    """Exact minimizer of ``x'Qx + c'x + c0`` over [0,1]^k for a fixed ``Q``.

    Precomputes the admissible faces once so that many linear terms can be
    handled in one batch (one per neighbourhood assignment of a block).
    """

    def __init__(self, Q, cap: int = DEFAULT_QUADRATIC_CAP):
        k = len(Q)
        if k > cap:
            raise CapExceeded(f"quadratic block with {k} variables exceeds cap {cap}")
        self.k = k
        self.Q = [[Fraction(a) for a in row] for row in Q]
        self.Qf = np.array([[float(a) for a in row] for row in self.Q], dtype=float).reshape(k, k)
        self.faces: list[_Face] = []
        self._enumerate_faces()

    def _enumerate_faces(self):
        Q, k = self.Q, self.k
        stack = [()]
        while stack:
            J = stack.pop()
            if J:
                QJJ = [[Q[a][b] for b in J] for a in J]
                if not is_psd(QJJ):
                    continue
                T, piv = row_reduce([[2 * v for v in row] for row in QJJ])
            else:
                T, piv = [], []
            K = tuple(i for i in range(k) if i not in J)
            self.faces.append(_Face(
                free=J,
                fixed=K,
                T=T,
                pivots=piv,
                T_float=np.array([[float(t) for t in row] for row in T], dtype=float).reshape(len(J), len(J)),
                Q_JK=[[Q[a][b] for b in K] for a in J],
                Q_KK=[[Q[a][b] for b in K] for a in K],
            ))
            start = J[-1] + 1 if J else 0
            for i in range(k - 1, start - 1, -1):
                stack.append(J + (i,))
        self.faces.sort(key=lambda f: (len(f.free), f.free))

    # -- exact evaluation of one candidate --------------------------------

    def _value(self, x, c, c0) -> Fraction:
        Q = self.Q
        total = c0
        for i, xi in enumerate(x):
            if not xi:
                continue
            row = Q[i]
            s = c[i] + row[i] * xi
            for j in range(i + 1, self.k):
                if x[j] and row[j]:
                    s += 2 * row[j] * x[j]
            total += xi * s
        return total

    def _exact_candidate(self, face: _Face, mask: int, c, c0):
        J, K = face.free, face.fixed
        xK = [(mask >> j) & 1 for j in range(len(K))]
        x = [Fraction(0)] * self.k
        for j, v in enumerate(K):
            x[v] = Fraction(xK[j])
        if J:
            b = []
            for a, row in zip(J, face.Q_JK):
                s = c[a]
                for q, bit in zip(row, xK):
                    if bit and q:
                        s += 2 * q
                b.append(-s)
            t = [sum((tij * bj for tij, bj in zip(trow, b) if tij), Fraction(0)) for trow in face.T]
            r = len(face.pivots)
            if any(t[r:]):
                return None
            y = [Fraction(0)] * len(J)
            for i, col in enumerate(face.pivots):
                y[col] = t[i]
            if not all(0 < yi < 1 for yi in y):
                return None
            for a, yi in zip(J, y):
                x[a] = yi
        code = [0] * self.k
        for j, v in enumerate(K):
            code[v] = xK[j]
        for a in J:
            code[a] = 2
        return self._value(x, c, c0), tuple(code), tuple(x)

    # -- batched screening --------------------------------------------------

    def minimize_batch(self, linear_terms, constants):
        """Minimize for every ``(c, c0)`` pair; returns ``(value, point, face_code)`` per pair."""
        Z = len(linear_terms)
        if Z == 0:
            return []
        cs = [[Fraction(v) for v in c] for c in linear_terms]
        c0s = [Fraction(v) for v in constants]
        if self.k == 0:
            return [(c0, (), ()) for c0 in c0s]
        Cf = np.array([[float(v) for v in c] for c in cs], dtype=float)
        c0f = np.array([float(v) for v in c0s], dtype=float)
        qscale = float(np.abs(self.Qf).sum())
        scale = 1.0 + qscale + np.abs(Cf).sum(axis=1) + np.abs(c0f)
        margin = _SCREEN_MARGIN * scale

        # per face: float values, shape (Z, 2^|K|), +inf where infeasible
        face_vals = []
        best = np.full(Z, np.inf)
        for face in self.faces:
            vals = self._screen_face(face, Cf, c0f)
            face_vals.append(vals)
            best = np.minimum(best, vals.min(axis=1))

        results = []
        for z in range(Z):
            results.append(self._verify(z, face_vals, best[z], margin[z], cs[z], c0s[z]))
        return results

    def _screen_face(self, face: _Face, Cf, c0f):
        J, K = list(face.free), list(face.fixed)
        nK = len(K)
        M = 1 << nK
        masks = np.arange(M)
        XK = ((masks[:, None] >> np.arange(nK)[None, :]) & 1).astype(float)  # (M, |K|)
        QKK = self.Qf[np.ix_(K, K)]
        quadK = np.einsum("mi,ij,mj->m", XK, QKK, XK)                    # (M,)
        base = quadK[None, :] + Cf[:, K] @ XK.T + c0f[:, None]            # (Z, M)
        if not J:
            return base
        QJK = self.Qf[np.ix_(J, K)]
        rJ = Cf[:, J][:, None, :] + 2.0 * (XK @ QJK.T)[None, :, :]       # (Z, M, |J|)
        t = -rJ @ face.T_float.T
        rank = len(face.pivots)
        scale = 1.0 + np.abs(rJ).sum(axis=2)
        ok = np.ones(t.shape[:2], dtype=bool)
        if rank < len(J):
            ok &= (np.abs(t[..., rank:]) <= 1e-9 * scale[..., None]).all(axis=2)
        y = np.zeros_like(t)
        if rank:
            y[..., face.pivots] = t[..., :rank]
        ok &= ((y > -_FEAS_SLACK) & (y < 1 + _FEAS_SLACK)).all(axis=2)
        vals = base + 0.5 * np.einsum("zmj,zmj->zm", rJ, y)
        return np.where(ok, vals, np.inf)

    def _verify(self, z, face_vals, best, margin, c, c0):
        checked = set()
        winner = None
        threshold = best + margin
        while True:
            fresh = []
            for fi, vals in enumerate(face_vals):
                row = vals[z]
                for m in np.nonzero(row <= threshold)[0]:
                    if (fi, int(m)) not in checked:
                        fresh.append((row[m], fi, int(m)))
            fresh.sort()
            for _, fi, m in fresh:
                checked.add((fi, m))
                cand = self._exact_candidate(self.faces[fi], m, c, c0)
                if cand is not None and (winner is None or cand[:2] < winner[:2]):
                    winner = cand
            if winner is not None:
                new_threshold = float(winner[0]) + margin
                if new_threshold <= threshold:
                    return winner
                threshold = new_threshold
            else:
                # everything in the window was spurious; widen to the next candidate
                remaining = [vals[z][np.isfinite(vals[z]) & (vals[z] > threshold)] for vals in face_vals]
                nxt = min((r.min() for r in remaining if r.size), default=None)
                if nxt is None:
                    raise ArithmeticError("no feasible face candidate survived exact verification")
                threshold = nxt + margin

    def minimize(self, c, c0=0):
        return self.minimize_batch([c], [c0])[0]


def solve_quadratic_box(q: Polynomial, cap: int = DEFAULT_QUADRATIC_CAP):
    """Exact global minimum of a quadratic over [0,1]^nvars: ``(value, argmin)``."""
    if q.degree() > 2:
        raise ValueError(f"solve_quadratic_box needs degree <= 2, got {q.degree()}")
    if q.nvars > cap:
        raise CapExceeded(f"{q.nvars} variables exceeds cap {cap}")
    Q, c, c0 = quadratic_parts(q)
    value, _, point = QuadraticBoxSolver(Q, cap).minimize(c, c0)
    return value, point


# ---------------------------------------------------------------------------
# Numeric solver for higher degree
# ---------------------------------------------------------------------------


class CompiledPolynomial:
    """Vectorised evaluation of a polynomial and its gradient on point batches."""

    def __init__(self, p: Polynomial):
        self.k = p.nvars
        items = list(p.terms.items())
        self.coefs = np.array([float(c) for _, c in items], dtype=float)
        E = np.zeros((len(items), self.k), dtype=np.int64)
        for t, (m, _) in enumerate(items):
            for v, e in m:
                E[t, v] = e
        self.exps = E
        self._grad = []
        for j in range(self.k):
            cj = self.coefs * E[:, j]
            Ej = E.copy()
            Ej[:, j] = np.maximum(Ej[:, j] - 1, 0)
            keep = cj != 0
            self._grad.append((cj[keep], Ej[keep]))
        absc = np.abs(self.coefs)
        # Lipschitz bound for the gradient-norm estimate: sum |c| |alpha|
        self.lipschitz = float((absc * E.sum(axis=1)).sum())
        # entrywise Hessian bound on [0,1]^k
        H = np.zeros((self.k, self.k))
        for i in range(self.k):
            for j in range(self.k):
                factor = E[:, i] * (E[:, j] - (1 if i == j else 0))
                H[i, j] = float((absc * np.maximum(factor, 0)).sum())
        self.hessian_bound = H

    @staticmethod
    def _eval(coefs, E, X):
        if coefs.size == 0:
            return np.zeros(X.shape[0])
        P = np.ones((X.shape[0], coefs.size))
        for j in range(E.shape[1]):
            col = E[:, j]
            if col.any():
                P *= X[:, j:j + 1] ** col[None, :]
        return P @ coefs

    def values(self, X) -> np.ndarray:
        return self._eval(self.coefs, self.exps, np.atleast_2d(X))

    def gradients(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.stack([self._eval(c, E, X) for c, E in self._grad], axis=1) if self.k else np.zeros((X.shape[0], 0))


def _grid_points(k: int, intervals: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, intervals + 1)
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_minimum(q: Polynomial, intervals: int):
    """Best value on the uniform grid with ``intervals`` steps per axis."""
    cp = CompiledPolynomial(q)
    if q.nvars == 0:
        return float(q.constant_term()), ()
    X = _grid_points(q.nvars, intervals)
    vals = cp.values(X)
    i = int(np.argmin(vals))
    return float(vals[i]), tuple(X[i])


def grid_gap_bound(q: Polynomial, intervals: int) -> float:
    """Worst-case excess of the grid minimum: L * h * sqrt(k) / 2."""
    cp = CompiledPolynomial(q)
    return cp.lipschitz * (1.0 / intervals) * math.sqrt(q.nvars) / 2.0


def projected_gradient_polish(cp: CompiledPolynomial, X0, iterations: int = 200, armijo: float = 1e-4):
    """Batched projected gradient with backtracking (step halves from 1.0)."""
    X = np.clip(np.array(X0, dtype=float), 0.0, 1.0)
    f = cp.values(X)
    active = np.ones(X.shape[0], dtype=bool)
    for _ in range(iterations):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        Xa, fa = X[idx], f[idx]
        g = cp.gradients(Xa)
        step = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        newX, newf = Xa.copy(), fa.copy()
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(60):
            if not pending.any():
                break
            p = np.nonzero(pending)[0]
            cand = np.clip(Xa[p] - step[p, None] * g[p], 0.0, 1.0)
            fc = cp.values(cand)
            decrease = (g[p] * (cand - Xa[p])).sum(axis=1)
            ok = (fc <= fa[p] + armijo * decrease) & (decrease < 0)
            good = p[ok]
            newX[good], newf[good] = cand[ok], fc[ok]
            accepted[good] = True
            pending[good] = False
            step[p[~ok]] *= 0.5
        moved = accepted & (np.abs(newX - Xa).max(axis=1) > 1e-15)
        X[idx], f[idx] = newX, newf
        active[idx[~moved]] = False
    return X, f


class NumericResult(NamedTuple):
    value: float
    argmin: tuple
    gap_bound: float


def solve_poly_box_numeric(q: Polynomial, tol: float = 1e-6, cap: int = DEFAULT_NUMERIC_CAP,
                           grid_budget: int = 4096, max_boxes: int = 400_000) -> NumericResult:
    """Approximate minimum of ``q`` over [0,1]^k with a certified gap.

    ``value`` is attained at ``argmin``; ``gap_bound`` bounds ``value - min``
    and is at most ``tol`` unless the refinement hit ``max_boxes``.
    """
    k = q.nvars
    if k > cap:
        raise CapExceeded(f"{k} variables exceeds numeric cap {cap}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if k == 0:
        return NumericResult(float(q.constant_term()), (), 0.0)
    used = sorted(q.support())
    if not used:
        return NumericResult(float(q.constant_term()), (0.0,) * k, 0.0)
    local = q.remap({v: i for i, v in enumerate(used)}, len(used))
    cp = CompiledPolynomial(local)
    d = len(used)

    intervals = max(1, int(round(grid_budget ** (1.0 / d))) - 1)
    X = _grid_points(d, intervals)
    vals = cp.values(X)
    order = np.argsort(vals, kind="stable")[:8]
    corners = np.array(list(product((0.0, 1.0), repeat=d)))
    starts = np.vstack([X[order], corners])
    PX, Pf = projected_gradient_polish(cp, starts)
    b = int(np.argmin(Pf))
    inc_x, inc_f = PX[b].copy(), float(Pf[b])
    if vals[order[0]] < inc_f:
        inc_x, inc_f = X[order[0]].copy(), float(vals[order[0]])

    # certify: refine grid cells until every cell's lower bound clears inc - tol
    h = 1.0 / intervals
    cells = _grid_points(d, intervals - 1) * h if intervals > 1 else np.zeros((1, d))
    lo, hi = cells, np.minimum(cells + h, 1.0)
    Hb = cp.hessian_bound
    min_pruned_lb = np.inf
    processed = 0
    while lo.shape[0]:
        processed += lo.shape[0]
        c = 0.5 * (lo + hi)
        r = 0.5 * (hi - lo)
        fc = cp.values(c)
        j = int(np.argmin(fc))
        if fc[j] < inc_f:
            inc_f, inc_x = float(fc[j]), c[j].copy()
        g = cp.gradients(c)
        contrib = np.abs(g) * r + 0.5 * r * (r @ Hb.T)
        lb = fc - contrib.sum(axis=1) - 1e-12 * (1.0 + np.abs(fc))
        keep = lb < inc_f - tol
        if (~keep).any():
            min_pruned_lb = min(min_pruned_lb, float(lb[~keep].min()))
        if processed > max_boxes:
            min_pruned_lb = min(min_pruned_lb, float(lb[keep].min()))
            log.warning("numeric block solver stopped after %d boxes; gap %.3g exceeds tol %.3g",
                        processed, inc_f - min_pruned_lb, tol)
            break
        lo, hi, contrib = lo[keep], hi[keep], contrib[keep]
        split = np.argmax(contrib, axis=1)
        rows = np.arange(lo.shape[0])
        mid = 0.5 * (lo[rows, split] + hi[rows, split])
        hi_left = hi.copy()
        hi_left[rows, split] = mid
        lo_right = lo.copy()
        lo_right[rows, split] = mid
        lo = np.vstack([lo, lo_right])
        hi = np.vstack([hi_left, hi])

    PX, Pf = projected_gradient_polish(cp, inc_x[None, :])
    if Pf[0] < inc_f:
        inc_x, inc_f = PX[0], float(Pf[0])
    point = [0.0] * k
    for i, v in enumerate(used):
        point[v] = float(inc_x[i])
    value = float(q.evaluate(point))
    gap = max(0.0, value - min_pruned_lb) if np.isfinite(min_pruned_lb) else 0.0
    return NumericResult(value, tuple(point), gap)


# ---------------------------------------------------------------------------
# Block tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockProblem:
    objective: Polynomial
    cont_vars: tuple
    bin_vars: tuple

    def __post_init__(self):
        C, N = set(self.cont_vars), set(self.bin_vars)
        if C & N:
            raise ValueError("continuous and binary variables overlap")
        for m in self.objective.terms:
            supp = {v for v, _ in m}
            if not supp <= C | N:
                raise ValueError(f"monomial on {sorted(supp)} leaves the block's variables")
            if not supp & C:
                raise ValueError(f"monomial on {sorted(supp)} does not touch the block")


@dataclass(frozen=True)
class PsiTable:
    cont_vars: tuple
    bin_vars: tuple
    mode: str
    values: tuple       # indexed by mask, bit j <-> bin_vars[j]
    witnesses: tuple
    gaps: Optional[tuple] = None

    @property
    def arity(self) -> int:
        return len(self.bin_vars)

    def value_at(self, assignment) -> object:
        mask = sum(int(assignment[v]) << j for j, v in enumerate(self.bin_vars))
        return self.values[mask]

    def witness_at(self, assignment) -> tuple:
        mask = sum(int(assignment[v]) << j for j, v in enumerate(self.bin_vars))
        return self.witnesses[mask]

    def to_json(self) -> dict:
        def num(v):
            return format_rational(v) if isinstance(v, Fraction) else float(v)
        entries = []
        for mask, (val, wit) in enumerate(zip(self.values, self.witnesses)):
            z = "".join(str(mask >> j & 1) for j in range(self.arity))
            entry = {"z": z, "value": num(val), "witness": [num(w) for w in wit]}
            if self.gaps is not None:
                entry["gap_bound"] = float(self.gaps[mask])
            entries.append(entry)
        return {
            "arity": self.arity,
            "cont_vars": list(self.cont_vars),
            "bin_vars": list(self.bin_vars),
            "mode": self.mode,
            "entries": entries,
        }


def build_psi_table(bp: BlockProblem, mode: str = "exact", tol: float = 1e-6,
                    table_cap: int = DEFAULT_TABLE_CAP,
                    quadratic_cap: int = DEFAULT_QUADRATIC_CAP,
                    numeric_cap: int = DEFAULT_NUMERIC_CAP) -> PsiTable:
    """Minimum of the block objective over its continuous part, per binary neighbourhood."""
    C, N = list(bp.cont_vars), list(bp.bin_vars)
    size = 1 << len(N)
    if size > table_cap:
        raise CapExceeded(f"table with {size} entries exceeds cap {table_cap}")
    nc = len(C)
    local_index = {v: i for i, v in enumerate(C + N)}
    local = bp.objective.remap(local_index, nc + len(N))

    if mode == "exact":
        if local.degree() > 2:
            raise ValueError("exact block tables need a quadratic objective")
        if nc > quadratic_cap:
            raise CapExceeded(f"block of {nc} variables exceeds cap {quadratic_cap}")
        Q, c, c0 = quadratic_parts(local)
        QCC = [row[:nc] for row in Q[:nc]]
        linear, const = [], []
        for mask in range(size):
            z = [(mask >> j) & 1 for j in range(len(N))]
            lin = []
            for i in range(nc):
                s = c[i]
                for j, bit in enumerate(z):
                    if bit:
                        s += 2 * Q[i][nc + j]
                lin.append(s)
            k0 = c0
            for j, bit in enumerate(z):
                if bit:
                    k0 += c[nc + j]
                    for l, bit2 in enumerate(z):
                        if bit2:
                            k0 += Q[nc + j][nc + l]
            linear.append(lin)
            const.append(k0)
        solved = QuadraticBoxSolver(QCC, quadratic_cap).minimize_batch(linear, const)
        values = tuple(v for v, _, _ in solved)
        witnesses = tuple(x for _, _, x in solved)
        return PsiTable(tuple(C), tuple(N), "exact", values, witnesses)

    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    if nc > numeric_cap:
        raise CapExceeded(f"block of {nc} variables exceeds numeric cap {numeric_cap}")
    values, witnesses, gaps = [], [], []
    for mask in range(size):
        fix = {nc + j: (mask >> j) & 1 for j in range(len(N))}
        sub = local.substitute(fix).remap({i: i for i in range(nc)}, nc)
        res = solve_poly_box_numeric(sub, tol=tol, cap=numeric_cap)
        values.append(res.value)
        witnesses.append(res.argmin)
        gaps.append(res.gap_bound)
    return PsiTable(tuple(C), tuple(N), "numeric", tuple(values), tuple(witnesses), tuple(gaps))
