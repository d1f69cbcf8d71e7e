"""End-to-end solver: hidden binaries, block tables, reduced binary problem.

The variables split into hidden binaries (``vminus``) and the rest
(``vplus``). Each connected component ``C`` of the interaction hypergraph
restricted to ``vplus`` becomes a block whose minimum over ``x_C`` is
tabulated for every 0/1 assignment of its neighbourhood ``N(C)``. The
tables are turned into multilinear polynomials and, together with the
terms living purely on ``vminus``, form a binary polynomial problem that is
solved by tree-decomposition DP. Block witnesses then fill in ``x_C``.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from .block_solver import (
    DEFAULT_NUMERIC_CAP,
    DEFAULT_QUADRATIC_CAP,
    DEFAULT_TABLE_CAP,
    BlockProblem,
    CapExceeded,
    build_psi_table,
)
from .bpo import BpoInstance, solve_treedp
from .hidden_binary import Partition, detect
from .poly import Polynomial, input_length, mobius_coefficients
from .structure import (
    connected_components,
    incidence_graph,
    induced_subhypergraph,
    interaction_graph,
    interaction_hypergraph,
    intersection_graph,
    neighborhood,
)
from .treewidth import DEFAULT_EXACT_BUDGET, WidthVerdict, check_width_at_most, heuristic_decomposition

log = logging.getLogger(__name__)

NUMERIC_REL_TOL = 1e-9


class DecompositionError(RuntimeError):
    """The monomial routing broke an invariant; indicates a bug, not bad input."""


class AssumptionFailure(Exception):
    def __init__(self, check: "AssumptionCheck"):
        super().__init__("; ".join(check.reasons) or "structural assumptions not met")
        self.check = check


class BlockFailure(Exception):
    def __init__(self, index: int, block: BlockProblem, cause: Exception):
        super().__init__(f"component {index} (variables {list(block.cont_vars)}): {cause}")
        self.index = index
        self.block = block
        self.cause = cause


def log2_ceil(n: int) -> int:
    return max(0, math.ceil(math.log2(n))) if n > 1 else 0


@dataclass(frozen=True)
class Bounds:
    tw_max: Optional[int] = None
    itw_max: Optional[int] = None
    block_max: Optional[int] = None
    nbr_max: Optional[int] = None

    def resolve(self, n: int, degree: int) -> "Bounds":
        """Fill unset bounds with the defaults for an instance of this size and degree."""
        log_n = log2_ceil(n) + 4
        return Bounds(
            tw_max=log_n if self.tw_max is None else self.tw_max,
            itw_max=log_n if self.itw_max is None else self.itw_max,
            block_max=(20 if degree <= 2 else 4) if self.block_max is None else self.block_max,
            nbr_max=log_n if self.nbr_max is None else self.nbr_max,
        )

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SolverOptions:
    bounds: Bounds = Bounds()
    tol: float = 1e-6
    force: bool = False
    exact_budget: int = DEFAULT_EXACT_BUDGET
    table_cap: int = DEFAULT_TABLE_CAP
    quadratic_cap: int = DEFAULT_QUADRATIC_CAP
    numeric_cap: int = DEFAULT_NUMERIC_CAP
    workers: Optional[int] = None


@dataclass(frozen=True)
class ComponentReport:
    components: tuple
    neighborhoods: tuple

    @property
    def block_size_max(self) -> int:
        return max((len(c) for c in self.components), default=0)

    @property
    def nbr_size_max(self) -> int:
        return max((len(n) for n in self.neighborhoods), default=0)

    def to_json(self) -> dict:
        return {
            "components": [
                {"vars": sorted(c), "neighborhood": sorted(nb)}
                for c, nb in zip(self.components, self.neighborhoods)
            ],
            "block_size_max": self.block_size_max,
            "nbr_size_max": self.nbr_size_max,
        }


@dataclass(frozen=True)
class Decomposition:
    f_minus: Polynomial
    blocks: tuple
    report: ComponentReport

    def identity_holds(self, p: Polynomial) -> bool:
        """True iff f_minus plus the block objectives adds back to ``p``, coefficient by coefficient."""
        total = dict(self.f_minus.terms)
        for b in self.blocks:
            for m, c in b.objective.terms.items():
                s = total.get(m, 0) + c
                if s:
                    total[m] = s
                else:
                    total.pop(m, None)
        return total == dict(p.terms)


def decompose(p: Polynomial, vminus, vplus) -> Decomposition:
    vminus, vplus = frozenset(vminus), frozenset(vplus)
    if vminus & vplus or vminus | vplus != frozenset(range(p.nvars)):
        raise ValueError("vminus and vplus must partition the variables")
    h = interaction_hypergraph(p)
    comps = connected_components(induced_subhypergraph(h, vplus))
    comp_of = {v: k for k, c in enumerate(comps) for v in c}
    minus_terms: dict = {}
    block_terms: list = [{} for _ in comps]
    for m, c in p.terms.items():
        hit = {comp_of[v] for v, _ in m if v in vplus}
        if not hit:
            minus_terms[m] = c
        elif len(hit) == 1:
            block_terms[hit.pop()][m] = c
        else:
            raise DecompositionError(f"monomial {m} meets components {sorted(hit)}")
    nbrs = tuple(neighborhood(h, c) for c in comps)
    for c, nb in zip(comps, nbrs):
        if nb & vplus:
            raise DecompositionError(f"neighbourhood of {sorted(c)} reaches other continuous variables")
    blocks = tuple(
        BlockProblem(Polynomial._raw(p.nvars, terms), tuple(sorted(c)), tuple(sorted(nb)))
        for c, nb, terms in zip(comps, nbrs, block_terms)
    )
    dec = Decomposition(Polynomial._raw(p.nvars, minus_terms), blocks, ComponentReport(tuple(comps), nbrs))
    if not dec.identity_holds(p):
        raise DecompositionError("f_minus plus block objectives does not reproduce the input")
    return dec


@dataclass(frozen=True)
class AssumptionCheck:
    bounds: Bounds
    width_kind: str          # "tw" of the interaction graph or "itw" (incidence graph)
    width_verdict: WidthVerdict
    block_size_max: int
    nbr_size_max: int
    passed: bool
    reasons: tuple = ()

    @property
    def width_bound(self) -> int:
        return self.width_verdict.bound

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "bounds": self.bounds.to_json(),
            "width_kind": self.width_kind,
            "width": self.width_verdict.to_json(),
            "block_size_max": self.block_size_max,
            "nbr_size_max": self.nbr_size_max,
            "reasons": list(self.reasons),
        }


@dataclass(frozen=True)
class Analysis:
    partition: Partition
    decomposition: Decomposition
    check: AssumptionCheck

    def to_json(self) -> dict:
        return {
            "partition": self.partition.to_json(),
            **self.decomposition.report.to_json(),
            "assumptions": self.check.to_json(),
        }


def analyze(p: Polynomial, bounds: Bounds = Bounds(), budget: int = DEFAULT_EXACT_BUDGET) -> Analysis:
    degree = p.degree()
    bounds = bounds.resolve(p.nvars, degree)
    partition = detect(p)
    dec = decompose(p, partition.vminus, partition.vplus)
    if degree <= 2:
        kind, k = "tw", bounds.tw_max
        verdict = check_width_at_most(interaction_graph(p), k, budget)
    else:
        kind, k = "itw", bounds.itw_max
        verdict = check_width_at_most(incidence_graph(interaction_hypergraph(p)), k, budget)
    rep = dec.report
    reasons = []
    if verdict.answer != "yes":
        reasons.append(f"{kind} <= {k} not established (verdict {verdict.answer}, "
                       f"lower {verdict.lower}, upper {verdict.upper})")
    if rep.block_size_max > bounds.block_max:
        big = max(rep.components, key=len)
        reasons.append(f"component {sorted(big)} has size {len(big)} > block_max {bounds.block_max}")
    if rep.nbr_size_max > bounds.nbr_max:
        reasons.append(f"neighbourhood size {rep.nbr_size_max} > nbr_max {bounds.nbr_max}")
    check = AssumptionCheck(bounds, kind, verdict, rep.block_size_max, rep.nbr_size_max,
                            not reasons, tuple(reasons))
    return Analysis(partition, dec, check)


def check_assumptions(p: Polynomial, bounds: Bounds = Bounds(), budget: int = DEFAULT_EXACT_BUDGET) -> AssumptionCheck:
    return analyze(p, bounds, budget).check


@dataclass(frozen=True)
class Solution:
    value: object
    point: tuple
    mode: str
    vminus: frozenset
    diagnostics: dict = field(default_factory=dict)
    tables: tuple = ()
    binary_assignment: dict = field(default_factory=dict)

    def to_json(self, emit_witness: bool = False) -> dict:
        out = {
            "value": self.value,
            "point": list(self.point),
            "mode": self.mode,
            "vminus": sorted(self.vminus),
            "diagnostics": self.diagnostics,
        }
        if emit_witness:
            out["witness"] = {
                "binary_assignment": {str(v): b for v, b in sorted(self.binary_assignment.items())},
                "tables": [t.to_json() for t in self.tables],
            }
        return out


def worker_count(requested: Optional[int] = None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("BOXPOLY_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer BOXPOLY_THREADS=%r", env)
    return 1


def _table_job(args):
    block, mode, tol, opts = args
    return build_psi_table(block, mode, tol, table_cap=opts.table_cap,
                           quadratic_cap=opts.quadratic_cap, numeric_cap=opts.numeric_cap)


def _build_tables(blocks, mode, tol, opts) -> list:
    jobs = [(b, mode, tol, opts) for b in blocks]
    workers = worker_count(opts.workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_table_job, job) for job in jobs]
            out = []
            for k, fut in enumerate(futures):
                try:
                    out.append(fut.result())
                except (CapExceeded, ValueError) as exc:
                    raise BlockFailure(k, blocks[k], exc) from exc
            return out
    out = []
    for k, job in enumerate(jobs):
        try:
            out.append(_table_job(job))
        except (CapExceeded, ValueError) as exc:
            raise BlockFailure(k, blocks[k], exc) from exc
    return out


def reduced_instance(dec: Decomposition, tables, vminus, exact: bool) -> BpoInstance:
    """``f_minus`` (made multilinear) plus the multilinear extension of every table."""
    costs: dict = {}

    def add(support, c):
        if not exact:
            c = float(c)
        s = costs.get(support, 0) + c
        costs[support] = s

    for m, c in dec.f_minus.multilinearize().terms.items():
        add(frozenset(v for v, _ in m), c)
    for table in tables:
        coeffs = mobius_coefficients(list(table.values))
        for mask, c in enumerate(coeffs):
            if c:
                add(frozenset(v for j, v in enumerate(table.bin_vars) if mask >> j & 1), c)
    zero = Fraction(0) if exact else 0.0
    const = costs.pop(frozenset(), zero)
    linear = {next(iter(s)): c for s, c in costs.items() if len(s) == 1}
    edges = {s: c for s, c in costs.items() if len(s) > 1}
    return BpoInstance(tuple(sorted(vminus)), edges, linear, const)


def solve(p: Polynomial, opts: SolverOptions = SolverOptions()) -> Solution:
    timings = {}
    t0 = time.perf_counter()
    analysis = analyze(p, opts.bounds, opts.exact_budget)
    timings["analyze"] = time.perf_counter() - t0
    check = analysis.check
    if not check.passed and not opts.force:
        raise AssumptionFailure(check)
    degree = p.degree()
    exact = degree <= 2
    mode = "exact" if exact else "numeric"
    dec = analysis.decomposition
    vminus = analysis.partition.vminus

    t = time.perf_counter()
    block_tol = opts.tol / max(1, len(dec.blocks))
    tables = _build_tables(dec.blocks, mode, block_tol, opts)
    timings["tables"] = time.perf_counter() - t

    t = time.perf_counter()
    inst = reduced_instance(dec, tables, vminus, exact)
    td = heuristic_decomposition(intersection_graph(inst.hypergraph))
    dp_value, z = solve_treedp(inst, td, check=False)
    timings["reduced_dp"] = time.perf_counter() - t

    point = [Fraction(0) if exact else 0.0] * p.nvars
    for v in vminus:
        point[v] = Fraction(z[v]) if exact else float(z[v])
    gap = 0.0
    for table in tables:
        wit = table.witness_at(z)
        for v, x in zip(table.cont_vars, wit):
            point[v] = x
        if table.gaps is not None:
            gap += max(table.gaps)
    if exact:
        value = p.evaluate(point)
        if value != dp_value:
            raise DecompositionError(f"reconstructed value {value} differs from reduced optimum {dp_value}")
    else:
        value = float(p.evaluate(point))
        if abs(value - dp_value) > 1e-7 * (1 + abs(value)):
            log.warning("reconstructed value %.17g differs from reduced optimum %.17g", value, dp_value)
    timings["total"] = time.perf_counter() - t0

    diagnostics = {
        "n": p.nvars,
        "degree": degree,
        "input_length": input_length(p),
        "vminus_size": len(vminus),
        "vplus_size": p.nvars - len(vminus),
        "components": len(dec.blocks),
        "block_size_max": check.block_size_max,
        "nbr_size_max": check.nbr_size_max,
        "table_entries": sum(1 << t.arity for t in tables),
        "reduced_width": td.width,
        "input_width": {"kind": check.width_kind, "lower": check.width_verdict.lower,
                        "upper": check.width_verdict.upper},
        "assumptions_passed": check.passed,
        "gap_bound": gap,
        "dp_value": dp_value,
        "timings": timings,
    }
    return Solution(value, tuple(point), mode, vminus, diagnostics, tuple(tables), dict(z))


def certify(sol: Solution, p: Polynomial) -> dict:
    """Re-evaluate the objective at the returned point and re-check feasibility."""
    if len(sol.point) != p.nvars:
        return {"ok": False, "reason": "point has the wrong dimension"}
    at_point = p.evaluate(list(sol.point))
    if sol.mode == "exact":
        value_ok = at_point == sol.value
    else:
        value_ok = abs(float(at_point) - float(sol.value)) <= NUMERIC_REL_TOL * (1 + abs(float(sol.value)))
    in_box = all(0 <= x <= 1 for x in sol.point)
    binary = all(sol.point[v] in (0, 1) for v in sol.vminus)
    return {
        "ok": bool(value_ok and in_box and binary),
        "value_at_point": at_point,
        "value_matches": bool(value_ok),
        "in_box": in_box,
        "vminus_binary": binary,
    }
