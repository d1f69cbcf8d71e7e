"""Command-line interface. JSON goes to stdout, logs to stderr.

Exit codes: 0 success, 1 input or system error, 2 structural assumptions not met.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time

from . import jsonio
from .block_solver import CapExceeded
from .generate import KINDS, GenSpec, generate
from .oracle import grid_oracle, oracle
from .pipeline import AssumptionFailure, BlockFailure, Bounds, SolverOptions, analyze, certify, solve
from .poly import InstanceFormatError, parse, serialize

log = logging.getLogger("boxpoly")

EXIT_OK, EXIT_ERROR, EXIT_ASSUMPTION = 0, 1, 2


def _emit(obj, stream=None):
    (stream or sys.stdout).write(jsonio.dumps(obj) + "\n")


def _load(path: str):
    if path == "-":
        return parse(sys.stdin.read())
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def _bounds(args) -> Bounds:
    return Bounds(tw_max=args.tw_max, itw_max=args.itw_max, block_max=args.block_max, nbr_max=args.nbr_max)


def _strip_timings(diag: dict) -> dict:
    return {k: v for k, v in diag.items() if k != "timings"}


def cmd_analyze(args) -> int:
    p = _load(args.path)
    result = analyze(p, _bounds(args), args.budget)
    doc = {"n": p.nvars, "degree": p.degree(), **result.to_json()}
    _emit(doc)
    return EXIT_OK if result.check.passed else EXIT_ASSUMPTION


def cmd_solve(args) -> int:
    p = _load(args.path)
    opts = SolverOptions(bounds=_bounds(args), tol=args.tol, force=args.force, exact_budget=args.budget)
    try:
        sol = solve(p, opts)
    except AssumptionFailure as exc:
        _emit({"error": "assumptions not met", "assumptions": exc.check.to_json()})
        return EXIT_ASSUMPTION
    doc = sol.to_json(emit_witness=args.emit_witness)
    if not args.timings:
        doc["diagnostics"] = _strip_timings(doc["diagnostics"])
    doc["certificate"] = certify(sol, p)
    _emit(doc)
    return EXIT_OK


def cmd_oracle(args) -> int:
    p = _load(args.path)
    if p.degree() <= 2 and not args.grid:
        res = oracle(p)
    else:
        res = grid_oracle(p, max_points=args.points, polish=0 if args.no_polish else 16)
    _emit({"value": res.value, "point": list(res.point), "gap_bound": res.gap_bound, "method": res.method})
    return EXIT_OK


def _spec(args) -> GenSpec:
    return GenSpec(kind=args.kind, m=args.m, block_size=args.block_size, nbr_size=args.nbr_size,
                   degree=args.degree, seed=args.seed, coef_range=args.coef_range)


def cmd_gen(args) -> int:
    spec = _spec(args)
    p = generate(spec)
    text = serialize(p)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        _emit({"out": args.out, "n": p.nvars, "terms": len(p.terms), "bounds": spec.bounds().to_json()})
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


BENCH_SUITES = {
    "smoke": [("path-blocks", m, 1, 2) for m in (8, 16, 32)] + [("tree-backbone", m, 2, 4) for m in (4, 8, 16)],
    "path-blocks": [("path-blocks", m, 1, 2) for m in (125, 250, 500, 1001, 2000)],
    "tree-backbone": [("tree-backbone", m, 3, s) for s in (3, 5) for m in (20, 40, 83, 160)],
}
BENCH_COLUMNS = ["kind", "m", "block_size", "nbr_size", "n", "reduced_width", "nbr_size_max",
                 "table_entries", "seconds", "value"]


def cmd_bench(args) -> int:
    rows = []
    for kind, m, b, s in BENCH_SUITES[args.suite]:
        spec = GenSpec(kind=kind, m=m, block_size=b, nbr_size=s, seed=args.seed)
        p = generate(spec)
        t = time.perf_counter()
        sol = solve(p, SolverOptions(bounds=spec.bounds(), tol=args.tol))
        elapsed = time.perf_counter() - t
        d = sol.diagnostics
        rows.append({"kind": kind, "m": m, "block_size": b, "nbr_size": s, "n": p.nvars,
                     "reduced_width": d["reduced_width"], "nbr_size_max": d["nbr_size_max"],
                     "table_entries": d["table_entries"], "seconds": f"{elapsed:.4f}",
                     "value": jsonio.dumps(sol.value).strip('"')})
        log.info("%s m=%d n=%d %.3fs", kind, m, p.nvars, elapsed)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        _emit({"out": args.out, "rows": len(rows), "columns": BENCH_COLUMNS})
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxpoly", description="Box-constrained polynomial minimization.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def bounds_flags(sp):
        sp.add_argument("--tw-max", type=int, default=None)
        sp.add_argument("--itw-max", type=int, default=None)
        sp.add_argument("--nbr-max", type=int, default=None)
        sp.add_argument("--block-max", type=int, default=None)
        sp.add_argument("--budget", type=int, default=14, help="max kernel size for exact treewidth")

    sp = sub.add_parser("analyze", help="partition, components and width certificates")
    sp.add_argument("path")
    bounds_flags(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("solve", help="solve an instance end to end")
    sp.add_argument("path")
    bounds_flags(sp)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--force", action="store_true", help="solve even if assumptions fail")
    sp.add_argument("--emit-witness", action="store_true", help="include block tables and binary assignment")
    sp.add_argument("--timings", action="store_true", help="include wall-clock timings (not deterministic)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="whole-instance reference value")
    sp.add_argument("path")
    sp.add_argument("--grid", action="store_true", help="use the grid oracle even for quadratics")
    sp.add_argument("--points", type=int, default=300_000)
    sp.add_argument("--no-polish", action="store_true")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("gen", help="generate a seeded instance")
    sp.add_argument("--kind", choices=KINDS, default="path-blocks")
    sp.add_argument("--m", type=int, default=3)
    sp.add_argument("--block-size", type=int, default=1)
    sp.add_argument("--nbr-size", type=int, default=2)
    sp.add_argument("--degree", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--coef-range", type=int, default=5)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="scaling table over generated families")
    sp.add_argument("--suite", choices=sorted(BENCH_SUITES), default="smoke")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InstanceFormatError, OSError, ValueError, CapExceeded, BlockFailure) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
