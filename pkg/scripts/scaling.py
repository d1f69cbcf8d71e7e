"""Wall-clock scaling of the end-to-end solver on generated families.

    python scripts/scaling.py --kind path-blocks --sizes 125 250 500 1001 2000
    python scripts/scaling.py --kind tree-backbone --block-size 3 --nbr-size 5 --sizes 20 40 83 160
"""

import argparse
import csv
import sys
import time

from boxpoly.generate import KINDS, GenSpec, generate
from boxpoly.pipeline import SolverOptions, solve


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--kind", choices=KINDS, default="path-blocks")
    ap.add_argument("--sizes", type=int, nargs="+", default=[125, 250, 500, 1001])
    ap.add_argument("--block-size", type=int, default=1)
    ap.add_argument("--nbr-size", type=int, default=2)
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["m", "n", "blocks", "table_entries", "reduced_width", "best_seconds", "value"])
    for m in args.sizes:
        spec = GenSpec(args.kind, m=m, block_size=args.block_size, nbr_size=args.nbr_size,
                       degree=args.degree, seed=args.seed)
        p = generate(spec)
        opts = SolverOptions(bounds=spec.bounds())
        best = float("inf")
        for _ in range(args.repeats):
            t = time.perf_counter()
            sol = solve(p, opts)
            best = min(best, time.perf_counter() - t)
        d = sol.diagnostics
        out.writerow([m, p.nvars, d["components"], d["table_entries"], d["reduced_width"],
                      f"{best:.4f}", float(sol.value)])


if __name__ == "__main__":
    main()
