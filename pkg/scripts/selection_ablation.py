"""Compare survivor selection on saliency against selection on raw fitness.

Both variants keep the rest of the algorithm unchanged (attention-space
clustering, archive, redistribution). Prints one row per function with
the mean global peak ratio, success rate and mean convergence generation,
and optionally writes the rows as CSV.

    python3 scripts/selection_ablation.py --function F1 --function F2 --seed-count 10
"""

import argparse
import csv
import sys

from abso.benchmarks import FUNCTION_IDS, make_function, registered_optima
from abso.engine import EngineConfig, run
from abso.metrics import aggregate, convergence_generation, peak_ratio

VARIANTS = ("saliency", "fitness")


def sweep(fid, selection, seeds):
    f = make_function(fid)
    reg = registered_optima(fid)
    cfg = EngineConfig(selection=selection)
    records = []
    for seed in seeds:
        archive, trace = run(f, cfg, seed=seed)
        pr = peak_ratio(archive, reg)
        records.append({
            "global_peak_ratio": pr["global"],
            "peak_ratio": pr["all"],
            "convergence_generation": convergence_generation(trace, f.peak_height),
        })
    return aggregate(records)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--function", action="append", dest="functions", choices=FUNCTION_IDS)
    p.add_argument("--seed-count", type=int, default=30)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--csv", help="also write the table to this file")
    args = p.parse_args(argv)
    functions = args.functions or ["F1", "F2", "F3", "F4", "F5"]
    seeds = range(args.base_seed, args.base_seed + args.seed_count)

    rows = []
    for fid in functions:
        for sel in VARIANTS:
            agg = sweep(fid, sel, seeds)
            rows.append({"function": fid, "selection": sel, **agg})
            conv = agg["mean_convergence_generation"]
            print(f"{fid} {sel:<9} gPR {agg['mean_global_peak_ratio']:.3f}  "
                  f"PR {agg['mean_peak_ratio']:.3f}  success {agg['success_rate']:.2f}  "
                  f"conv {'-' if conv is None else f'{conv:.1f}'} "
                  f"({agg['converged_runs']}/{agg['runs']})", flush=True)

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
