"""ABSO against the BSO-OS baseline on the same functions and seeds.

Runs both modes through the regular suite runner (so artifacts land in
OUT/abso and OUT/bso_os) and prints peak-ratio and convergence figures
side by side.

    python3 scripts/baseline_contrast.py --out results/contrast --function F2
"""

import argparse
import json
import sys
from pathlib import Path

from abso.benchmarks import FUNCTION_IDS
from abso.cli import load_config, run_suite


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("results/contrast"))
    p.add_argument("--function", action="append", dest="functions", choices=FUNCTION_IDS)
    p.add_argument("--seed-count", type=int, default=30)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)
    functions = args.functions or ["F2"]

    summaries = {}
    for mode in ("ABSO", "BSO_OS"):
        out = args.out / mode.lower()
        cfg = load_config(None, {"functions": functions, "mode": mode, "seed_count": args.seed_count,
                                 "workers": args.workers, "out": str(out)})
        run_suite(cfg, log=lambda *_: None)
        summaries[mode] = json.loads((out / "summary.json").read_text())["functions"]

    print(f"{'function':<9}{'mode':<8}{'gPR':>7}{'PR':>7}{'success':>9}{'conv':>8}")
    for fid in functions:
        for mode, funcs in summaries.items():
            agg = funcs[fid]
            conv = agg["mean_convergence_generation"]
            print(f"{fid:<9}{mode:<8}{agg['mean_global_peak_ratio']:>7.3f}{agg['mean_peak_ratio']:>7.3f}"
                  f"{agg['success_rate']:>9.2f}{'-' if conv is None else f'{conv:.1f}':>8}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
