"""Average the per-seed traces of a results directory into plot-ready curves.

Writes one CSV per function with, for every generation, the mean and
min/max best fitness, mean maximum saliency and mean archive size over
all seeds. Traces shorter than the longest one are padded with their
last row (runs stop early only when the budget runs out).

    python3 scripts/convergence_curves.py results --out results/curves
"""

import argparse
import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from abso.io import read_header, read_trace


def load(results: Path):
    traces = defaultdict(list)
    for path in sorted((results / "traces").glob("*.csv")):
        fid = read_header(path)["function"]
        traces[fid].append(read_trace(path))
    return traces


def padded(traces, name):
    length = max(len(t) for t in traces)
    rows = []
    for t in traces:
        col = list(getattr(t, name))
        rows.append(col + [col[-1]] * (length - len(col)))
    return np.array(rows, dtype=float)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("results", type=Path)
    p.add_argument("--out", type=Path, help="output directory (default RESULTS/curves)")
    args = p.parse_args(argv)
    out = args.out or args.results / "curves"
    out.mkdir(parents=True, exist_ok=True)

    for fid, traces in sorted(load(args.results).items()):
        best = padded(traces, "best_fitness")
        sal = padded(traces, "max_saliency")
        size = padded(traces, "archive_size")
        path = out / f"{fid}_curve.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["generation", "mean_best_fitness", "min_best_fitness", "max_best_fitness",
                        "mean_max_saliency", "mean_archive_size", "runs"])
            for g in range(best.shape[1]):
                cols = (best[:, g].mean(), best[:, g].min(), best[:, g].max(),
                        sal[:, g].mean(), size[:, g].mean())
                w.writerow([g, *(repr(float(c)) for c in cols), len(traces)])
        print(f"{fid}: {len(traces)} runs, {best.shape[1]} generations -> {path}")


if __name__ == "__main__":
    main()
