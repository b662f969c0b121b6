"""Regenerate src/abso/data/optima.json.

Scans each function on a dense grid, polishes every grid-local maximum with
bounded L-BFGS-B, merges duplicates and writes global optima for all
functions plus interior local optima where the registry tracks them (F1, F3).
Boundary maxima count only when they are global (F1's two peaks).

    python scripts/build_optima.py
"""

import json
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.optimize import minimize

from abso.benchmarks import FUNCTION_IDS, REGISTRY_VERSION, make_function

OUT = Path(__file__).resolve().parents[1] / "src" / "abso" / "data" / "optima.json"

GRID_1D = 3_000_001  # spacing 1e-5 on [0, 30] lands exactly on the F1 kinks
GRID_2D = 2001
TRACK_LOCAL = {"F1", "F3"}


def grid_candidates(f):
    if f.dim == 1:
        x = np.linspace(f.bounds.lower[0], f.bounds.upper[0], GRID_1D)
        y = f.objective(x[:, None])
        left = np.r_[-np.inf, y[:-1]]
        right = np.r_[y[1:], -np.inf]
        idx = np.nonzero((y > left) & (y >= right))[0]
        return x[idx, None]
    axes = [np.linspace(lo, hi, GRID_2D) for lo, hi in zip(f.bounds.lower, f.bounds.upper)]
    X, Y = np.meshgrid(*axes, indexing="ij")
    F = f.objective(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    peak = F == maximum_filter(F, size=3, mode="nearest")
    return np.column_stack([X[peak], Y[peak]])


def polish(f, x0, step):
    # search only the surrounding grid cells so a peak cannot jump to a neighbour
    best = x0.copy()
    best_f = f(x0)
    lo = np.maximum(f.bounds.lower, x0 - 2 * step)
    hi = np.minimum(f.bounds.upper, x0 + 2 * step)
    res = minimize(lambda p: -f(p), x0, method="L-BFGS-B", bounds=list(zip(lo, hi)),
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 500})
    if -res.fun > best_f:
        best, best_f = res.x, -res.fun
    return best, best_f


def merge(points, values, radius):
    order = np.argsort(-values, kind="stable")
    kept = []
    for i in order:
        if all(np.linalg.norm(points[i] - points[j]) >= radius for j in kept):
            kept.append(i)
    return points[kept], values[kept]


def build(fid):
    f = make_function(fid)
    cands = grid_candidates(f)
    n = GRID_1D if f.dim == 1 else GRID_2D
    step = f.bounds.width / (n - 1)
    polished = [polish(f, c, step) for c in cands]
    pts = np.array([p for p, _ in polished])
    vals = np.array([v for _, v in polished])
    pts, vals = merge(pts, vals, f.niching_radius / 2)
    top = vals.max()
    is_global = vals >= top - 1e-6 * max(1.0, abs(top))
    on_edge = np.any(np.isclose(pts, f.bounds.lower) | np.isclose(pts, f.bounds.upper), axis=1)
    keep = is_global | ~on_edge
    pts, vals, is_global = pts[keep], vals[keep], is_global[keep]
    order = np.lexsort(pts.T[::-1])
    pts, vals, is_global = pts[order], vals[order], is_global[order]

    def rows(mask):
        return [{"x": [round(float(c), 12) for c in p], "f": float(f(p))} for p in pts[mask]]

    return {
        "name": f.name,
        "global": rows(is_global),
        "local": rows(~is_global) if fid in TRACK_LOCAL else [],
    }


def main():
    doc = {"version": REGISTRY_VERSION, "functions": {}}
    for fid in FUNCTION_IDS:
        entry = build(fid)
        doc["functions"][fid] = entry
        print(f"{fid}: {len(entry['global'])} global, {len(entry['local'])} local")
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
