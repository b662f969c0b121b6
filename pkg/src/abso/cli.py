"""Experiment runner: ``abso run``, ``abso verify``, ``abso list-functions``.

Configuration is a flat JSON document; command-line flags override file
values, and anything left unset falls back to the published defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .archive import ArchiveConfig
from .attention import SaliencyConfig
from .benchmarks import FUNCTION_IDS, make_function, registered_optima
from .engine import EngineConfig, run_detailed
from .io import read_archive, read_header, read_trace, write_archive, write_trace
from .metrics import DEFAULT_EPSILON, aggregate, convergence_generation, default_tolerance, peak_ratio

ENGINE_KEYS = tuple(f.name for f in fields(EngineConfig))
SALIENCY_KEYS = ("m", "sigma_sq")
ARCHIVE_KEYS = ("rho",)
RUN_KEYS = ("functions", "seeds", "seed_count", "base_seed", "out", "workers", "epsilons", "tol")
KNOWN_KEYS = frozenset(ENGINE_KEYS + SALIENCY_KEYS + ARCHIVE_KEYS + RUN_KEYS)
OUT_ENV = "ABSO_OUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    functions: list = field(default_factory=lambda: list(FUNCTION_IDS))
    seeds: list = field(default_factory=lambda: list(range(30)))
    out: str = "results"
    workers: int = 1
    epsilons: list = field(default_factory=lambda: [DEFAULT_EPSILON])
    tol: float | None = None  # None: 1e-4 * max(1, |PH|) per function
    engine: dict = field(default_factory=dict)
    saliency: dict = field(default_factory=dict)
    archive: dict = field(default_factory=dict)

    def engine_config(self) -> EngineConfig:
        return EngineConfig(**self.engine)

    def saliency_config(self) -> SaliencyConfig:
        return SaliencyConfig(**self.saliency)

    def archive_config(self, function_id: str) -> ArchiveConfig:
        rho = self.archive.get("rho", make_function(function_id).niching_radius)
        return ArchiveConfig(rho=rho)

    def tolerance(self, function_id: str) -> float:
        if self.tol is not None:
            return self.tol
        return default_tolerance(make_function(function_id).peak_height)

    def algorithm(self) -> dict:
        """Parameters that determine a run's artifacts, defaults filled in."""
        return {
            "engine": asdict(self.engine_config()),
            "saliency": asdict(self.saliency_config()),
            "archive": dict(self.archive),
        }

    def resolved(self) -> dict:
        return {
            "functions": list(self.functions),
            "seeds": list(self.seeds),
            "epsilons": list(self.epsilons),
            "tol": self.tol,
            **self.algorithm(),
        }

    def hash(self) -> str:
        blob = json.dumps(self.algorithm(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _check(key, ok, msg):
    if not ok:
        raise ConfigError(f"{key}: {msg}")


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Layer file values and flag overrides over the defaults, validating each key."""
    flat = {}
    if path is not None:
        try:
            flat.update(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(flat, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "seeds" not in overrides and ("seed_count" in overrides or "base_seed" in overrides):
        flat.pop("seeds", None)
    flat.update(overrides)

    unknown = sorted(set(flat) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration key")

    cfg = ExperimentConfig()
    if "functions" in flat:
        fns = flat["functions"]
        fns = [fns] if isinstance(fns, str) else list(fns)
        _check("functions", len(fns) > 0, "at least one function required")
        for fid in fns:
            _check("functions", fid in FUNCTION_IDS, f"unknown function id {fid!r}")
        cfg.functions = fns
    if "seeds" in flat:
        seeds = [int(s) for s in flat["seeds"]]
        _check("seeds", len(seeds) > 0, "at least one seed required")
        cfg.seeds = seeds
    elif "seed_count" in flat or "base_seed" in flat:
        count = int(flat.get("seed_count", 30))
        base = int(flat.get("base_seed", 0))
        _check("seed_count", count >= 1, "must be at least 1")
        _check("base_seed", base >= 0, "must be non-negative")
        cfg.seeds = [base + i for i in range(count)]
    for s in cfg.seeds:
        _check("seeds", 0 <= s < 2**64, "seeds must be 64-bit unsigned integers")
    if "out" in flat:
        cfg.out = str(flat["out"])
    elif os.environ.get(OUT_ENV):
        cfg.out = os.environ[OUT_ENV]
    if "workers" in flat:
        _check("workers", int(flat["workers"]) >= 1, "must be at least 1")
        cfg.workers = int(flat["workers"])
    if "epsilons" in flat:
        eps = flat["epsilons"]
        eps = [float(eps)] if isinstance(eps, (int, float)) else [float(e) for e in eps]
        _check("epsilons", len(eps) > 0 and all(e > 0 for e in eps), "must be positive")
        cfg.epsilons = eps
    if flat.get("tol") is not None:
        _check("tol", float(flat["tol"]) > 0, "must be positive")
        cfg.tol = float(flat["tol"])

    for group, keys, factory in (("engine", ENGINE_KEYS, EngineConfig),
                                 ("saliency", SALIENCY_KEYS, SaliencyConfig)):
        values = {k: flat[k] for k in keys if k in flat}
        for k, v in values.items():
            try:
                factory(**{k: v})
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{group}.{k}: {exc}") from exc
        try:
            factory(**values)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{group}: {exc}") from exc
        setattr(cfg, group, values)
    if "rho" in flat:
        _check("archive.rho", float(flat["rho"]) > 0, "must be positive")
        cfg.archive = {"rho": float(flat["rho"])}
    return cfg


# --------------------------------------------------------------------- running

def _paths(out: Path, fid: str, seed: int):
    return out / "traces" / f"{fid}_seed{seed}.csv", out / "archives" / f"{fid}_seed{seed}.csv"


def _run_id(cfg: ExperimentConfig, fid: str, seed: int) -> str:
    return f"{fid}-{cfg.engine_config().mode}-s{seed}"


def _header(cfg: ExperimentConfig, fid: str, seed: int) -> dict:
    f = make_function(fid)
    ecfg = cfg.engine_config()
    return {
        "config_hash": cfg.hash(),
        "config": json.dumps(cfg.algorithm(), sort_keys=True, separators=(",", ":")),
        "seed": seed,
        "function": fid,
        "mode": ecfg.mode,
        "max_iterations": ecfg.iterations(f.max_fes),
        "max_fes": f.max_fes,
        "convergence_tol": repr(cfg.tolerance(fid)),
    }


def score_run(cfg: ExperimentConfig, fid: str, seed: int, archive, trace) -> dict:
    """Per-run record used by the summary and by ``verify``."""
    f = make_function(fid)
    reg = registered_optima(fid)
    T = cfg.engine_config().iterations(f.max_fes)
    tol = cfg.tolerance(fid)
    gen = convergence_generation(trace, f.peak_height, tol)
    fes = None
    if gen is not None:
        fes = trace.fes_used[trace.generation.index(gen)]
    by_eps = {}
    for eps in cfg.epsilons:
        pr = peak_ratio(archive, reg, eps, radius=cfg.archive_config(fid).rho)
        n_glob = sum(1 for i in pr["matched"] if i < reg.n_global)
        by_eps[repr(eps)] = {
            "global_peak_ratio": pr["global"],
            "peak_ratio": pr["all"],
            "global_matched": n_glob,
            "all_matched": len(pr["matched"]),
        }
    main = by_eps[repr(cfg.epsilons[0])]
    return {
        "function": fid,
        "seed": seed,
        "max_iterations": T,
        "generations_run": trace.generation[-1] if len(trace) else 0,
        "convergence_generation": gen,
        "fes_at_convergence": fes,
        "converged_before_T": gen is not None and gen < T,
        "n_global": reg.n_global,
        "n_optima": len(reg.positions),
        **main,
        "by_epsilon": by_eps,
        "archive_size": len(archive),
        "archive_min_separation": None if len(archive) < 2 else archive.min_separation(),
        "archive_max_fitness": float(archive.fitness.max()) if len(archive) else None,
        "rho": cfg.archive_config(fid).rho,
        "peak_height": f.peak_height,
    }


def execute_run(cfg: ExperimentConfig, fid: str, seed: int) -> dict:
    """Run one (function, seed) pair, write its artifacts, return its record.

    Reuses existing artifacts whose header carries the same config hash.
    """
    out = Path(cfg.out)
    tpath, apath = _paths(out, fid, seed)
    header = _header(cfg, fid, seed)
    f = make_function(fid)
    acfg = cfg.archive_config(fid)
    if tpath.exists() and apath.exists():
        if (read_header(tpath).get("config_hash") == header["config_hash"]
                and read_header(apath).get("config_hash") == header["config_hash"]):
            rec = score_run(cfg, fid, seed, read_archive(apath, f.dim, acfg), read_trace(tpath))
            rec["reused"] = True
            return rec
    t0 = time.perf_counter()
    res = run_detailed(f, cfg.engine_config(), cfg.saliency_config(), acfg, seed)
    elapsed = time.perf_counter() - t0
    write_trace(tpath, res.trace, _run_id(cfg, fid, seed), seed, fid, header)
    write_archive(apath, res.archive, fid, header)
    rec = score_run(cfg, fid, seed, res.archive, res.trace)
    rec["reused"] = False
    rec["seconds"] = elapsed
    return rec


def _safe_run(args):
    cfg, fid, seed = args
    try:
        return execute_run(cfg, fid, seed)
    except Exception:
        return {"function": fid, "seed": seed, "error": traceback.format_exc()}


def run_suite(cfg: ExperimentConfig, log=print) -> int:
    """Execute every (function, seed) pair and write the summary; 0 iff all ran."""
    out = Path(cfg.out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    (out / "archives").mkdir(parents=True, exist_ok=True)
    # echo the resolved config first so an unwritable directory fails before any run
    (out / "config.json").write_text(json.dumps(
        {"config_hash": cfg.hash(), **cfg.resolved()}, indent=2, sort_keys=True) + "\n")

    jobs = [(cfg, fid, seed) for fid in cfg.functions for seed in cfg.seeds]
    t0 = time.perf_counter()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_safe_run, jobs))
    else:
        records = []
        for job in jobs:
            records.append(_safe_run(job))
            r = records[-1]
            if "error" in r:
                log(f"{r['function']} seed {r['seed']}: FAILED")
            else:
                log(f"{r['function']} seed {r['seed']}: gPR={r['global_peak_ratio']:.2f} "
                    f"PR={r['peak_ratio']:.2f} conv={r['convergence_generation']}")

    summary = summarise(cfg, records)
    summary["wall_seconds"] = time.perf_counter() - t0
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    log(f"wrote {out / 'summary.json'} ({len(records)} runs, {len(summary['failures'])} failed)")
    return 0 if not summary["failures"] else 1


def summarise(cfg: ExperimentConfig, records: list[dict]) -> dict:
    failures = [r for r in records if "error" in r]
    ok = [r for r in records if "error" not in r]
    functions = {}
    for fid in cfg.functions:
        runs = sorted((r for r in ok if r["function"] == fid), key=lambda r: r["seed"])
        if not runs:
            continue
        functions[fid] = {**aggregate(runs), "runs_detail": runs}
    return {
        "config_hash": cfg.hash(),
        "config": cfg.resolved(),
        "mode": cfg.engine_config().mode,
        "convergence_tolerance": {fid: cfg.tolerance(fid) for fid in cfg.functions},
        "functions": functions,
        "failures": [{"function": r["function"], "seed": r["seed"], "error": r["error"]}
                     for r in failures],
    }


# --------------------------------------------------------------------- verify

DEFAULT_THRESHOLDS = {
    "f2_all_global_rate": 0.8,
    "f2_min_global_matched": 4,
    "f1_both_global_rate": 0.8,
    "f1_all_optima_rate": 0.5,
    "mean_convergence_max": {"F1": 350, "F2": 200, "F3": 60},
    "converged_before_T_rate": 0.9,
    "bound_2d_fraction_of_T": 0.4,
    "bound_2d_rate": 0.9,
    "peak_height_slack": 1e-6,
}


def _runs(summary, fid):
    entry = summary.get("functions", {}).get(fid)
    return None if entry is None else entry["runs_detail"]


def check_summary(summary: dict, thresholds: dict | None = None,
                  baseline: dict | None = None) -> list[tuple[str, bool, str]]:
    """Evaluate acceptance checks against a summary; returns (name, passed, detail)."""
    th = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    results = []

    def need(name, fid):
        runs = _runs(summary, fid)
        if runs is None:
            results.append((name, False, f"{fid} not run"))
        return runs

    runs = need("F2 multimodality", "F2")
    if runs:
        full = np.mean([r["global_matched"] == r["n_global"] for r in runs])
        worst = min(r["global_matched"] for r in runs)
        ok = full >= th["f2_all_global_rate"] and worst >= th["f2_min_global_matched"]
        results.append(("F2 multimodality", bool(ok),
                        f"all-5 rate {full:.2f} (>= {th['f2_all_global_rate']}), worst {worst}/5"))

    runs = need("F1 global+local recovery", "F1")
    if runs:
        both = np.mean([r["global_matched"] == r["n_global"] for r in runs])
        every = np.mean([r["all_matched"] == r["n_optima"] for r in runs])
        ok = both >= th["f1_both_global_rate"] and every >= th["f1_all_optima_rate"]
        results.append(("F1 global+local recovery", bool(ok),
                        f"both-global rate {both:.2f}, all-optima rate {every:.2f}"))

    for fid, limit in th["mean_convergence_max"].items():
        name = f"{fid} convergence speed"
        runs = need(name, fid)
        if not runs:
            continue
        gens = [r["convergence_generation"] for r in runs if r["convergence_generation"] is not None]
        mean = float(np.mean(gens)) if gens else float("inf")
        rate = np.mean([r["converged_before_T"] for r in runs])
        ok = mean <= limit and rate >= th["converged_before_T_rate"]
        results.append((name, bool(ok), f"mean {mean:.1f} (<= {limit}), converged rate {rate:.2f}"))

    for fid in ("F4", "F5"):
        name = f"{fid} 2D convergence bound"
        runs = need(name, fid)
        if not runs:
            continue
        frac = th["bound_2d_fraction_of_T"]
        rate = np.mean([r["convergence_generation"] is not None
                        and r["convergence_generation"] <= frac * r["max_iterations"] for r in runs])
        results.append((name, bool(rate >= th["bound_2d_rate"]),
                        f"rate {rate:.2f} within {frac:.0%} of T"))

    bad = []
    for fid, entry in summary.get("functions", {}).items():
        for r in entry["runs_detail"]:
            sep = r["archive_min_separation"]
            top = r["archive_max_fitness"]
            if sep is not None and sep < r["rho"]:
                bad.append(f"{fid}/s{r['seed']} separation {sep:.3g}")
            if top is not None and top > r["peak_height"] + th["peak_height_slack"]:
                bad.append(f"{fid}/s{r['seed']} fitness {top}")
    results.append(("archive invariants", not bad, "; ".join(bad[:5]) or "all archives valid"))

    if baseline is not None:
        name = "baseline contrast on F2"
        ours = summary.get("functions", {}).get("F2")
        theirs = baseline.get("functions", {}).get("F2")
        if ours is None or theirs is None:
            results.append((name, False, "F2 missing from one of the summaries"))
        else:
            a, b = ours["mean_global_peak_ratio"], theirs["mean_global_peak_ratio"]
            results.append((name, b < a, f"baseline {b:.3f} vs {a:.3f}"))

    for f in summary.get("failures", []):
        results.append((f"run {f['function']}/s{f['seed']}", False, "run failed"))
    return results


def verify(summary_path, thresholds_path=None, baseline_path=None, log=print) -> int:
    try:
        summary = json.loads(Path(summary_path).read_text())
        thresholds = json.loads(Path(thresholds_path).read_text()) if thresholds_path else None
        baseline = json.loads(Path(baseline_path).read_text()) if baseline_path else None
        results = check_summary(summary, thresholds, baseline)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        log(f"malformed summary: {exc!r}")
        return 2
    for name, ok, detail in results:
        log(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    passed = all(ok for _, ok, _ in results)
    log("overall: " + ("PASS" if passed else "FAIL"))
    return 0 if passed else 1


# --------------------------------------------------------------------- entry point

def list_functions(log=print):
    log(f"{'id':<4}{'name':<26}{'dim':>4}{'MaxFes':>9}{'PH':>11}{'rho':>7}  bounds")
    for fid in FUNCTION_IDS:
        f = make_function(fid)
        box = " x ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(f.bounds.lower, f.bounds.upper))
        log(f"{fid:<4}{f.name:<26}{f.dim:>4}{f.max_fes:>9}{f.peak_height:>11g}{f.niching_radius:>7g}  {box}")


def _parser():
    p = argparse.ArgumentParser(prog="abso", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a seed sweep")
    r.add_argument("--config", help="flat JSON config file")
    r.add_argument("--function", action="append", dest="functions", choices=FUNCTION_IDS,
                   help="function id (repeatable; default all)")
    r.add_argument("--mode", choices=("ABSO", "BSO_OS"))
    r.add_argument("--seeds", help="comma-separated explicit seeds")
    r.add_argument("--seed-count", type=int)
    r.add_argument("--base-seed", type=int)
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    r.add_argument("--workers", type=int)
    r.add_argument("--epsilon", type=float, action="append", dest="epsilons",
                   help="peak-ratio accuracy (repeatable)")
    r.add_argument("--tol", type=float, help="convergence tolerance (default 1e-4*max(1,|PH|))")

    v = sub.add_parser("verify", help="check a summary against the acceptance thresholds")
    v.add_argument("summary")
    v.add_argument("--thresholds", help="JSON file overriding default thresholds")
    v.add_argument("--baseline", help="BSO_OS summary for the baseline-contrast check")

    sub.add_parser("list-functions", help="print benchmark metadata")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-functions":
        list_functions()
        return 0
    if args.command == "verify":
        return verify(args.summary, args.thresholds, args.baseline)

    overrides = {
        "functions": args.functions,
        "mode": args.mode,
        "seed_count": args.seed_count,
        "base_seed": args.base_seed,
        "workers": args.workers,
        "epsilons": args.epsilons,
        "tol": args.tol,
    }
    if args.seeds:
        overrides["seeds"] = [int(s) for s in args.seeds.split(",") if s.strip()]
    if args.out:
        overrides["out"] = args.out
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_suite(cfg)
    except OSError as exc:
        print(f"cannot write to {cfg.out}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
