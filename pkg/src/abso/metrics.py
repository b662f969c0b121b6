"""Run-level measurements: traces, convergence generation, peak ratios, aggregates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .archive import Archive, matched_optima
from .benchmarks import OptimaRegistry

__all__ = [
    "DEFAULT_EPSILON",
    "RunTrace",
    "aggregate",
    "convergence_generation",
    "default_tolerance",
    "peak_ratio",
]

DEFAULT_EPSILON = 0.1
TRACE_FIELDS = ("generation", "best_fitness", "max_saliency", "archive_size", "fes_used")


def default_tolerance(peak_height: float) -> float:
    return 1e-4 * max(1.0, abs(peak_height))


@dataclass
class RunTrace:
    """One row per completed generation (generation 0 is the initial population).

    ``best_fitness`` is the best value seen so far over population and
    archive, so it never decreases.
    """

    generation: list = field(default_factory=list)
    best_fitness: list = field(default_factory=list)
    max_saliency: list = field(default_factory=list)
    archive_size: list = field(default_factory=list)
    fes_used: list = field(default_factory=list)

    def append(self, generation, best_fitness, max_saliency, archive_size, fes_used):
        self.generation.append(int(generation))
        self.best_fitness.append(float(best_fitness))
        self.max_saliency.append(float(max_saliency))
        self.archive_size.append(int(archive_size))
        self.fes_used.append(int(fes_used))

    def __len__(self):
        return len(self.generation)

    def rows(self):
        return zip(*(getattr(self, name) for name in TRACE_FIELDS))


def convergence_generation(trace: RunTrace, peak_height: float, tol: float | None = None):
    """First generation whose best fitness reaches ``peak_height - tol``; None if never."""
    if tol is None:
        tol = default_tolerance(peak_height)
    if not tol > 0:
        raise ValueError("tol must be positive")
    target = peak_height - tol
    for g, best in zip(trace.generation, trace.best_fitness):
        if best >= target:
            return g
    return None


def peak_ratio(archive: Archive, registry: OptimaRegistry, epsilon: float = DEFAULT_EPSILON,
               radius: float | None = None) -> dict:
    """Fraction of registered optima matched, for global-only and global+local sets."""
    if len(registry.positions) == 0:
        raise ValueError("registry has no optima")
    matched = matched_optima(archive, registry, epsilon, radius)
    n_global = registry.n_global
    hit_global = sum(1 for i in matched if i < n_global)
    return {
        "global": hit_global / n_global,
        "all": len(matched) / len(registry.positions),
        "matched": matched,
    }


def aggregate(runs: list[dict]) -> dict:
    """Summarise per-seed run records of one function.

    Each record needs ``global_peak_ratio``, ``peak_ratio`` and
    ``convergence_generation`` (None when the run never converged).
    """
    if not runs:
        raise ValueError("need at least one run")
    gens = [r["convergence_generation"] for r in runs]
    conv = [g for g in gens if g is not None]
    gpr = np.array([r["global_peak_ratio"] for r in runs], dtype=float)
    pr = np.array([r["peak_ratio"] for r in runs], dtype=float)
    return {
        "runs": len(runs),
        "converged_runs": len(conv),
        "converged_fraction": len(conv) / len(runs),
        "mean_convergence_generation": float(np.mean(conv)) if conv else None,
        "min_convergence_generation": min(conv) if conv else None,
        "max_convergence_generation": max(conv) if conv else None,
        "mean_global_peak_ratio": float(gpr.mean()),
        "mean_peak_ratio": float(pr.mean()),
        "success_rate": float(np.mean(gpr == 1.0)),
    }
