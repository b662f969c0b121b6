"""ABSO main loop and the BSO-OS baseline.

Draw order
----------
One :class:`~abso.core.RandomSource` drives a run. Each draw costs one
uniform, consumed in this order:

1. initial population: ``n * dim`` uniforms, row by row;
2. per generation, one fixed-width record per index ``i = 0..n-1``::

       [class, one_parent, parent1, parent2, r, xi, g_1 .. g_dim]

   every field is drawn even when the branch does not use it, so the
   record width is always ``6 + dim``;
3. redistribution (when triggered): ``dim`` uniforms per non-salient
   index, ascending;
4. disruption: one uniform for the trigger; if it fires, one for the
   index and ``dim`` for the new position.

Saliency costs no evaluations; only objective calls count against MaxFes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .archive import Archive, ArchiveConfig, ArchivedSolution
from .attention import SaliencyConfig, batch_saliency, external_saliency
from .benchmarks import BenchmarkFunction, evaluate_batch
from .core import (
    Bounds,
    EvaluationBudget,
    Individual,
    RandomSource,
    int_from_uniform,
    normal_from_uniform,
    positions_from_uniforms,
    uniform_position,
)
from .metrics import RunTrace

__all__ = [
    "EngineConfig",
    "GenerationState",
    "RunResult",
    "cluster_by_attention",
    "generate_individual",
    "logsig",
    "maybe_disrupt",
    "maybe_redistribute",
    "run",
    "run_detailed",
    "select_base",
    "select_survivor",
    "step_size",
]

MODES = ("ABSO", "BSO_OS")
RECORD_HEAD = 6  # class, one_parent, parent1, parent2, r, xi


@dataclass(frozen=True)
class EngineConfig:
    population_size: int = 100
    max_iterations: int | None = None  # None: MaxFes // population_size
    perc_e: float = 0.1
    p_e: float = 0.8
    p_one: float = 0.8
    p_d: float = 0.1
    k: float = 25.0
    t_prime: int = 5
    mode: Literal["ABSO", "BSO_OS"] = "ABSO"
    # None picks the mode's default: saliency selection, redistribution and
    # archive for ABSO; fitness selection and none of the extras for BSO_OS
    selection: Literal["saliency", "fitness"] | None = None
    redistribution: bool | None = None
    use_archive: bool | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if not 0 < self.perc_e < 1:
            raise ValueError("perc_e must lie in (0, 1)")
        for name in ("p_e", "p_one", "p_d"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not self.k > 0:
            raise ValueError("k must be positive")
        if self.t_prime < 1:
            raise ValueError("t_prime must be at least 1")
        if self.selection not in (None, "saliency", "fitness"):
            raise ValueError("selection must be 'saliency' or 'fitness'")

    @property
    def selects_on_saliency(self) -> bool:
        if self.selection is None:
            return self.mode == "ABSO"
        return self.selection == "saliency"

    @property
    def redistributes(self) -> bool:
        if self.redistribution is None:
            return self.mode == "ABSO"
        return self.redistribution

    @property
    def archives(self) -> bool:
        if self.use_archive is None:
            return self.mode == "ABSO"
        return self.use_archive

    def iterations(self, max_fes: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return max_fes // self.population_size

    def salient_count(self, n: int | None = None) -> int:
        n = self.population_size if n is None else n
        c = int(np.floor(self.perc_e * n + 0.5))
        return min(max(1, c), n - 1)


@dataclass
class GenerationState:
    """Population arrays plus the bookkeeping the operators share."""

    t: int
    positions: np.ndarray
    fitness: np.ndarray
    saliency: np.ndarray
    birth: np.ndarray
    salient: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    non_salient: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    stagnation: int = 0

    @property
    def n(self) -> int:
        return len(self.fitness)

    def individual(self, i: int) -> Individual:
        return Individual(self.positions[i].copy(), float(self.fitness[i]),
                          float(self.saliency[i]), int(self.birth[i]))


def logsig(x):
    return 1.0 / (1.0 + np.exp(-x))


def step_scale(t, T, k):
    return logsig((T / 2.0 - t) / k)


def step_size(t: int, T: int, cfg: EngineConfig, rng: RandomSource) -> float:
    """One random step length: ``logsig((T/2 - t)/k) * u``."""
    return float(step_scale(t, T, cfg.k) * rng.uniform())


def cluster_by_attention(values, cfg: EngineConfig):
    """Split indices into the top ``perc_e`` share by ``values`` and the rest.

    ``values`` must already be oriented so that larger is better (a
    salience key, or sign-adjusted fitness for BSO-OS). Ties go to the
    lower index. Both returned index arrays are ascending.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    c = cfg.salient_count(n)
    order = np.lexsort((np.arange(n), -values))
    salient = np.sort(order[:c])
    non_salient = np.sort(order[c:])
    return salient, non_salient


def _bases(U, X, salient, non_salient, cfg):
    """Parent combination for each draw record (rows of ``U``)."""
    from_salient = U[:, 0] < cfg.p_e
    size = np.where(from_salient, len(salient), len(non_salient))
    one = (U[:, 1] < cfg.p_one) | (size < 2)
    a = int_from_uniform(U[:, 2], size)
    b = int_from_uniform(U[:, 3], np.maximum(size - 1, 1))
    b = b + (b >= a)
    r = U[:, 4]
    ia = np.where(from_salient, salient[np.minimum(a, len(salient) - 1)],
                  non_salient[np.minimum(a, len(non_salient) - 1)])
    b_s = np.minimum(b, len(salient) - 1)
    b_n = np.minimum(b, len(non_salient) - 1)
    ib = np.where(from_salient, salient[b_s], non_salient[b_n])
    two = r[:, None] * X[ia] + (1.0 - r[:, None]) * X[ib]
    return np.where(one[:, None], X[ia], two)


def _offspring(U, state, cfg, bounds, T):
    base = _bases(U[:, :5], state.positions, state.salient, state.non_salient, cfg)
    xi = step_scale(state.t, T, cfg.k) * U[:, 5]
    g = normal_from_uniform(U[:, RECORD_HEAD:])
    return np.clip(base + xi[:, None] * g, bounds.lower, bounds.upper)


def select_base(state: GenerationState, cfg: EngineConfig, rng: RandomSource) -> np.ndarray:
    """Draw the base position for one offspring (five uniforms)."""
    U = rng.uniforms((1, 5))
    return _bases(U, state.positions, state.salient, state.non_salient, cfg)[0]


def generate_individual(state: GenerationState, cfg: EngineConfig, rng: RandomSource,
                        bounds: Bounds, T: int) -> Individual:
    """One offspring from one draw record; fitness and saliency left unset."""
    U = rng.uniforms((1, RECORD_HEAD + bounds.dim))
    x = _offspring(U, state, cfg, bounds, T)[0]
    return Individual(x, None, None, state.t)


def select_survivor(existing: Individual, candidate: Individual, cfg: EngineConfig,
                    sense: str = "max") -> Individual:
    sign = 1.0 if sense == "max" else -1.0
    if cfg.selects_on_saliency:
        better = sign * candidate.saliency >= sign * existing.saliency
    else:
        better = sign * candidate.fitness >= sign * existing.fitness
    return candidate if better else existing


def maybe_disrupt(state: GenerationState, cfg: EngineConfig, rng: RandomSource,
                  bounds: Bounds) -> list[int]:
    """With probability ``p_d`` re-seed one random individual uniformly.

    Returns the replaced indices (empty or one). The replaced member's
    fitness and saliency are set to NaN until re-evaluated.
    """
    if not rng.uniform() < cfg.p_d:
        return []
    i = rng.integer(state.n)
    state.positions[i] = uniform_position(bounds, rng)
    state.fitness[i] = np.nan
    state.saliency[i] = np.nan
    state.birth[i] = state.t
    return [i]


def maybe_redistribute(state: GenerationState, cfg: EngineConfig, rng: RandomSource,
                       bounds: Bounds) -> list[int]:
    """Re-seed the whole non-salient class after ``t_prime`` stagnant iterations."""
    if state.stagnation < cfg.t_prime:
        return []
    idx = state.non_salient
    U = rng.uniforms((len(idx), bounds.dim))
    state.positions[idx] = positions_from_uniforms(U, bounds)
    state.fitness[idx] = np.nan
    state.saliency[idx] = np.nan
    state.birth[idx] = state.t
    state.stagnation = 0
    return idx.tolist()


@dataclass
class RunResult:
    archive: Archive
    trace: RunTrace
    state: GenerationState
    iterations: int
    fes_used: int


class _Run:
    """Mutable context for one optimisation run."""

    def __init__(self, function, ecfg, scfg, acfg, seed):
        self.f = function
        self.ecfg = ecfg
        self.scfg = scfg
        self.sign = scfg.sign
        self.rng = RandomSource(seed)
        self.budget = EvaluationBudget(function.max_fes)
        self.archive = Archive(function.dim, acfg)
        self.trace = RunTrace()
        self.best = -np.inf

    def arch_view(self):
        if self.ecfg.archives and len(self.archive):
            return self.archive.positions, self.archive.fitness
        return None, None

    def score(self, state):
        ax, af = self.arch_view()
        s, absolute = batch_saliency(state.positions, state.fitness, ax, af, self.scfg)
        state.saliency = s
        return absolute

    def values(self, state):
        if self.ecfg.mode == "ABSO":
            return self.sign * state.saliency
        return self.sign * state.fitness

    def partition(self, state):
        state.salient, state.non_salient = cluster_by_attention(self.values(state), self.ecfg)

    def reevaluate(self, state, idx, old):
        """Evaluate re-seeded members; those the budget cannot cover revert."""
        idx = np.asarray(idx, dtype=np.int64)
        vals = evaluate_batch(self.f, state.positions[idx], self.budget)
        state.fitness[idx[: len(vals)]] = vals
        rest = idx[len(vals):]
        if len(rest):
            pos, fit, sal, birth = old
            state.positions[rest] = pos[rest]
            state.fitness[rest] = fit[rest]
            state.saliency[rest] = sal[rest]
            state.birth[rest] = birth[rest]
        self.score(state)

    def archive_salient(self, state, absolute):
        self.archive.reset_change_flag()
        if not self.ecfg.archives:
            return
        for i in np.nonzero(absolute)[0]:
            self.archive.try_insert(ArchivedSolution(
                state.positions[i].copy(), float(state.fitness[i]),
                float(state.saliency[i]), state.t))

    def record(self, state):
        cur = self.sign * state.fitness
        best = cur.max()
        if self.ecfg.archives and len(self.archive):
            best = max(best, (self.sign * self.archive.fitness).max())
        self.best = max(self.best, best)
        most_salient = self.sign * np.max(self.sign * state.saliency)
        self.trace.append(state.t, self.sign * self.best, most_salient,
                          len(self.archive), self.budget.used_fes)

    def population_archive(self, state):
        """Output set for archive-free runs: the final population, rho-cleared."""
        order = np.lexsort((np.arange(state.n), -self.sign * state.saliency))
        for i in order:
            self.archive.try_insert(ArchivedSolution(
                state.positions[i].copy(), float(state.fitness[i]),
                float(state.saliency[i]), int(state.birth[i])))

    def snapshot(self, state):
        return (state.positions.copy(), state.fitness.copy(),
                state.saliency.copy(), state.birth.copy())


def run_detailed(function: BenchmarkFunction, engine_cfg: EngineConfig | None = None,
                 saliency_cfg: SaliencyConfig | None = None,
                 archive_cfg: ArchiveConfig | None = None, seed: int = 0) -> RunResult:
    ecfg = engine_cfg or EngineConfig()
    scfg = saliency_cfg or SaliencyConfig()
    acfg = archive_cfg or ArchiveConfig(rho=function.niching_radius, sense=scfg.sense)
    n = ecfg.population_size
    if function.max_fes < n:
        raise ValueError("MaxFes must cover at least the initial population")
    T = ecfg.iterations(function.max_fes)
    bounds = function.bounds
    ctx = _Run(function, ecfg, scfg, acfg, seed)

    X = positions_from_uniforms(ctx.rng.uniforms((n, function.dim)), bounds)
    state = GenerationState(0, X, evaluate_batch(function, X, ctx.budget),
                            np.zeros(n), np.zeros(n, dtype=np.int64))
    ctx.archive_salient(state, ctx.score(state))
    ctx.record(state)

    t = 0
    for t in range(1, T + 1):
        if ctx.budget.exhausted:
            t -= 1
            break
        state.t = t
        ctx.partition(state)

        # offspring from the frozen snapshot; all records drawn before any evaluation
        U = ctx.rng.uniforms((n, RECORD_HEAD + function.dim))
        cand = _offspring(U, state, ecfg, bounds, T)
        fc = evaluate_batch(function, cand, ctx.budget)
        k = len(fc)
        cand = cand[:k]
        if ecfg.selects_on_saliency:
            ax, af = ctx.arch_view()
            pool_x = state.positions if ax is None else np.vstack([state.positions, ax])
            pool_f = state.fitness if af is None else np.concatenate([state.fitness, af])
            sc, _ = external_saliency(cand, fc, pool_x, pool_f, scfg)
            win = ctx.sign * sc >= ctx.sign * state.saliency[:k]
        else:
            win = ctx.sign * fc >= ctx.sign * state.fitness[:k]
        idx = np.nonzero(win)[0]
        state.positions[idx] = cand[idx]
        state.fitness[idx] = fc[idx]
        state.birth[idx] = t

        ctx.archive_salient(state, ctx.score(state))
        state.stagnation = 0 if ctx.archive.changed else state.stagnation + 1

        if ecfg.redistributes and state.stagnation >= ecfg.t_prime:
            ctx.partition(state)
            old = ctx.snapshot(state)
            moved = maybe_redistribute(state, ecfg, ctx.rng, bounds)
            ctx.reevaluate(state, moved, old)

        old = ctx.snapshot(state)
        hit = maybe_disrupt(state, ecfg, ctx.rng, bounds)
        if hit:
            ctx.reevaluate(state, hit, old)

        ctx.record(state)

    if not ecfg.archives:
        ctx.population_archive(state)
    return RunResult(ctx.archive, ctx.trace, state, t, ctx.budget.used_fes)


def run(function: BenchmarkFunction, engine_cfg: EngineConfig | None = None,
        saliency_cfg: SaliencyConfig | None = None,
        archive_cfg: ArchiveConfig | None = None, seed: int = 0):
    """Optimise ``function`` and return ``(archive, trace)``."""
    res = run_detailed(function, engine_cfg, saliency_cfg, archive_cfg, seed)
    return res.archive, res.trace
