"""Refinement-limited archive of absolutely salient solutions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .benchmarks import OptimaRegistry, make_function

__all__ = ["Archive", "ArchiveConfig", "ArchivedSolution", "matched_optima"]


@dataclass(frozen=True)
class ArchiveConfig:
    rho: float
    sense: Literal["max", "min"] = "max"

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")


@dataclass(frozen=True)
class ArchivedSolution:
    position: np.ndarray
    fitness: float
    saliency: float
    generation_found: int = 0


class Archive:
    """Entries stay at least ``rho`` apart.

    A newcomer inside the ``rho``-ball of existing entries replaces them only
    if it is at least as salient as every one of them (the newer solution
    wins a tie); otherwise it is dropped.
    """

    def __init__(self, dim: int, cfg: ArchiveConfig):
        self.dim = dim
        self.cfg = cfg
        self.positions = np.empty((0, dim))
        self.fitness = np.empty(0)
        self.saliency = np.empty(0)
        self.generation = np.empty(0, dtype=np.int64)
        self.changed = False

    def __len__(self) -> int:
        return len(self.fitness)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i) -> ArchivedSolution:
        return ArchivedSolution(self.positions[i].copy(), float(self.fitness[i]),
                                float(self.saliency[i]), int(self.generation[i]))

    def reset_change_flag(self):
        self.changed = False

    def try_insert(self, cand: ArchivedSolution) -> bool:
        x = np.asarray(cand.position, dtype=float).reshape(self.dim)
        if len(self):
            d = np.sqrt(np.sum((self.positions - x) ** 2, axis=1))
            clash = np.nonzero(d < self.cfg.rho)[0]
        else:
            clash = np.empty(0, dtype=np.int64)

        if len(clash):
            sign = 1.0 if self.cfg.sense == "max" else -1.0
            if np.any(sign * self.saliency[clash] > sign * cand.saliency):
                return False
            if (len(clash) == 1 and d[clash[0]] == 0.0
                    and self.fitness[clash[0]] == cand.fitness
                    and self.saliency[clash[0]] == cand.saliency):
                return False
            keep = np.ones(len(self), dtype=bool)
            keep[clash] = False
            self._select(keep)

        self.positions = np.vstack([self.positions, x])
        self.fitness = np.append(self.fitness, cand.fitness)
        self.saliency = np.append(self.saliency, cand.saliency)
        self.generation = np.append(self.generation, cand.generation_found)
        self.changed = True
        return True

    def _select(self, keep):
        self.positions = self.positions[keep]
        self.fitness = self.fitness[keep]
        self.saliency = self.saliency[keep]
        self.generation = self.generation[keep]

    def min_separation(self) -> float:
        if len(self) < 2:
            return np.inf
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        D = np.sqrt(np.sum(diff**2, axis=2))
        D[np.diag_indices_from(D)] = np.inf
        return float(D.min())


def matched_optima(archive: Archive, registry: OptimaRegistry, epsilon: float,
                   radius: float | None = None) -> list[int]:
    """Indices into ``registry.positions`` of optima found by the archive.

    An entry matches only its nearest optimum, and only if it lies within
    ``radius`` (default: the function's niching radius) and its fitness is
    within ``epsilon`` of the optimum's.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if radius is None:
        radius = make_function(registry.function_id).niching_radius
    opt_x = registry.positions
    opt_f = registry.fitness_at_optima
    if len(archive) == 0 or len(opt_x) == 0:
        return []
    diff = archive.positions[:, None, :] - opt_x[None, :, :]
    D = np.sqrt(np.sum(diff**2, axis=2))
    nearest = np.argmin(D, axis=1)
    rows = np.arange(len(archive))
    ok = (D[rows, nearest] <= radius) & (np.abs(archive.fitness - opt_f[nearest]) <= epsilon)
    return sorted(set(nearest[ok].tolist()))
