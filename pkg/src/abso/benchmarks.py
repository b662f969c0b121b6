"""Seven low-dimensional maximisation problems from the CEC2013 niching suite.

All objectives take an ``(N, dim)`` array and return ``N`` values. The
optimum registry lives in ``data/optima.json`` and is regenerated by
``scripts/build_optima.py``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Callable

import numpy as np

from .core import Bounds, EvaluationBudget, as_position

__all__ = [
    "FUNCTION_IDS",
    "BenchmarkFunction",
    "OptimaRegistry",
    "evaluate",
    "evaluate_batch",
    "make_function",
    "registered_optima",
]

FUNCTION_IDS = ("F1", "F2", "F3", "F4", "F5", "F6", "F7")
REGISTRY_VERSION = 1


def five_uneven_peak_trap(x: np.ndarray) -> np.ndarray:
    x = x[:, 0]
    conds = [
        x < 2.5,
        x < 5.0,
        x < 7.5,
        x < 12.5,
        x < 17.5,
        x < 22.5,
        x < 27.5,
    ]
    vals = [
        80.0 * (2.5 - x),
        64.0 * (x - 2.5),
        64.0 * (7.5 - x),
        28.0 * (x - 7.5),
        28.0 * (17.5 - x),
        32.0 * (x - 17.5),
        32.0 * (27.5 - x),
    ]
    return np.select(conds, vals, default=80.0 * (x - 27.5))


def equal_maxima(x: np.ndarray) -> np.ndarray:
    return np.sin(5.0 * np.pi * x[:, 0]) ** 6


def uneven_decreasing_maxima(x: np.ndarray) -> np.ndarray:
    x = x[:, 0]
    envelope = np.exp(-2.0 * np.log(2.0) * ((x - 0.08) / 0.854) ** 2)
    return envelope * np.sin(5.0 * np.pi * (x**0.75 - 0.05)) ** 6


def himmelblau(x: np.ndarray) -> np.ndarray:
    a, b = x[:, 0], x[:, 1]
    return 200.0 - (a**2 + b - 11.0) ** 2 - (a + b**2 - 7.0) ** 2


def six_hump_camel_back(x: np.ndarray) -> np.ndarray:
    a, b = x[:, 0], x[:, 1]
    a2 = a**2
    b2 = b**2
    return -((4.0 - 2.1 * a2 + a2**2 / 3.0) * a2 + a * b + (4.0 * b2 - 4.0) * b2)


_SHUBERT_J = np.arange(1, 6, dtype=float)


def shubert(x: np.ndarray) -> np.ndarray:
    # product over dimensions of sum_j j*cos((j+1)*x_i + j), negated
    terms = _SHUBERT_J * np.cos((_SHUBERT_J + 1.0) * x[:, :, None] + _SHUBERT_J)
    return -np.prod(terms.sum(axis=2), axis=1)


_RASTRIGIN_K = np.array([3.0, 4.0])


def modified_rastrigin(x: np.ndarray) -> np.ndarray:
    return -np.sum(10.0 + 9.0 * np.cos(2.0 * np.pi * _RASTRIGIN_K * x), axis=1)


@dataclass(frozen=True)
class BenchmarkFunction:
    id: str
    name: str
    dim: int
    bounds: Bounds
    peak_height: float
    niching_radius: float
    max_fes: int
    objective: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate without touching any budget (for oracles and plotting)."""
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 1:
            return float(self.objective(arr.reshape(1, -1))[0])
        return self.objective(arr)


_TABLE = {
    # id: (name, dim, lower, upper, peak height, niching radius, MaxFes, objective)
    "F1": ("Five-Uneven-Peak Trap", 1, [0.0], [30.0], 200.0, 0.01, 50_000, five_uneven_peak_trap),
    "F2": ("Equal Maxima", 1, [0.0], [1.0], 1.0, 0.01, 50_000, equal_maxima),
    "F3": ("Uneven Decreasing Maxima", 1, [0.0], [1.0], 1.0, 0.01, 50_000, uneven_decreasing_maxima),
    "F4": ("Himmelblau", 2, [-6.0, -6.0], [6.0, 6.0], 200.0, 0.01, 50_000, himmelblau),
    "F5": ("Six-Hump Camel Back", 2, [-1.9, -1.1], [1.9, 1.1], 1.03163, 0.5, 50_000, six_hump_camel_back),
    "F6": ("Shubert", 2, [-10.0, -10.0], [10.0, 10.0], 186.731, 0.5, 200_000, shubert),
    "F7": ("Modified Rastrigin", 2, [0.0, 0.0], [1.0, 1.0], -2.0, 0.01, 200_000, modified_rastrigin),
}


@lru_cache(maxsize=None)
def make_function(fid: str) -> BenchmarkFunction:
    try:
        name, dim, lo, hi, ph, rho, fes, obj = _TABLE[fid]
    except KeyError:
        raise ValueError(f"unknown function id {fid!r}; expected one of {FUNCTION_IDS}") from None
    return BenchmarkFunction(fid, name, dim, Bounds(np.array(lo), np.array(hi)), ph, rho, fes, obj)


def evaluate(f: BenchmarkFunction, p, budget: EvaluationBudget) -> float:
    """Evaluate one position, charging one evaluation to ``budget``.

    Raises :class:`~abso.core.BudgetExhausted` when nothing is left.
    """
    p = as_position(p, f.dim)
    budget.consume(1)
    return float(f.objective(p.reshape(1, -1))[0])


def evaluate_batch(f: BenchmarkFunction, X: np.ndarray, budget: EvaluationBudget) -> np.ndarray:
    """Evaluate as many leading rows of ``X`` as the budget allows.

    Returns an array whose length is the number of rows actually evaluated,
    which is shorter than ``len(X)`` only when the budget runs out. Never
    raises; an exhausted budget gives an empty array.
    """
    X = np.asarray(X, dtype=float)
    k = min(len(X), budget.remaining)
    if k == 0:
        return np.empty(0)
    budget.consume(k)
    return f.objective(X[:k])


@dataclass(frozen=True)
class OptimaRegistry:
    function_id: str
    global_optima: np.ndarray
    local_optima: np.ndarray
    global_fitness: np.ndarray
    local_fitness: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        """Global optima first, then local."""
        return np.vstack([self.global_optima, self.local_optima])

    @property
    def fitness_at_optima(self) -> np.ndarray:
        return np.concatenate([self.global_fitness, self.local_fitness])

    @property
    def n_global(self) -> int:
        return len(self.global_optima)

    @property
    def n_local(self) -> int:
        return len(self.local_optima)


def _load_registry_file() -> dict:
    text = resources.files("abso").joinpath("data/optima.json").read_text()
    doc = json.loads(text)
    if doc.get("version") != REGISTRY_VERSION:
        raise ValueError(f"optima registry version {doc.get('version')} unsupported")
    return doc["functions"]


@lru_cache(maxsize=None)
def registered_optima(fid: str) -> OptimaRegistry:
    f = make_function(fid)
    entry = _load_registry_file()[fid]

    def block(kind):
        pts = entry[kind]
        pos = np.array([p["x"] for p in pts], dtype=float).reshape(-1, f.dim)
        fit = np.array([p["f"] for p in pts], dtype=float)
        return pos, fit

    gpos, gfit = block("global")
    lpos, lfit = block("local")
    return OptimaRegistry(fid, gpos, lpos, gfit, lfit)
