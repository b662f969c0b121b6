"""Shared domain types: positions, bounds, the seeded random stream, budgets.

Positions are plain 1-D float64 numpy arrays. Populations are 2-D arrays of
shape ``(n, dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

__all__ = [
    "Bounds",
    "BudgetExhausted",
    "EvaluationBudget",
    "Individual",
    "RandomSource",
    "as_position",
    "clamp_to_bounds",
    "euclidean_distance",
    "uniform_position",
]

# smallest uniform fed to the inverse normal CDF; keeps ndtri finite
_TINY = 2.0**-53


def as_position(coords, dim: int | None = None) -> np.ndarray:
    """Validate ``coords`` and return them as a finite 1-D float array."""
    p = np.atleast_1d(np.asarray(coords, dtype=float))
    if p.ndim != 1:
        raise ValueError(f"position must be 1-D, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"position has dim {p.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(p)):
        raise ValueError("position coordinates must be finite")
    return p


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned search box with ``lower[i] < upper[i]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_position(self.lower)
        hi = as_position(self.upper)
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in dimension")
        if not np.all(lo < hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all((p >= self.lower) & (p <= self.upper)))


@dataclass
class Individual:
    position: np.ndarray
    fitness: float | None = None
    saliency: float | None = None
    birth_generation: int = 0


class RandomSource:
    """Seeded stream of uniform doubles in ``[0, 1)``.

    Every draw consumes uniforms from a single PCG64 stream: a uniform real
    takes one, a standard normal takes one (inverse-CDF transform), and a
    uniform integer in ``[0, n)`` takes one (``floor(u * n)``). Because each
    primitive costs exactly one uniform, a block of ``rows * cols`` uniforms
    drawn at once is identical to the same number of scalar draws made in
    row-major order, which lets the engine vectorise without changing the
    replay order.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, shape) -> np.ndarray:
        return self._gen.random(shape)

    def normal(self) -> float:
        return float(normal_from_uniform(self._gen.random()))

    def integer(self, n: int) -> int:
        if n < 1:
            raise ValueError("integer range must be non-empty")
        return int_from_uniform(self._gen.random(), n)

    def state(self) -> dict:
        return self._gen.bit_generator.state


def normal_from_uniform(u):
    """Standard normal deviate(s) from uniform(s) in [0, 1)."""
    return ndtri(np.maximum(u, _TINY))


def int_from_uniform(u, n):
    """Uniform integer(s) in ``[0, n)`` from uniform(s) in [0, 1)."""
    k = np.floor(np.asarray(u) * n).astype(np.int64)
    k = np.minimum(k, np.asarray(n) - 1)
    return int(k) if k.ndim == 0 else k


class BudgetExhausted(Exception):
    """Raised when an evaluation is requested after the budget is spent."""


@dataclass
class EvaluationBudget:
    max_fes: int
    used_fes: int = field(default=0)

    def __post_init__(self):
        if self.max_fes < 1:
            raise ValueError("max_fes must be positive")
        if not 0 <= self.used_fes <= self.max_fes:
            raise ValueError("used_fes out of range")

    @property
    def remaining(self) -> int:
        return self.max_fes - self.used_fes

    @property
    def exhausted(self) -> bool:
        return self.used_fes >= self.max_fes

    def consume(self, k: int = 1) -> int:
        """Reserve up to ``k`` evaluations and return how many were granted."""
        granted = min(int(k), self.remaining)
        if k > 0 and granted == 0:
            raise BudgetExhausted(f"evaluation budget of {self.max_fes} spent")
        self.used_fes += granted
        return granted


def clamp_to_bounds(p, b: Bounds) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != b.dim:
        raise ValueError(f"position dim {p.shape[-1]} does not match bounds dim {b.dim}")
    return np.clip(p, b.lower, b.upper)


def uniform_position(b: Bounds, rng: RandomSource) -> np.ndarray:
    return positions_from_uniforms(rng.uniforms(b.dim), b)


def positions_from_uniforms(u, b: Bounds) -> np.ndarray:
    """Rescale uniforms in [0, 1) to the box; works on one row or a block."""
    return b.lower + np.asarray(u) * b.width


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))
