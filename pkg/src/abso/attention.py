"""Saliency: neighbour-weighted fitness contrast in the "attention" space.

For an individual ``i`` with neighbours ``N(i)`` (its ``m`` nearest pool
members, self excluded)::

    s_i = 1/|N(i)| * sum_{j in N(i)} exp(-d_ij / sigma_sq) * (f_i - f_j)

Neighbour search is exact brute force; distance ties are broken by the
lower pool index so every run replays identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "NeighborSet",
    "SaliencyConfig",
    "batch_saliency",
    "external_saliency",
    "is_absolutely_salient",
    "nearest_neighbors",
    "salience_key",
    "saliency",
    "weight",
]


@dataclass(frozen=True)
class SaliencyConfig:
    m: int = 20
    sigma_sq: float = 0.4
    sense: Literal["max", "min"] = "max"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if not self.sigma_sq > 0:
            raise ValueError("sigma_sq must be positive")
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")

    @property
    def sign(self) -> float:
        return 1.0 if self.sense == "max" else -1.0


@dataclass(frozen=True)
class NeighborSet:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.indices)


def weight(d, cfg: SaliencyConfig):
    return np.exp(-np.asarray(d, dtype=float) / cfg.sigma_sq)


def salience_key(s, cfg: SaliencyConfig):
    """Larger means more salient, whatever the optimisation sense."""
    return cfg.sign * np.asarray(s, dtype=float)


def _pairwise(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # column-by-column keeps temporaries 2-D; dims are tiny
    sq = np.zeros((len(A), len(B)))
    for k in range(A.shape[1]):
        diff = A[:, k, None] - B[None, :, k]
        diff *= diff
        sq += diff
    return np.sqrt(sq, out=sq)


def _knn(D: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` smallest entries per row of ``D``.

    Ties at the cut-off go to the lower column index. Rows come back in
    arbitrary order within the selected set.
    """
    q, P = D.shape
    if k >= P:
        return np.broadcast_to(np.arange(P), (q, P)).copy()
    idx = np.argpartition(D, k - 1, axis=1)[:, :k]
    rows = np.arange(q)[:, None]
    kth = D[rows, idx].max(axis=1)
    # argpartition picks an arbitrary member of a tie at the cut-off; redo those rows
    ambiguous = np.count_nonzero(D <= kth[:, None], axis=1) > k
    for r in np.nonzero(ambiguous)[0]:
        idx[r] = np.argsort(D[r], kind="stable")[:k]
    return idx


def _ordered(D_row: np.ndarray, idx: np.ndarray):
    order = np.lexsort((idx, D_row[idx]))
    return idx[order], D_row[idx][order]


def nearest_neighbors(query_index: int, positions, cfg: SaliencyConfig) -> NeighborSet:
    """The ``min(m, N-1)`` pool members nearest to ``positions[query_index]``.

    Sorted by distance, ties by index. A single-member pool yields an empty
    set.
    """
    X = np.asarray(positions, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = len(X)
    if not 0 <= query_index < n:
        raise IndexError(f"query index {query_index} outside pool of size {n}")
    if n < 2:
        return NeighborSet(np.empty(0, dtype=np.int64), np.empty(0))
    D = _pairwise(X[query_index : query_index + 1], X)[0]
    D[query_index] = np.inf
    k = min(cfg.m, n - 1)
    idx = _knn(D[None, :], k)[0]
    return NeighborSet(*_ordered(D, idx))


def saliency(query_index: int, positions, fitness, cfg: SaliencyConfig) -> float:
    nb = nearest_neighbors(query_index, positions, cfg)
    if len(nb) == 0:
        return 0.0
    f = np.asarray(fitness, dtype=float)
    return float(np.mean(weight(nb.distances, cfg) * (f[query_index] - f[nb.indices])))


def is_absolutely_salient(query_index: int, positions, fitness, cfg: SaliencyConfig) -> bool:
    nb = nearest_neighbors(query_index, positions, cfg)
    if len(nb) == 0:
        return False
    key = salience_key(fitness, cfg)
    return bool(np.all(key[query_index] > key[nb.indices]))


def _contrast(D, f_query, f_pool, k, cfg):
    idx = _knn(D, k)
    rows = np.arange(len(D))[:, None]
    d = D[rows, idx]
    fn = f_pool[idx]
    s = np.mean(np.exp(-d / cfg.sigma_sq) * (f_query[:, None] - fn), axis=1)
    key_q = cfg.sign * f_query
    absolute = np.all(key_q[:, None] > cfg.sign * fn, axis=1)
    return s, absolute


def batch_saliency(pop_x, pop_f, arch_x=None, arch_f=None, cfg: SaliencyConfig = SaliencyConfig()):
    """Saliency and absolute-salience flags for every population member.

    The neighbour pool is the population followed by the archive; archive
    members are candidates for neighbourhoods but are not scored themselves.

    Returns
    -------
    saliency : ndarray, shape (n,)
    absolute : bool ndarray, shape (n,)
    """
    pop_x = np.asarray(pop_x, dtype=float)
    pop_f = np.asarray(pop_f, dtype=float)
    if pop_x.ndim == 1:
        pop_x = pop_x[:, None]
    n = len(pop_x)
    if arch_x is not None and len(arch_x):
        pool_x = np.vstack([pop_x, np.asarray(arch_x, dtype=float).reshape(-1, pop_x.shape[1])])
        pool_f = np.concatenate([pop_f, np.asarray(arch_f, dtype=float)])
    else:
        pool_x, pool_f = pop_x, pop_f
    P = len(pool_x)
    if P < 2:
        return np.zeros(n), np.zeros(n, dtype=bool)
    D = _pairwise(pop_x, pool_x)
    D[np.arange(n), np.arange(n)] = np.inf
    return _contrast(D, pop_f, pool_f, min(cfg.m, P - 1), cfg)


def external_saliency(query_x, query_f, pool_x, pool_f, cfg: SaliencyConfig):
    """Saliency of points that are not pool members (offspring candidates).

    Uses the ``min(m, len(pool))`` nearest pool members; nothing is excluded.
    """
    query_x = np.asarray(query_x, dtype=float)
    pool_x = np.asarray(pool_x, dtype=float)
    query_f = np.asarray(query_f, dtype=float)
    if len(pool_x) == 0 or len(query_x) == 0:
        return np.zeros(len(query_x)), np.zeros(len(query_x), dtype=bool)
    D = _pairwise(query_x, pool_x)
    return _contrast(D, query_f, np.asarray(pool_f, dtype=float), min(cfg.m, len(pool_x)), cfg)
