"""Fuzzy k-means clustering of scalar observations."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import DegenerateDataWarning
from .types import MembershipMatrix, as_series, hard_assign


@dataclass(frozen=True)
class FuzzyConfig:
    n_starts: int = 10
    tol: float = 1e-9
    max_iter: int = 300
    jitter: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class FuzzyResult:
    membership: MembershipMatrix
    centroids: np.ndarray
    objective: float
    iterations: int
    converged: bool
    objective_history: np.ndarray = None

    @property
    def k(self) -> int:
        return self.centroids.size


def _initial_centroids(y, k, start, rng, jitter):
    # start 0: evenly spaced quantiles; later starts: random quantile levels
    if start == 0:
        levels = (np.arange(k) + 0.5) / k
    else:
        levels = np.sort(rng.random(k))
    noise = rng.standard_normal(k)
    return np.quantile(y, levels) + jitter * y.std() * noise


def fuzzy_kmeans(y, k: int, m: float = 2.0, config: FuzzyConfig = None, kernels=None) -> FuzzyResult:
    """Minimise ``sum_t sum_j u_tj**m (y_t - c_j)**2`` over memberships and centroids.

    The best of ``config.n_starts`` quantile-seeded starts (lowest objective) is
    returned with centroids sorted in descending order.
    """
    cfg = config or FuzzyConfig()
    kern = kernels or _kernels.K
    y = np.ascontiguousarray(as_series(y).values, dtype=float)
    if k < 1:
        raise ValueError("k must be at least 1")
    if m <= 1.0:
        raise ValueError("fuzziness m must exceed 1")
    if y.size < k:
        raise ValueError(f"need at least k={k} observations")
    if k == 1:
        c = np.array([y.mean()])
        obj = float(np.sum((y - c[0]) ** 2))
        return FuzzyResult(MembershipMatrix(np.ones((y.size, 1))), c, obj, 0, True,
                           np.array([obj]))
    if np.all(y == y[0]):
        warnings.warn("all observations are identical; memberships are uniform",
                      DegenerateDataWarning, stacklevel=2)
        return FuzzyResult(MembershipMatrix(np.full((y.size, k), 1.0 / k)),
                           np.full(k, y[0]), 0.0, 0, False, np.array([0.0]))

    rng = np.random.default_rng(cfg.seed)
    best = None
    for start in range(cfg.n_starts):
        c0 = _initial_centroids(y, k, start, rng, cfg.jitter)
        U, c, obj, it, conv, hist = kern.fcm(y, c0, float(m), cfg.tol, cfg.max_iter)
        if best is None or obj < best[2]:
            best = (U, c, obj, it, conv, hist)
    U, c, obj, it, conv, hist = best
    order = np.argsort(-c, kind="stable")
    return FuzzyResult(MembershipMatrix(U[:, order]), c[order], float(obj), int(it),
                       bool(conv), hist)


def write_membership_csv(path, result: FuzzyResult, labels=None):
    """Write ``t, [label,] u_t1 .. u_tk, state`` rows."""
    U = result.membership.weights
    states = hard_assign(U).states
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["t"] + (["label"] if labels is not None else [])
        w.writerow(head + [f"u_{j + 1}" for j in range(U.shape[1])] + ["state"])
        for t in range(U.shape[0]):
            row = [t + 1] + ([labels[t]] if labels is not None else [])
            w.writerow(row + [repr(float(v)) for v in U[t]] + [int(states[t])])
