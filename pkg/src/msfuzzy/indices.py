"""Cluster-validity indices, selection of the number of clusters, and the
homogeneity (clusterless null) simulation test.

Distances are squared Euclidean throughout, the same geometry the fuzzy
objective uses.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import (AllWeightsZero, CoincidentCentroids, SingleClusterPartition,
                         UndefinedForSingleCluster)
from .fuzzy import FuzzyConfig, fuzzy_kmeans
from .types import MembershipMatrix, as_series, hard_assign, states_array

INDEX_NAMES = ("PC", "PE", "MPC", "ASW", "ASWF", "XB")
DIRECTION = {"PC": "max", "PE": "min", "MPC": "max", "ASW": "max", "ASWF": "max", "XB": "min"}


def _W(U) -> np.ndarray:
    return U.weights if isinstance(U, MembershipMatrix) else np.asarray(U, float)


def pc(U) -> float:
    W = _W(U)
    return float(np.sum(W * W) / W.shape[0])


def pe(U) -> float:
    W = _W(U)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(W > 0, W * np.log(W), 0.0)
    return float(-terms.sum() / W.shape[0])


def mpc(U) -> float:
    W = _W(U)
    k = W.shape[1]
    if k < 2:
        raise UndefinedForSingleCluster("MPC needs at least two clusters")
    return 1.0 - k / (k - 1.0) * (1.0 - pc(W))


def _labels0(partition):
    s = states_array(partition)
    _, inv = np.unique(s, return_inverse=True)
    return inv.astype(np.int64), int(inv.max()) + 1


def silhouette_values(y, partition, kernels=None) -> np.ndarray:
    """Per-observation silhouettes; singleton clusters contribute 0."""
    kern = kernels or _kernels.K
    y = np.ascontiguousarray(as_series(y).values, dtype=float)
    labels, k = _labels0(partition)
    if k < 2:
        raise SingleClusterPartition("silhouette needs at least two non-empty clusters")
    return kern.silhouette(y, labels, k)


def asw(y, partition, kernels=None) -> float:
    return float(np.mean(silhouette_values(y, partition, kernels)))


def _aswf_weights(W, lam):
    top2 = -np.sort(-W, axis=1)[:, :2]
    w = (top2[:, 0] - top2[:, 1]) ** lam
    if w.sum() == 0.0:
        raise AllWeightsZero("every membership row has a tie between its two largest grades")
    return w


def _aswf_from(s, W, lam):
    w = _aswf_weights(W, lam)
    return float(np.sum(w * s) / w.sum())


def aswf(y, U, lam: float = 1.0, kernels=None) -> float:
    """Silhouette average weighted by ``(u_(1) - u_(2))**lam`` per observation."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    W = _W(U)
    _aswf_weights(W, lam)
    s = silhouette_values(y, hard_assign(W), kernels)
    return _aswf_from(s, W, lam)


def xb(y, U, centroids) -> float:
    y = as_series(y).values
    W = _W(U)
    c = np.asarray(centroids, float)
    if c.size < 2:
        raise UndefinedForSingleCluster("Xie-Beni needs at least two centroids")
    sep = np.min((c[:, None] - c[None, :])[~np.eye(c.size, dtype=bool)] ** 2)
    if sep < 1e-12:
        raise CoincidentCentroids("two centroids coincide")
    num = np.sum(W * W * (y[:, None] - c[None, :]) ** 2)
    return float(num / (y.size * sep))


def all_indices(y, U, centroids, lam: float = 1.0, kernels=None) -> dict:
    W = _W(U)
    out = {"PC": pc(W), "PE": pe(W), "MPC": mpc(W)}
    try:
        s = silhouette_values(y, hard_assign(W), kernels)
        out["ASW"] = float(np.mean(s))
        out["ASWF"] = _aswf_from(s, W, lam)
    except (SingleClusterPartition, AllWeightsZero):
        out["ASW"] = out["ASWF"] = float("nan")
    try:
        out["XB"] = xb(y, W, centroids)
    except CoincidentCentroids:
        out["XB"] = float("nan")
    return out


@dataclass(frozen=True)
class SelectConfig:
    k_max: int = 6
    m: float = 2.0
    lam: float = 1.0
    fuzzy: FuzzyConfig = field(default_factory=FuzzyConfig)


@dataclass(frozen=True)
class IndexReport:
    ks: tuple
    values: dict            # index name -> array of values over ks
    selected_k: dict        # index name -> chosen k
    best_value: dict        # index name -> optimal value
    direction: dict = field(default_factory=lambda: dict(DIRECTION))

    def table(self):
        return [(k, *(self.values[n][i] for n in INDEX_NAMES)) for i, k in enumerate(self.ks)]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", *INDEX_NAMES])
            for row in self.table():
                w.writerow([row[0], *(repr(float(v)) for v in row[1:])])
            w.writerow(["selected", *(self.selected_k[n] for n in INDEX_NAMES)])


def _pick(vals: np.ndarray, direction: str) -> int:
    # nan-safe, ties go to the smallest k
    v = np.where(np.isnan(vals), -np.inf if direction == "max" else np.inf, vals)
    return int(np.argmax(v) if direction == "max" else np.argmin(v))


def select_k(y, k_max: int = 6, m: float = 2.0, config: SelectConfig = None,
             kernels=None) -> IndexReport:
    """Cluster for ``k = 2..k_max`` and pick the optimum of each validity index."""
    cfg = config or SelectConfig(k_max=k_max, m=m)
    y = as_series(y)
    if cfg.k_max < 2:
        raise ValueError("k_max must be at least 2")
    if len(y) < cfg.k_max:
        raise ValueError("need at least k_max observations")
    ks = tuple(range(2, cfg.k_max + 1))
    rows = []
    for k in ks:
        res = fuzzy_kmeans(y, k, cfg.m, cfg.fuzzy, kernels)
        rows.append(all_indices(y, res.membership, res.centroids, cfg.lam, kernels))
    values = {n: np.array([r[n] for r in rows]) for n in INDEX_NAMES}
    selected, best = {}, {}
    for n in INDEX_NAMES:
        i = _pick(values[n], DIRECTION[n])
        selected[n] = ks[i]
        best[n] = float(values[n][i])
    return IndexReport(ks, values, selected, best)


def homogeneity_test(y, index_values: dict, n_sim: int = 2000, rng_seed=0,
                     config: SelectConfig = None, return_null: bool = False):
    """Simulation p-values of observed best index values under an i.i.d. Normal null.

    Each null series has the sample mean and variance of ``y`` and its length;
    its best value over ``k = 2..k_max`` is compared with the observed one in
    the index's favourable direction, with ``(r + 1) / (n + 1)`` p-values.
    """
    if n_sim < 100:
        raise ValueError("n_sim must be at least 100")
    cfg = config or SelectConfig()
    vals = as_series(y).values
    mu, sd = vals.mean(), vals.std(ddof=1)
    children = np.random.SeedSequence(rng_seed).spawn(n_sim)
    null = {n: np.empty(n_sim) for n in INDEX_NAMES}
    for i, child in enumerate(children):
        z = mu + sd * np.random.default_rng(child).standard_normal(vals.size)
        rep = select_k(z, config=cfg)
        for n in INDEX_NAMES:
            null[n][i] = rep.best_value[n]
    pvals = {}
    for n, obs in index_values.items():
        draws = null[n]
        hits = draws >= obs if DIRECTION[n] == "max" else draws <= obs
        pvals[n] = (int(np.sum(hits)) + 1) / (n_sim + 1)
    return (pvals, null) if return_null else pvals
