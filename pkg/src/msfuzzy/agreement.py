"""Partition agreement (plain Rand index) and moving-average smoothing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import LengthMismatch, WindowTooLarge
from .types import TimeSeries, as_series, states_array


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency_table(a, b) -> ContingencyTable:
    a = states_array(a)
    b = states_array(b)
    if a.size != b.size:
        raise LengthMismatch(f"partitions have lengths {a.size} and {b.size}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    counts = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(counts, (ia, ib), 1)
    return ContingencyTable(counts)


def rand_index(a, b) -> float:
    """Fraction of observation pairs on which partitions ``a`` and ``b`` agree.

    Computed from the contingency table as
    ``[C(T,2) - (sum_i n_i.^2 + sum_j n_.j^2)/2 + sum_ij n_ij^2] / C(T,2)``.
    """
    tab = contingency_table(a, b).counts
    T = int(tab.sum())
    if T < 2:
        raise ValueError("need at least two observations")
    pairs = T * (T - 1) // 2
    rows = int(np.sum(tab.sum(axis=1) ** 2))
    cols = int(np.sum(tab.sum(axis=0) ** 2))
    cells = int(np.sum(tab ** 2))
    # integer arithmetic keeps the closed form exact; rows + cols is always even
    return (pairs - (rows + cols) // 2 + cells) / pairs


def rand_summary(values) -> tuple:
    """(min, Q1, median, Q3, max) with linearly interpolated quantiles."""
    v = np.asarray(values, float)
    if v.size == 0:
        raise ValueError("rand_summary needs at least one value")
    return tuple(float(q) for q in np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0]))


def moving_average(y, window: int) -> TimeSeries:
    """Centered equal-weight moving average over an odd ``window``; output has
    ``T - window + 1`` points and labels trimmed symmetrically."""
    y = as_series(y)
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    if window > len(y):
        raise WindowTooLarge(f"window {window} exceeds series length {len(y)}")
    if window == 1:
        return y
    vals = np.convolve(y.values, np.full(window, 1.0 / window), mode="valid")
    h = window // 2
    labels = None if y.labels is None else y.labels[h:len(y) - h]
    return TimeSeries(vals, labels)
