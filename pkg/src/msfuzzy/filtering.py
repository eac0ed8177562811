"""Hamilton filter, Kim smoother and smoothed state inference.

MS-AR(1) models are filtered exactly on the ``k**2`` chain of state pairs
``(s_{t-1}, s_t)``, conditioning on the first observation. For those models
row ``t = 1`` of the predicted and filtered paths holds the ergodic
distribution, and its smoothed row is the pair posterior of ``t = 2``
marginalised onto ``s_1``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import ergodic_probabilities
from .exceptions import DegenerateLikelihood, DivisionByZeroProbability, UnsupportedOrder
from .types import (MSModelSpec, ProbabilityPaths, StatePath, TimeSeries, as_series,
                    hard_assign)


@dataclass(frozen=True)
class FilterOutput:
    """Result of :func:`hamilton_filter`.

    ``paths.smoothed`` is a copy of the filtered path until :func:`kim_smoother`
    is applied. ``cond_densities`` has one row per filtered observation
    (``T - p`` rows) and one column per (augmented) state; ``aug_*`` keep the
    augmented-chain quantities the smoother needs.
    """

    paths: ProbabilityPaths
    loglik: float
    cond_densities: np.ndarray
    loglik_terms: np.ndarray
    k: int
    p: int
    aug_predicted: np.ndarray
    aug_filtered: np.ndarray
    aug_transition: np.ndarray


def _check(y, spec):
    if spec.p > 1:
        raise UnsupportedOrder("only p in {0, 1} is implemented")
    if len(y) < spec.p + 1:
        raise ValueError(f"need at least {spec.p + 1} observations")


def _marginals(aug: np.ndarray, k: int, p: int) -> np.ndarray:
    if p == 0:
        return aug
    # column a = i*k + j holds (s_{t-1}=i, s_t=j); marginal of s_t sums over i
    return aug.reshape(-1, k, k).sum(axis=1)


def hamilton_filter(y, spec: MSModelSpec, kernels=None) -> FilterOutput:
    """Forward recursion giving predicted/filtered probabilities and the log-likelihood.

    Parameters
    ----------
    y : TimeSeries or array_like
    spec : MSModelSpec
        Model with ``p`` in ``{0, 1}``.
    kernels : namespace, optional
        Kernel backend; defaults to the one selected at import time.

    Returns
    -------
    FilterOutput
    """
    kern = kernels or _kernels.K
    y = as_series(y)
    _check(y, spec)
    k, p = spec.k, spec.p
    P = spec.transition.probs
    ergodic_probabilities(P)  # raises on non-ergodic chains
    phi = float(spec.ar_coeffs[0]) if p else 0.0
    vals = np.ascontiguousarray(y.values, dtype=float)
    init, trans, logdens = kern.build_system(vals, spec.means.astype(float), phi,
                                             spec.sigma, np.ascontiguousarray(P), p)
    pred, filt, ll, ok = kern.hamilton(init, trans, logdens)
    if not ok:
        bad = int(np.argmin(np.isfinite(ll))) + p + 1
        raise DegenerateLikelihood(
            f"filter normalizing constant is zero at t={bad}; sigma too small for the data?")
    mp = _marginals(pred, k, p)
    mf = _marginals(filt, k, p)
    if p:
        pi = ergodic_probabilities(P)
        mp = np.vstack([pi, mp])
        mf = np.vstack([pi, mf])
    return FilterOutput(
        paths=ProbabilityPaths(mp, mf, mf),
        loglik=float(ll.sum()),
        cond_densities=np.exp(logdens),
        loglik_terms=ll,
        k=k, p=p,
        aug_predicted=pred, aug_filtered=filt, aug_transition=trans,
    )


def kim_smoother(filter_out: FilterOutput, P=None, kernels=None) -> ProbabilityPaths:
    """Backward recursion ``xi_{t|T} = xi_{t|t} * (P (xi_{t+1|T} / xi_{t+1|t}))``.

    ``P`` is accepted for symmetry with the textbook signature; the (possibly
    augmented) transition matrix stored in ``filter_out`` is what is used.
    """
    kern = kernels or _kernels.K
    fo = filter_out
    sm, bad = kern.kim(fo.aug_predicted, fo.aug_filtered, fo.aug_transition)
    if bad:
        raise DivisionByZeroProbability(
            "zero predicted probability for a state with positive smoothed probability")
    k, p = fo.k, fo.p
    ms = _marginals(sm, k, p)
    if p:
        first = sm[0].reshape(k, k).sum(axis=1)
        ms = np.vstack([first, ms])
    ms = ms / ms.sum(axis=1, keepdims=True)
    return ProbabilityPaths(fo.paths.predicted, fo.paths.filtered, ms)


def filter_and_smooth(y, spec: MSModelSpec, kernels=None) -> FilterOutput:
    fo = hamilton_filter(y, spec, kernels)
    paths = kim_smoother(fo, spec.transition, kernels)
    return FilterOutput(paths, fo.loglik, fo.cond_densities, fo.loglik_terms, fo.k, fo.p,
                        fo.aug_predicted, fo.aug_filtered, fo.aug_transition)


def infer_states(y, spec: MSModelSpec) -> StatePath:
    """Assign each observation to its modal smoothed state."""
    return hard_assign(filter_and_smooth(y, spec).paths.smoothed)


def write_smoothed_csv(path, y: TimeSeries, paths: ProbabilityPaths, states: StatePath = None):
    """Write ``t, label, y, Pr(s_t=1|I_T) .. Pr(s_t=k|I_T), state`` rows."""
    y = as_series(y)
    sm = paths.smoothed
    states = states if states is not None else hard_assign(sm)
    k = sm.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "label", "y"] + [f"p_smoothed_{j + 1}" for j in range(k)] + ["state"])
        for t in range(len(y)):
            label = y.labels[t] if y.labels is not None else ""
            w.writerow([t + 1, label, repr(float(y.values[t]))]
                       + [repr(float(v)) for v in sm[t]] + [int(states.states[t])])
