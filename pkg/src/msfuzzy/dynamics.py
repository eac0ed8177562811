"""Markov-chain utilities, MS/MS-AR simulation and the 32-model DGP catalog."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from .exceptions import AbsorbingState, NonErgodicChain, UnknownLabel, UnsupportedOrder
from .types import MSModelSpec, StatePath, TimeSeries, TransitionMatrix, make_spec

BURN_IN = 200
ERGODIC_TOL = 1e-10

P2 = np.array([[0.9, 0.1],
               [0.2, 0.8]])
P3 = np.array([[0.90, 0.07, 0.03],
               [0.15, 0.80, 0.05],
               [0.10, 0.20, 0.70]])
AR_COEF = 0.7


def _probs(P) -> np.ndarray:
    return P.probs if isinstance(P, TransitionMatrix) else np.asarray(P, float)


def is_primitive(P) -> bool:
    """True if some power ``P**n`` with ``n <= k**2`` is strictly positive."""
    A = (_probs(P) > 0).astype(np.int64)
    k = A.shape[0]
    M = A.copy()
    for _ in range(k * k):
        if np.all(M > 0):
            return True
        M = np.minimum(M @ A, 1)
    return bool(np.all(M > 0))


def ergodic_probabilities(P) -> np.ndarray:
    """Stationary distribution ``pi`` with ``pi' P = pi'`` of an ergodic chain."""
    P = _probs(P)
    if not is_primitive(P):
        raise NonErgodicChain("transition matrix is not irreducible and aperiodic")
    k = P.shape[0]
    A = np.vstack([P.T - np.eye(k), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi = np.linalg.lstsq(A, b, rcond=None)[0]
    if np.any(pi <= 0) or np.max(np.abs(pi @ P - pi)) > ERGODIC_TOL:
        raise NonErgodicChain("no strictly positive stationary vector found")
    return pi / pi.sum()


def mean_duration(p_ii: float) -> float:
    """Expected sojourn ``1 / (1 - p_ii)`` in a state with persistence ``p_ii``."""
    if p_ii >= 1.0:
        raise AbsorbingState("state with p_ii = 1 is absorbing")
    if p_ii < 0.0:
        raise ValueError("p_ii must be a probability")
    return 1.0 / (1.0 - p_ii)


def _draw_chain(P, n, rng) -> np.ndarray:
    pi = ergodic_probabilities(P)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(n)
    s = np.empty(n, dtype=np.int64)
    s[0] = min(np.searchsorted(np.cumsum(pi), u[0], side="right"), P.shape[0] - 1)
    for t in range(1, n):
        s[t] = np.searchsorted(cum[s[t - 1]], u[t], side="right")
    return s


def simulate_chain(P, T: int, rng_seed=None) -> StatePath:
    """Simulate ``T`` steps of the chain, starting from its ergodic distribution.

    ``rng_seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    P = _probs(P)
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(rng_seed)
    return StatePath(_draw_chain(P, T, rng) + 1, k=P.shape[0])


def simulate_ms(spec: MSModelSpec, T: int, rng_seed=None):
    """Draw ``(TimeSeries, StatePath)`` of length ``T`` from an MS(k)-AR(p) model.

    The chain starts from its ergodic distribution and the AR recursion from
    zero deviations; the first ``BURN_IN`` draws are discarded.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(rng_seed)
    n = T + BURN_IN
    s = _draw_chain(spec.transition.probs, n, rng)
    eps = rng.standard_normal(n) * spec.sigma
    mu = spec.means[s]
    if spec.p == 0:
        y = mu + eps
    else:
        phi = spec.ar_coeffs
        dev = np.zeros(n)
        for t in range(n):
            acc = eps[t]
            for i in range(min(spec.p, t)):
                acc += phi[i] * dev[t - 1 - i]
            dev[t] = acc
        y = mu + dev
    return TimeSeries(y[BURN_IN:]), StatePath(s[BURN_IN:] + 1, k=spec.k)


def mixture_components(spec: MSModelSpec):
    """Weights and means of the ergodic Normal mixture (common sd ``spec.sigma``).

    For AR(1) models the components are indexed by state pairs ``(i, j)`` with
    weight ``pi_i p_ij`` and location ``(mu_j - phi mu_i) / (1 - phi)``.
    """
    if spec.p > 1:
        raise UnsupportedOrder("mixture density implemented for p in {0, 1}")
    pi = ergodic_probabilities(spec.transition)
    if spec.p == 0:
        return pi, spec.means.copy()
    phi = spec.ar_coeffs[0]
    P = spec.transition.probs
    w = (pi[:, None] * P).ravel()
    loc = ((spec.means[None, :] - phi * spec.means[:, None]) / (1.0 - phi)).ravel()
    return w, loc


def ergodic_mixture_density(spec: MSModelSpec, grid) -> np.ndarray:
    w, loc = mixture_components(spec)
    x = np.asarray(grid, float)
    return norm.pdf(x[:, None], loc=loc[None, :], scale=spec.sigma) @ w


@dataclass(frozen=True)
class DGPCatalogEntry:
    label: str
    spec: MSModelSpec

    def to_record(self) -> dict:
        return {"label": self.label, **self.spec.to_dict()}


@lru_cache(maxsize=1)
def _catalog() -> tuple:
    # means (0, d) or (0, d, 2d); rows 1-4 use sigma 0.5, rows 5-8 sigma 0.25
    grid = [(d, 0.5) for d in (1, 2, 3, 4)] + [(d, 0.25) for d in (1, 2, 3, 4)]
    entries = []
    for k, P in ((2, P2), (3, P3)):
        for tag, phi in (("", ()), ("AR", (AR_COEF,))):
            for idx, (d, sig) in enumerate(grid, start=1):
                means = np.arange(k) * float(d)
                entries.append(DGPCatalogEntry(f"MS{k}{tag}--{idx}", make_spec(means, sig, P, phi)))
    return tuple(entries)


def dgp_catalog() -> list:
    """All 32 Monte Carlo DGPs, ordered MS2, MS2AR, MS3, MS3AR."""
    return list(_catalog())


def normalize_label(label: str) -> str:
    lab = label.strip().upper().replace("–", "--")
    if "--" not in lab and "-" in lab:
        lab = lab.replace("-", "--")
    return lab


def get_dgp(label: str) -> DGPCatalogEntry:
    lab = normalize_label(label)
    for entry in _catalog():
        if entry.label == lab:
            return entry
    raise UnknownLabel(f"unknown DGP label {label!r}")


def catalog_json() -> str:
    return json.dumps([e.to_record() for e in _catalog()], indent=2)
