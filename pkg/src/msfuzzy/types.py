"""Shared domain types and label canonicalization.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be shared between threads and processes without copying defensively.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import ValidationError

STOCHASTIC_TOL = 1e-10
COMPUTED_TOL = 1e-8


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        vals = _frozen(np.ravel(self.values))
        if vals.size < 1:
            raise ValidationError("a time series needs at least one observation")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("time series values must be finite")
        object.__setattr__(self, "values", vals)
        if self.labels is not None:
            labels = tuple(str(lab) for lab in self.labels)
            if len(labels) != vals.size:
                raise ValidationError(
                    f"got {len(labels)} labels for {vals.size} observations")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.values.size

    def slice(self, start: int, stop: int) -> "TimeSeries":
        labels = None if self.labels is None else self.labels[start:stop]
        return TimeSeries(self.values[start:stop], labels)


def as_series(y) -> TimeSeries:
    if isinstance(y, TimeSeries):
        return y
    return TimeSeries(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix with ``probs[i, j] = Pr(s_t = j | s_{t-1} = i)``."""

    probs: np.ndarray

    def __post_init__(self):
        P = _frozen(self.probs)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
            raise ValidationError(f"transition matrix must be square, got {P.shape}")
        if not np.all(np.isfinite(P)) or P.min() < 0.0 or P.max() > 1.0:
            raise ValidationError("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
            raise ValidationError("transition matrix rows must sum to 1")
        object.__setattr__(self, "probs", P)

    @property
    def k(self) -> int:
        return self.probs.shape[0]


def _as_transition(P) -> TransitionMatrix:
    return P if isinstance(P, TransitionMatrix) else TransitionMatrix(P)


@dataclass(frozen=True)
class MSModelSpec:
    """Parameters of an MS(k)-AR(p) model with a common innovation variance.

    ``y_t = mu[s_t] + sum_i ar_coeffs[i] * (y_{t-i} - mu[s_{t-i}]) + eps_t``
    with ``eps_t ~ N(0, sigma**2)``.
    """

    means: np.ndarray
    ar_coeffs: np.ndarray
    sigma: float
    transition: TransitionMatrix

    def __post_init__(self):
        means = _frozen(np.ravel(self.means))
        ar = _frozen(np.ravel(self.ar_coeffs))
        trans = _as_transition(self.transition)
        if means.size != trans.k:
            raise ValidationError(
                f"{means.size} means for a {trans.k}-state transition matrix")
        if not np.all(np.isfinite(means)) or not np.all(np.isfinite(ar)):
            raise ValidationError("means and AR coefficients must be finite")
        sigma = float(self.sigma)
        if not (sigma > 0.0 and np.isfinite(sigma)):
            raise ValidationError("sigma must be positive")
        if ar.size and not _is_stationary(ar):
            raise ValidationError("AR polynomial has a root on or inside the unit circle")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "ar_coeffs", ar)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "transition", trans)

    @property
    def k(self) -> int:
        return self.means.size

    @property
    def p(self) -> int:
        return self.ar_coeffs.size

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "ar_coeffs": self.ar_coeffs.tolist(),
            "sigma": self.sigma,
            "transition": self.transition.probs.tolist(),
        }


def _is_stationary(ar: np.ndarray) -> bool:
    # roots of 1 - phi_1 z - ... - phi_p z^p must lie outside the unit circle
    poly = np.concatenate(([1.0], -ar))[::-1]
    roots = np.roots(poly)
    return bool(np.all(np.abs(roots) > 1.0))


def make_spec(means, sigma, P, ar=()) -> MSModelSpec:
    return MSModelSpec(np.asarray(means, float), np.asarray(ar, float), sigma,
                       TransitionMatrix(np.asarray(P, float)))


def _check_prob_rows(W: np.ndarray, name: str):
    if W.ndim != 2:
        raise ValidationError(f"{name} must be a 2-d matrix")
    if W.size and (W.min() < -COMPUTED_TOL or W.max() > 1.0 + COMPUTED_TOL):
        raise ValidationError(f"{name} entries must lie in [0, 1]")
    if W.size and np.max(np.abs(W.sum(axis=1) - 1.0)) > COMPUTED_TOL:
        raise ValidationError(f"{name} rows must sum to 1")


@dataclass(frozen=True)
class MembershipMatrix:
    weights: np.ndarray

    def __post_init__(self):
        W = _frozen(self.weights)
        _check_prob_rows(W, "membership matrix")
        object.__setattr__(self, "weights", W)

    @property
    def k(self) -> int:
        return self.weights.shape[1]

    def __len__(self):
        return self.weights.shape[0]


@dataclass(frozen=True)
class StatePath:
    """Hard state sequence, states numbered ``1..k``."""

    states: np.ndarray
    k: Optional[int] = None

    def __post_init__(self):
        s = _frozen(np.ravel(self.states), dtype=np.int64)
        k = int(s.max()) if self.k is None and s.size else self.k
        if s.size and (s.min() < 1 or (k is not None and s.max() > k)):
            raise ValidationError("states must lie in 1..k")
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "k", k)

    def __len__(self):
        return self.states.size


@dataclass(frozen=True)
class ProbabilityPaths:
    """Predicted, filtered and smoothed state probabilities, each ``T x k``."""

    predicted: np.ndarray
    filtered: np.ndarray
    smoothed: np.ndarray

    def __post_init__(self):
        for name in ("predicted", "filtered", "smoothed"):
            W = _frozen(getattr(self, name))
            _check_prob_rows(W, name)
            object.__setattr__(self, name, W)


def _state_order(means: np.ndarray) -> np.ndarray:
    # stable sort keeps original order on ties
    return np.argsort(-np.asarray(means), kind="stable")


def permute_spec(spec: MSModelSpec, order: np.ndarray) -> MSModelSpec:
    P = spec.transition.probs[np.ix_(order, order)]
    return MSModelSpec(spec.means[order], spec.ar_coeffs, spec.sigma, TransitionMatrix(P))


def _permute_columns(obj, order):
    if isinstance(obj, ProbabilityPaths):
        return ProbabilityPaths(obj.predicted[:, order], obj.filtered[:, order],
                                obj.smoothed[:, order])
    if isinstance(obj, MembershipMatrix):
        return MembershipMatrix(obj.weights[:, order])
    raise TypeError(f"cannot relabel {type(obj).__name__}")


PathsLike = Union[ProbabilityPaths, MembershipMatrix]


def canonicalize_labels(spec: MSModelSpec, paths: Optional[PathsLike] = None):
    """Relabel states so that means are in descending order.

    Transition rows/columns and probability columns are permuted consistently.
    Ties keep their original relative order. Returns ``(spec, paths)``.
    """
    order = _state_order(spec.means)
    if np.array_equal(order, np.arange(spec.k)):
        return spec, paths
    new_paths = None if paths is None else _permute_columns(paths, order)
    return permute_spec(spec, order), new_paths


def hard_assign(U) -> StatePath:
    """Map each row to its modal column (1-based); ties go to the lowest index."""
    W = U.weights if isinstance(U, MembershipMatrix) else np.asarray(U, float)
    return StatePath(np.argmax(W, axis=1) + 1, k=W.shape[1])


def states_array(path) -> np.ndarray:
    return path.states if isinstance(path, StatePath) else np.asarray(path)
