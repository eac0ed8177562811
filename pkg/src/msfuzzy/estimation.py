"""Maximum-likelihood estimation of MS(k) and MS(k)-AR(1) models.

The likelihood from the Hamilton filter is maximised by BFGS over an
unconstrained parameter vector (raw means, ``atanh`` of the AR coefficient,
``log`` sigma, row-wise multinomial logits of the transition matrix against
the diagonal), using central finite-difference gradients. Starts are built
from a fuzzy k-means partition of the data.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .exceptions import (ConvergenceWarning, InsufficientData, NoConvergence,
                         SingularHessian, UnsupportedOrder)
from .filtering import filter_and_smooth
from .fuzzy import FuzzyConfig, fuzzy_kmeans
from .types import (MSModelSpec, ProbabilityPaths, TransitionMatrix, as_series,
                    canonicalize_labels, hard_assign)

LOGIT_CLAMP = _kernels.LOGIT_CLAMP
MAX_STATES = 4


@dataclass(frozen=True)
class EstimationConfig:
    n_restarts: int = 20
    max_iter: int = 500
    gtol: float = 1e-6
    accept_gtol: float = 1e-4
    jitter: float = 0.25
    seed: int = 0
    fd_step: float = 1e-5
    std_errors: bool = False
    strict: bool = False

    @classmethod
    def from_file(cls, path) -> "EstimationConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown estimation config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MSEstimate:
    spec: MSModelSpec
    loglik: float
    aic: float
    bic: float
    paths: ProbabilityPaths
    std_errors: Optional[dict]
    converged: bool
    n_restarts_used: int
    grad_norm: float = float("nan")
    n_obs: int = 0

    @property
    def durations(self) -> np.ndarray:
        d = np.diag(self.spec.transition.probs)
        with np.errstate(divide="ignore"):
            return np.where(d < 1.0, 1.0 / (1.0 - d), np.inf)

    def to_dict(self) -> dict:
        out = {
            **self.spec.to_dict(),
            "loglik": self.loglik, "aic": self.aic, "bic": self.bic,
            "converged": self.converged, "n_restarts_used": self.n_restarts_used,
            "grad_norm": self.grad_norm, "durations": self.durations.tolist(),
        }
        if self.std_errors is not None:
            out["std_errors"] = self.std_errors
        return out


def n_parameters(k: int, p: int) -> int:
    return k + p + 1 + k * (k - 1)


def information_criteria(loglik: float, n_params: int, T: int):
    """Per-observation ``(AIC, BIC)``."""
    if T < 1:
        raise ValueError("T must be positive")
    aic = (-2.0 * loglik + 2.0 * n_params) / T
    bic = (-2.0 * loglik + n_params * math.log(T)) / T
    return aic, bic


def pack(spec: MSModelSpec) -> np.ndarray:
    """Map a model to the unconstrained vector used by the optimizer."""
    k, p = spec.k, spec.p
    P = spec.transition.probs
    parts = [spec.means.astype(float)]
    if p:
        parts.append([math.atanh(float(spec.ar_coeffs[0]))])
    parts.append([math.log(spec.sigma)])
    with np.errstate(divide="ignore"):
        L = np.log(P) - np.log(np.diag(P))[:, None]
    off = L[~np.eye(k, dtype=bool)]
    parts.append(np.clip(off, -LOGIT_CLAMP, LOGIT_CLAMP))
    return np.concatenate([np.asarray(x, float) for x in parts])


def unpack(theta, k: int, p: int) -> MSModelSpec:
    means, phi, sigma, P = _kernels.unpack_np(np.asarray(theta, float), k, p)
    P = P / P.sum(axis=1, keepdims=True)
    return MSModelSpec(means, np.array([phi]) if p else np.array([]), sigma, TransitionMatrix(P))


def _natural(theta, k, p) -> np.ndarray:
    means, phi, sigma, P = _kernels.unpack_np(np.asarray(theta, float), k, p)
    return np.concatenate([means, [phi] if p else [], [sigma], P.ravel()])


def natural_names(k: int, p: int) -> list:
    names = [f"mu_{j + 1}" for j in range(k)]
    names += ["phi"] if p else []
    names += ["sigma"]
    names += [f"p_{i + 1}{j + 1}" for i in range(k) for j in range(k)]
    return names


def _check_inputs(y, k, p):
    if p not in (0, 1):
        raise UnsupportedOrder("only p in {0, 1} is implemented")
    if not 1 <= k <= MAX_STATES:
        raise ValueError(f"k must be in 1..{MAX_STATES}")
    if len(y) < 10 * k:
        raise InsufficientData(f"need at least {10 * k} observations for k={k}, got {len(y)}")


def _initial_specs(vals, k, p, cfg: EstimationConfig):
    """Fuzzy-partition start, jittered copies of it and one evenly spread start."""
    rng = np.random.default_rng(cfg.seed)
    sd = vals.std()
    if k == 1:
        c = np.array([vals.mean()])
        labels = np.zeros(vals.size, dtype=np.int64)
    else:
        fz = fuzzy_kmeans(vals, k, 2.0, FuzzyConfig(seed=cfg.seed))
        c = fz.centroids.copy()
        labels = hard_assign(fz.membership).states - 1
    resid = vals - c[labels]
    phi0 = 0.0
    if p:
        r = np.corrcoef(resid[1:], resid[:-1])[0, 1] if resid.std() > 0 else 0.0
        phi0 = float(np.clip(np.nan_to_num(r), -0.9, 0.9))
        resid = resid[1:] - phi0 * resid[:-1]
    sigma0 = max(float(np.sqrt(np.mean(resid ** 2))), 1e-3 * sd, 1e-8)
    counts = np.full((k, k), 0.5)
    np.add.at(counts, (labels[:-1], labels[1:]), 1.0)
    P0 = counts / counts.sum(axis=1, keepdims=True)
    ar = np.array([phi0]) if p else np.array([])
    base = MSModelSpec(c, ar, sigma0, TransitionMatrix(P0))
    starts = [base]
    for _ in range(1, cfg.n_restarts - 1):
        mu = c + cfg.jitter * sd * rng.standard_normal(k)
        starts.append(MSModelSpec(mu, ar, sigma0, TransitionMatrix(P0)))
    if cfg.n_restarts > 1:
        # means spread evenly over the data range reach thinly populated
        # regimes that a clustering start can split away
        spread = np.linspace(vals.max(), vals.min(), k) if k > 1 else c
        starts.append(MSModelSpec(spread, ar, sigma0, TransitionMatrix(P0)))
    return starts


def maximize_loglik(vals, theta0, k, p, cfg: EstimationConfig, kernels=None, callback=None):
    """BFGS ascent of the filter log-likelihood from ``theta0``.

    Returns ``(theta, loglik, grad, scipy_result)``.
    """
    kern = kernels or _kernels.K
    step = cfg.fd_step

    def fun(theta):
        f, g = kern.loglik_grad(theta, vals, k, p, step)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return 1e300, np.zeros_like(theta)
        return -f, -g

    res = minimize(fun, theta0, jac=True, method="BFGS", callback=callback,
                   options={"gtol": cfg.gtol, "maxiter": cfg.max_iter})
    f, g = kern.loglik_grad(res.x, vals, k, p, step)
    return res.x, float(f), g, res


def fit_ms(y, k: int, p: int = 0, config: EstimationConfig = None, kernels=None) -> MSEstimate:
    """Fit an MS(k)-AR(p) model by multi-start maximum likelihood.

    The result is canonicalized (means in descending order) and carries the
    predicted, filtered and smoothed probability paths at the optimum.
    """
    cfg = config or EstimationConfig()
    y = as_series(y)
    _check_inputs(y, k, p)
    vals = np.ascontiguousarray(y.values, dtype=float)
    T = vals.size

    if k == 1 and p == 0:
        spec = MSModelSpec([vals.mean()], [], float(vals.std()), TransitionMatrix([[1.0]]))
        theta, grad, n_used = pack(spec), np.zeros(2), 1
    else:
        best = None
        starts = _initial_specs(vals, k, p, cfg)
        for spec0 in starts:
            theta, f, g, _ = maximize_loglik(vals, pack(spec0), k, p, cfg, kernels)
            if np.isfinite(f) and (best is None or f > best[1]):
                best = (theta, f, g)
        if best is None:
            raise NoConvergence("no start produced a finite log-likelihood")
        theta, _, grad = best
        n_used = len(starts)
        spec = unpack(theta, k, p)

    gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
    converged = gnorm < cfg.accept_gtol
    if not converged:
        msg = f"gradient inf-norm {gnorm:.3g} above {cfg.accept_gtol:g} at the best start"
        if cfg.strict:
            raise NoConvergence(msg)
        warnings.warn(msg, ConvergenceWarning, stacklevel=2)

    spec, _ = canonicalize_labels(spec)
    fo = filter_and_smooth(vals, spec, kernels)
    aic, bic = information_criteria(fo.loglik, n_parameters(k, p), T)
    se = robust_std_errors(vals, spec, cfg.fd_step, kernels=kernels) if cfg.std_errors else None
    return MSEstimate(spec, fo.loglik, aic, bic, fo.paths, se, converged, n_used, gnorm, T)


def _hessian(f, theta, steps):
    n = theta.size
    H = np.empty((n, n))
    f0 = f(theta)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        H[i, i] = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = steps[j]
            H[i, j] = H[j, i] = (f(theta + ei + ej) - f(theta + ei - ej)
                                 - f(theta - ei + ej) + f(theta - ei - ej)) / (4.0 * steps[i] * steps[j])
    return H


def robust_std_errors(y, spec: MSModelSpec, rel_step: float = 1e-5, cond_max: float = 1e12,
                      kernels=None) -> dict:
    """Sandwich standard errors ``H^-1 G H^-1`` mapped to natural parameters.

    ``H`` is the finite-difference Hessian of the log-likelihood and ``G`` the
    outer product of per-observation scores, both on the unconstrained scale;
    the delta method carries the covariance to means, phi, sigma and every
    transition probability. Logits sitting on the clamp are held fixed.
    """
    kern = kernels or _kernels.K
    vals = np.ascontiguousarray(as_series(y).values, dtype=float)
    k, p = spec.k, spec.p
    theta = pack(spec)
    free = np.abs(theta) < LOGIT_CLAMP - 1e-9
    free[:k + p + 1] = True
    idx = np.flatnonzero(free)
    steps_all = rel_step * np.maximum(1.0, np.abs(theta))

    def embed(sub):
        th = theta.copy()
        th[idx] = sub
        return th

    def total(sub):
        return float(np.sum(kern.loglik_terms(embed(sub), vals, k, p)))

    sub0 = theta[idx]
    steps = steps_all[idx]
    H = _hessian(total, sub0, steps)
    S = np.empty((vals.size - p, idx.size))
    for a in range(idx.size):
        e = np.zeros(idx.size)
        e[a] = steps[a]
        S[:, a] = (kern.loglik_terms(embed(sub0 + e), vals, k, p)
                   - kern.loglik_terms(embed(sub0 - e), vals, k, p)) / (2.0 * steps[a])
    G = S.T @ S
    if not np.all(np.isfinite(H)) or np.linalg.cond(H) > cond_max:
        raise SingularHessian("log-likelihood Hessian is singular or badly conditioned")
    Hinv = np.linalg.inv(H)
    V = Hinv @ G @ Hinv

    J = np.empty((k + p + 1 + k * k, idx.size))
    for a in range(idx.size):
        e = np.zeros(idx.size)
        e[a] = steps[a]
        J[:, a] = (_natural(embed(sub0 + e), k, p) - _natural(embed(sub0 - e), k, p)) / (2.0 * steps[a])
    cov = J @ V @ J.T
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return dict(zip(natural_names(k, p), se.tolist()))
