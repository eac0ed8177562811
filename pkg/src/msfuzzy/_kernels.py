"""Numeric inner loops: Hamilton filter, Kim smoother, MS log-likelihood and its
finite-difference gradient, fuzzy k-means iterations and silhouettes.

Every kernel exists twice: a numba ``@njit`` version and a plain numpy version.
The public names at the bottom of the module point at the numba versions
unless numba is missing or ``MSFUZZY_NO_JIT`` is set to a truthy value.
Both paths are kept importable (``NUMBA_KERNELS`` / ``NUMPY_KERNELS``) so the
test-suite and ``benchmarks/bench_kernels.py`` can compare them.

Conventions shared by all kernels
---------------------------------
* ``trans[a, b]`` is ``Pr(next = b | current = a)`` (row stochastic).
* State densities are passed as logs; the filter rescales each row by its
  maximum so that it never underflows on outlying observations.
* Parameter vectors ``theta`` are laid out as
  ``[means (k), atanh(phi) (p), log(sigma), off-diagonal logits (k*(k-1))]``;
  logits of row ``i`` are taken against ``p_ii`` and clamped to +-15.
"""
from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

LOGIT_CLAMP = 15.0
PROB_FLOOR = 1e-300
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _jit_disabled() -> bool:
    return os.environ.get("MSFUZZY_NO_JIT", "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def ergodic_np(P):
    k = P.shape[0]
    A = np.eye(k) - P.T
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def unpack_np(theta, k, p):
    means = theta[:k].copy()
    phi = math.tanh(theta[k]) if p else 0.0
    sigma = math.exp(theta[k + p])
    logits = np.clip(theta[k + p + 1:], -LOGIT_CLAMP, LOGIT_CLAMP).reshape(k, k - 1)
    full = np.zeros((k, k))
    off = ~np.eye(k, dtype=bool)
    full[off] = logits.ravel()
    full -= full.max(axis=1, keepdims=True)
    E = np.exp(full)
    P = E / E.sum(axis=1, keepdims=True)
    return means, phi, sigma, P


def build_system_np(y, means, phi, sigma, P, p):
    """Return ``(init, trans, logdens)`` of the (possibly pair-augmented) chain."""
    k = means.size
    pi = ergodic_np(P)
    if p == 0:
        z = (y[:, None] - means[None, :]) / sigma
        return pi, P, -0.5 * z * z - math.log(sigma) - _LOG_SQRT_2PI
    # augmented index a = i*k + j  <->  (s_{t-1} = i, s_t = j)
    init = (pi[:, None] * P).ravel()
    trans = np.zeros((k * k, k * k))
    for i in range(k):
        for j in range(k):
            trans[i * k + j, j * k:(j + 1) * k] = P[j]
    mean_pair = means[None, :] + phi * (y[:-1, None, None] - means[None, :, None])
    z = (y[1:, None, None] - mean_pair) / sigma
    logdens = (-0.5 * z * z - math.log(sigma) - _LOG_SQRT_2PI).reshape(y.size - 1, k * k)
    return init, trans, logdens


def hamilton_np(init, trans, logdens):
    n, K = logdens.shape
    pred = np.empty((n, K))
    filt = np.empty((n, K))
    ll = np.empty(n)
    ok = True
    xi = init.astype(float).copy()
    for t in range(n):
        if t > 0:
            xi = trans.T @ filt[t - 1]
        pred[t] = xi
        mx = logdens[t].max()
        f = xi * np.exp(logdens[t] - mx)
        tot = f.sum()
        if not (tot > 0.0) or not np.isfinite(mx):
            ok = False
            pred[t:] = np.nan
            filt[t:] = np.nan
            ll[t:] = -np.inf
            break
        filt[t] = f / tot
        ll[t] = math.log(tot) + mx
    return pred, filt, ll, ok


def kim_np(pred, filt, trans):
    n, K = filt.shape
    sm = np.empty((n, K))
    sm[-1] = filt[-1]
    bad = False
    for t in range(n - 2, -1, -1):
        nxt = pred[t + 1]
        if np.any((nxt == 0.0) & (sm[t + 1] > 0.0)):
            bad = True
        ratio = sm[t + 1] / np.maximum(nxt, PROB_FLOOR)
        row = filt[t] * (trans @ ratio)
        sm[t] = row / row.sum()
    return sm, bad


def loglik_terms_np(theta, y, k, p):
    means, phi, sigma, P = unpack_np(theta, k, p)
    init, trans, logdens = build_system_np(y, means, phi, sigma, P, p)
    return hamilton_np(init, trans, logdens)[2]


def loglik_np(theta, y, k, p):
    ll = loglik_terms_np(theta, y, k, p)
    s = ll.sum()
    return s if np.isfinite(s) else -np.inf


def loglik_grad_np(theta, y, k, p, rel_step):
    f0 = loglik_np(theta, y, k, p)
    g = np.empty(theta.size)
    for i in range(theta.size):
        h = rel_step * max(1.0, abs(theta[i]))
        tp = theta.copy()
        tm = theta.copy()
        tp[i] += h
        tm[i] -= h
        g[i] = (loglik_np(tp, y, k, p) - loglik_np(tm, y, k, p)) / (2.0 * h)
    return f0, g


def fcm_memberships_np(y, c, m):
    d2 = (y[:, None] - c[None, :]) ** 2
    U = np.zeros_like(d2)
    zero = d2 == 0.0
    has_zero = zero.any(axis=1)
    if has_zero.any():
        first = np.argmax(zero, axis=1)
        U[has_zero, first[has_zero]] = 1.0
    rows = ~has_zero
    if rows.any():
        dr = d2[rows]
        w = (dr.min(axis=1, keepdims=True) / dr) ** (1.0 / (m - 1.0))
        U[rows] = w / w.sum(axis=1, keepdims=True)
    return U


def fcm_centroids_np(y, U, m, c_prev):
    W = U ** m
    den = W.sum(axis=0)
    c = c_prev.copy()
    nz = den > 0.0
    c[nz] = (W[:, nz] * y[:, None]).sum(axis=0) / den[nz]
    return c


def fcm_objective_np(y, U, c, m):
    return float(np.sum(U ** m * (y[:, None] - c[None, :]) ** 2))


def fcm_np(y, c0, m, tol, max_iter):
    """Alternate membership / centroid updates starting from centroids ``c0``.

    Returns ``(U, c, objective, n_iter, converged, objective_history)``; the
    history holds J(U_i, c_i) for the consistent pairs visited.
    """
    c = c0.astype(float).copy()
    U = fcm_memberships_np(y, c, m)
    hist = np.empty(max_iter + 1)
    hist[0] = fcm_objective_np(y, U, c, m)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        c = fcm_centroids_np(y, U, m, c)
        U_new = fcm_memberships_np(y, c, m)
        hist[it] = fcm_objective_np(y, U_new, c, m)
        delta = np.max(np.abs(U_new - U))
        U = U_new
        if delta < tol:
            converged = True
            break
    return U, c, hist[it], it, converged, hist[:it + 1].copy()


def silhouette_np(y, labels, k):
    T = y.size
    onehot = np.zeros((T, k))
    onehot[np.arange(T), labels] = 1.0
    D = ((y[:, None] - y[None, :]) ** 2) @ onehot
    counts = onehot.sum(axis=0)
    own = counts[labels]
    a = np.where(own > 1, D[np.arange(T), labels] / np.maximum(own - 1, 1), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = D / counts[None, :]
    avg[:, counts == 0] = np.inf
    avg[np.arange(T), labels] = np.inf
    b = avg.min(axis=1)
    mx = np.maximum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(mx > 0, (b - a) / mx, 0.0)
    s[own <= 1] = 0.0
    return s


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if HAVE_NUMBA:
    njit = numba.njit(cache=True, nogil=True)

    @njit
    def ergodic_nb(P):
        k = P.shape[0]
        A = np.eye(k) - P.T
        for j in range(k):
            A[k - 1, j] = 1.0
        b = np.zeros(k)
        b[k - 1] = 1.0
        return np.linalg.solve(A, b)

    @njit
    def unpack_nb(theta, k, p):
        means = theta[:k].copy()
        phi = math.tanh(theta[k]) if p > 0 else 0.0
        sigma = math.exp(theta[k + p])
        P = np.zeros((k, k))
        pos = k + p + 1
        for i in range(k):
            mx = 0.0
            for j in range(k):
                if j != i:
                    x = min(max(theta[pos], -LOGIT_CLAMP), LOGIT_CLAMP)
                    P[i, j] = x
                    pos += 1
                    if x > mx:
                        mx = x
            tot = 0.0
            for j in range(k):
                P[i, j] = math.exp(P[i, j] - mx)
                tot += P[i, j]
            for j in range(k):
                P[i, j] /= tot
        return means, phi, sigma, P

    @njit
    def build_system_nb(y, means, phi, sigma, P, p):
        k = means.size
        pi = ergodic_nb(P)
        lsig = math.log(sigma) + _LOG_SQRT_2PI
        if p == 0:
            logdens = np.empty((y.size, k))
            for t in range(y.size):
                for j in range(k):
                    z = (y[t] - means[j]) / sigma
                    logdens[t, j] = -0.5 * z * z - lsig
            return pi, P.copy(), logdens
        K = k * k
        init = np.empty(K)
        trans = np.zeros((K, K))
        for i in range(k):
            for j in range(k):
                init[i * k + j] = pi[i] * P[i, j]
                for l in range(k):
                    trans[i * k + j, j * k + l] = P[j, l]
        n = y.size - 1
        logdens = np.empty((n, K))
        for t in range(n):
            for i in range(k):
                for j in range(k):
                    z = (y[t + 1] - means[j] - phi * (y[t] - means[i])) / sigma
                    logdens[t, i * k + j] = -0.5 * z * z - lsig
        return init, trans, logdens

    @njit
    def hamilton_nb(init, trans, logdens):
        n, K = logdens.shape
        pred = np.empty((n, K))
        filt = np.empty((n, K))
        ll = np.empty(n)
        xi = init.copy()
        for t in range(n):
            if t > 0:
                for j in range(K):
                    s = 0.0
                    for i in range(K):
                        s += trans[i, j] * filt[t - 1, i]
                    xi[j] = s
            mx = -np.inf
            for j in range(K):
                pred[t, j] = xi[j]
                if logdens[t, j] > mx:
                    mx = logdens[t, j]
            tot = 0.0
            for j in range(K):
                f = xi[j] * math.exp(logdens[t, j] - mx)
                filt[t, j] = f
                tot += f
            if not (tot > 0.0) or not np.isfinite(mx):
                for s_ in range(t, n):
                    ll[s_] = -np.inf
                    for j in range(K):
                        pred[s_, j] = np.nan
                        filt[s_, j] = np.nan
                return pred, filt, ll, False
            for j in range(K):
                filt[t, j] /= tot
            ll[t] = math.log(tot) + mx
        return pred, filt, ll, True

    @njit
    def kim_nb(pred, filt, trans):
        n, K = filt.shape
        sm = np.empty((n, K))
        for j in range(K):
            sm[n - 1, j] = filt[n - 1, j]
        ratio = np.empty(K)
        bad = False
        for t in range(n - 2, -1, -1):
            for j in range(K):
                nxt = pred[t + 1, j]
                if nxt == 0.0 and sm[t + 1, j] > 0.0:
                    bad = True
                ratio[j] = sm[t + 1, j] / max(nxt, PROB_FLOOR)
            tot = 0.0
            for i in range(K):
                s = 0.0
                for j in range(K):
                    s += trans[i, j] * ratio[j]
                sm[t, i] = filt[t, i] * s
                tot += sm[t, i]
            for i in range(K):
                sm[t, i] /= tot
        return sm, bad

    @njit
    def loglik_terms_nb(theta, y, k, p):
        means, phi, sigma, P = unpack_nb(theta, k, p)
        init, trans, logdens = build_system_nb(y, means, phi, sigma, P, p)
        return hamilton_nb(init, trans, logdens)[2]

    @njit
    def _loglik_scalar_nb(theta, y, k, p):
        # same recursion as hamilton_nb without storing the paths
        means, phi, sigma, P = unpack_nb(theta, k, p)
        init, trans, logdens = build_system_nb(y, means, phi, sigma, P, p)
        n, K = logdens.shape
        xi = init.copy()
        prev = np.empty(K)
        total = 0.0
        for t in range(n):
            if t > 0:
                for j in range(K):
                    s = 0.0
                    for i in range(K):
                        s += trans[i, j] * prev[i]
                    xi[j] = s
            mx = -np.inf
            for j in range(K):
                if logdens[t, j] > mx:
                    mx = logdens[t, j]
            tot = 0.0
            for j in range(K):
                prev[j] = xi[j] * math.exp(logdens[t, j] - mx)
                tot += prev[j]
            if not (tot > 0.0) or not np.isfinite(mx):
                return -np.inf
            for j in range(K):
                prev[j] /= tot
            total += math.log(tot) + mx
        return total

    @njit
    def loglik_nb(theta, y, k, p):
        return _loglik_scalar_nb(theta, y, k, p)

    @njit
    def loglik_grad_nb(theta, y, k, p, rel_step):
        f0 = _loglik_scalar_nb(theta, y, k, p)
        g = np.empty(theta.size)
        tp = theta.copy()
        for i in range(theta.size):
            h = rel_step * max(1.0, abs(theta[i]))
            tp[i] = theta[i] + h
            fp = _loglik_scalar_nb(tp, y, k, p)
            tp[i] = theta[i] - h
            fm = _loglik_scalar_nb(tp, y, k, p)
            tp[i] = theta[i]
            g[i] = (fp - fm) / (2.0 * h)
        return f0, g

    @njit
    def _fcm_memberships_nb(y, c, m, U):
        T = y.size
        k = c.size
        expo = 1.0 / (m - 1.0)
        for t in range(T):
            dmin = np.inf
            zero_at = -1
            for j in range(k):
                d = (y[t] - c[j]) ** 2
                if d == 0.0 and zero_at < 0:
                    zero_at = j
                if d < dmin:
                    dmin = d
            if zero_at >= 0:
                for j in range(k):
                    U[t, j] = 0.0
                U[t, zero_at] = 1.0
                continue
            tot = 0.0
            for j in range(k):
                w = (dmin / (y[t] - c[j]) ** 2) ** expo
                U[t, j] = w
                tot += w
            for j in range(k):
                U[t, j] /= tot

    @njit
    def _fcm_objective_nb(y, U, c, m):
        s = 0.0
        for t in range(y.size):
            for j in range(c.size):
                s += U[t, j] ** m * (y[t] - c[j]) ** 2
        return s

    @njit
    def fcm_nb(y, c0, m, tol, max_iter):
        T = y.size
        k = c0.size
        c = c0.astype(np.float64).copy()
        U = np.empty((T, k))
        U_new = np.empty((T, k))
        _fcm_memberships_nb(y, c, m, U)
        hist = np.empty(max_iter + 1)
        hist[0] = _fcm_objective_nb(y, U, c, m)
        converged = False
        it = 0
        while it < max_iter:
            it += 1
            for j in range(k):
                num = 0.0
                den = 0.0
                for t in range(T):
                    w = U[t, j] ** m
                    num += w * y[t]
                    den += w
                if den > 0.0:
                    c[j] = num / den
            _fcm_memberships_nb(y, c, m, U_new)
            hist[it] = _fcm_objective_nb(y, U_new, c, m)
            delta = 0.0
            for t in range(T):
                for j in range(k):
                    d = abs(U_new[t, j] - U[t, j])
                    if d > delta:
                        delta = d
                    U[t, j] = U_new[t, j]
            if delta < tol:
                converged = True
                break
        return U, c, hist[it], it, converged, hist[:it + 1].copy()

    @njit
    def silhouette_nb(y, labels, k):
        T = y.size
        D = np.zeros((T, k))
        counts = np.zeros(k)
        for t in range(T):
            counts[labels[t]] += 1.0
        for t in range(T):
            for s in range(T):
                D[t, labels[s]] += (y[t] - y[s]) ** 2
        out = np.zeros(T)
        for t in range(T):
            own = labels[t]
            if counts[own] <= 1.0:
                continue
            a = D[t, own] / (counts[own] - 1.0)
            b = np.inf
            for j in range(k):
                if j != own and counts[j] > 0.0:
                    v = D[t, j] / counts[j]
                    if v < b:
                        b = v
            mx = max(a, b)
            if mx > 0.0:
                out[t] = (b - a) / mx
        return out


NUMPY_KERNELS = SimpleNamespace(
    ergodic=ergodic_np, unpack=unpack_np, build_system=build_system_np,
    hamilton=hamilton_np, kim=kim_np, loglik=loglik_np,
    loglik_terms=loglik_terms_np, loglik_grad=loglik_grad_np, fcm=fcm_np,
    silhouette=silhouette_np, name="numpy",
)

if HAVE_NUMBA:
    NUMBA_KERNELS = SimpleNamespace(
        ergodic=ergodic_nb, unpack=unpack_nb, build_system=build_system_nb,
        hamilton=hamilton_nb, kim=kim_nb, loglik=loglik_nb,
        loglik_terms=loglik_terms_nb, loglik_grad=loglik_grad_nb, fcm=fcm_nb,
        silhouette=silhouette_nb, name="numba",
    )
else:  # pragma: no cover
    NUMBA_KERNELS = None

K = NUMPY_KERNELS if (_jit_disabled() or not HAVE_NUMBA) else NUMBA_KERNELS
USING_NUMBA = K is NUMBA_KERNELS and HAVE_NUMBA
