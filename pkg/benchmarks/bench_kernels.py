"""Compare the numba and pure-numpy kernel backends on typical workloads.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--T 100]

Both backends are imported side by side, so the ``MSFUZZY_NO_JIT`` switch is
not needed here. The first numba call of each kernel is timed separately as
compilation (or cache load) cost.
"""
import argparse
import time

import numpy as np

from msfuzzy import _kernels
from msfuzzy.dynamics import get_dgp, simulate_ms
from msfuzzy.estimation import pack


def _best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(T):
    rng = np.random.default_rng(0)
    out = {}
    for label, p in (("MS3--2", 0), ("MS3AR--2", 1)):
        spec = get_dgp(label).spec
        y, _ = simulate_ms(spec, T, 1)
        vals = np.ascontiguousarray(y.values)
        theta = pack(spec)
        k = spec.k
        out[f"loglik {label}"] = lambda kern, v=vals, th=theta, k=k, p=p: kern.loglik(th, v, k, p)
        out[f"loglik+grad {label}"] = (
            lambda kern, v=vals, th=theta, k=k, p=p: kern.loglik_grad(th, v, k, p, 1e-5))
    y = rng.normal(size=T) + rng.integers(0, 3, size=T) * 2.0
    c0 = np.quantile(y, [0.8, 0.5, 0.2])
    out["fuzzy k-means k=3"] = lambda kern: kern.fcm(y, c0, 2.0, 1e-9, 300)
    labels = rng.integers(0, 3, size=T).astype(np.int64)
    out["silhouette k=3"] = lambda kern: kern.silhouette(y, labels, 3)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--T", type=int, default=100)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    nb, npk = _kernels.NUMBA_KERNELS, _kernels.NUMPY_KERNELS
    print(f"T={args.T}, best of {args.repeat}")
    print(f"{'kernel':<24}{'first numba call':>18}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, fn in workloads(args.T).items():
        t0 = time.perf_counter()
        fn(nb)
        first = time.perf_counter() - t0
        t_nb = _best_of(lambda: fn(nb), args.repeat)
        t_np = _best_of(lambda: fn(npk), args.repeat)
        print(f"{name:<24}{first:>16.3f} s{t_nb * 1e3:>10.3f}ms{t_np * 1e3:>10.3f}ms"
              f"{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
