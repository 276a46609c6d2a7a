#!/usr/bin/env python3
"""Time the compiled kernels against the pure-numpy fallback.

The dominant cost in a full fit is assembling the normal equations for the
trivariate covariance smooth, so that case is the headline number here.

Usage: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from vdmfpca._kernels import _pure

try:
    from vdmfpca._kernels import _speedups
except ImportError:
    _speedups = None


def make_inputs(n, dims, degree=3, seed=0):
    rng = np.random.default_rng(seed)
    starts, vals = [], []
    for p in dims:
        nseg = p - degree
        step = 1.0 / nseg
        knots = np.arange(-degree, nseg + degree + 1) * step
        x = rng.uniform(0.0, 1.0, n)
        starts_vals = _pure.bspline_local(knots, degree, 0.0, step, nseg, x)
        starts.append(starts_vals[0])
        vals.append(starts_vals[1])
    return starts, vals, rng.uniform(0.5, 2.0, n), rng.normal(0.0, 1.0, n)


def time_backend(impl, starts, vals, dims, w, y, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        impl.accumulate_normal_equations(starts, vals, dims, w, y)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    cases = [
        ("mean surface (2-D, 10x10, 6k pts)", 6_000, (10, 10)),
        ("covariance surface (3-D, 8x8x8, 300k pts)", 300_000, (8, 8, 8)),
    ]
    for label, n, dims in cases:
        starts, vals, w, y = make_inputs(n, dims)
        t_py = time_backend(_pure, starts, vals, dims, w, y)
        line = f"{label:45s} python {t_py * 1e3:9.1f} ms"
        if _speedups is not None:
            t_cy = time_backend(_speedups, starts, vals, dims, w, y)
            line += f"   cython {t_cy * 1e3:9.1f} ms   speedup {t_py / t_cy:5.1f}x"
        else:
            line += "   (compiled extension not built)"
        print(line)


if __name__ == "__main__":
    main()
