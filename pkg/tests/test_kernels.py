"""Compiled and pure-python kernels must agree."""

import numpy as np
import pytest

from vdmfpca._kernels import BACKEND, _pure

try:
    from vdmfpca._kernels import _speedups
except ImportError:
    _speedups = None

needs_compiled = pytest.mark.skipif(_speedups is None, reason="compiled extension not built")


def _spec(num_basis, lo, hi, degree):
    nseg = num_basis - degree
    step = (hi - lo) / nseg
    knots = lo + np.arange(-degree, nseg + degree + 1) * step
    return knots, degree, lo, step, nseg


def test_backend_reports_name():
    assert BACKEND in ("cython", "python")


@needs_compiled
@pytest.mark.parametrize("degree", [0, 1, 2, 3])
def test_bspline_local_agreement(degree):
    rng = np.random.default_rng(degree)
    knots, deg, lo, step, nseg = _spec(9, -1.0, 3.0, degree)
    x = rng.uniform(-1.0, 3.0, 500)
    s_py, v_py = _pure.bspline_local(knots, deg, lo, step, nseg, x)
    s_cy, v_cy = _speedups.bspline_local(knots, deg, lo, step, nseg, x)
    np.testing.assert_array_equal(s_py, s_cy)
    np.testing.assert_allclose(v_py, v_cy, rtol=1e-14, atol=1e-15)


@needs_compiled
@pytest.mark.parametrize("dims", [(7,), (6, 8), (5, 6, 7)])
def test_normal_equations_agreement(dims):
    rng = np.random.default_rng(len(dims))
    n = 400
    degree = 3
    starts, vals = [], []
    for p in dims:
        knots, deg, lo, step, nseg = _spec(p, 0.0, 1.0, degree)
        s, v = _pure.bspline_local(knots, deg, lo, step, nseg, rng.uniform(0, 1, n))
        starts.append(s)
        vals.append(v)
    w = rng.uniform(0.5, 2.0, n)
    y = rng.normal(0.0, 1.0, n)
    g_py, r_py = _pure.accumulate_normal_equations(starts, vals, dims, w, y)
    g_cy, r_cy = _speedups.accumulate_normal_equations(starts, vals, dims, w, y)
    np.testing.assert_allclose(g_py, g_cy, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(r_py, r_cy, rtol=1e-12, atol=1e-12)


@needs_compiled
def test_gram_is_exactly_symmetric():
    rng = np.random.default_rng(99)
    n = 300
    dims = (6, 6)
    starts, vals = [], []
    for p in dims:
        knots, deg, lo, step, nseg = _spec(p, 0.0, 1.0, 3)
        s, v = _pure.bspline_local(knots, deg, lo, step, nseg, rng.uniform(0, 1, n))
        starts.append(s)
        vals.append(v)
    w = np.ones(n)
    y = rng.normal(0.0, 1.0, n)
    g, _ = _speedups.accumulate_normal_equations(starts, vals, dims, w, y)
    assert np.array_equal(g, g.T)
