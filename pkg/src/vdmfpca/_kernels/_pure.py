"""Pure-numpy reference implementations of the hot kernels.

Selected as the backend when the compiled extension is unavailable.  Both
backends implement the same two entry points:

``bspline_local``
    Nonzero B-spline basis values at each query point on a uniform knot
    vector, returned in compact (start index, local values) form.

``accumulate_normal_equations``
    Gram matrix ``B' W B`` and right-hand side ``B' W y`` of a tensor-product
    design without materialising the full design matrix.
"""

import numpy as np

BACKEND_NAME = "python"


def bspline_local(knots, degree, lo, step, nseg, x):
    """Evaluate the ``degree + 1`` nonzero B-splines at each point.

    Parameters
    ----------
    knots : ndarray
        Full uniform knot vector of length ``nseg + 2 * degree + 1``.
    degree : int
        Spline degree.
    lo : float
        Left end of the domain interval.
    step : float
        Knot spacing.
    nseg : int
        Number of interior segments, ``num_basis - degree``.
    x : ndarray
        Query points, assumed inside the domain.

    Returns
    -------
    starts : ndarray of int64, shape (n,)
        Index of the first basis function active at each point.
    vals : ndarray, shape (n, degree + 1)
        Values of the active basis functions.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    starts = np.floor((x - lo) / step).astype(np.int64)
    np.clip(starts, 0, nseg - 1, out=starts)
    ell = starts + degree

    vals = np.zeros((n, degree + 1))
    vals[:, 0] = 1.0
    left = np.empty((n, degree + 1))
    right = np.empty((n, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = x - knots[ell + 1 - j]
        right[:, j] = knots[ell + j] - x
        saved = np.zeros(n)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = vals[:, r] / denom
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved
    return starts, vals


def _local_columns(starts, dims, degree):
    """Flat column indices of the active tensor-product block per point."""
    d = len(starts)
    offsets = np.arange(degree + 1, dtype=np.int64)
    cols = starts[0][:, None] + offsets[None, :]
    for m in range(1, d):
        nxt = starts[m][:, None] + offsets[None, :]
        cols = cols[:, :, None] * dims[m] + nxt[:, None, :]
        cols = cols.reshape(cols.shape[0], -1)
    return cols


def _local_rows(vals):
    """Row values of the active tensor-product block per point."""
    rows = vals[0]
    for m in range(1, len(vals)):
        rows = rows[:, :, None] * vals[m][:, None, :]
        rows = rows.reshape(rows.shape[0], -1)
    return rows


def accumulate_normal_equations(starts, vals, dims, weights, values):
    """Accumulate ``B' W B`` and ``B' W y`` for a tensor-product design.

    Parameters
    ----------
    starts, vals : lists of ndarrays
        Per-margin output of :func:`bspline_local`.
    dims : sequence of int
        Number of basis functions per margin.
    weights, values : ndarray, shape (n,)
        Observation weights and responses.

    Returns
    -------
    gram : ndarray, shape (P, P) with ``P = prod(dims)``
    rhs : ndarray, shape (P,)
    """
    total = int(np.prod(dims))
    n = values.shape[0]
    degree = vals[0].shape[1] - 1
    gram = np.zeros((total, total))
    rhs = np.zeros(total)

    chunk = max(1, 4_194_304 // max(total, 1))
    for beg in range(0, n, chunk):
        end = min(beg + chunk, n)
        sub_starts = [s[beg:end] for s in starts]
        sub_vals = [v[beg:end] for v in vals]
        cols = _local_columns(sub_starts, dims, degree)
        rows = _local_rows(sub_vals)
        dense = np.zeros((end - beg, total))
        np.put_along_axis(dense, cols, rows, axis=1)
        weighted = dense * weights[beg:end, None]
        gram += weighted.T @ dense
        rhs += weighted.T @ values[beg:end]
    return gram, rhs
