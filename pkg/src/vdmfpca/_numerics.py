"""Small shared numerical routines for the FPCA modules."""

import numpy as np
from scipy.linalg import eigh

from .errors import DataError


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature weights for a (possibly nonuniform) 1-D grid."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise DataError("quadrature grid needs at least 2 points")
    w = np.empty_like(grid)
    w[0] = 0.5 * (grid[1] - grid[0])
    w[-1] = 0.5 * (grid[-1] - grid[-2])
    if grid.size > 2:
        w[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    return w


def fix_sign(vec: np.ndarray) -> np.ndarray:
    """Flip so the entry of largest magnitude is positive (first on ties)."""
    idx = int(np.argmax(np.abs(vec)))
    return -vec if vec[idx] < 0 else vec


def weighted_eigh(cov: np.ndarray, grid: np.ndarray):
    """Eigendecomposition of a covariance operator discretised on ``grid``.

    Symmetrizes ``cov``, whitens by the square root of the trapezoid weight
    matrix, decomposes, drops non-positive eigenvalues, and maps eigenvectors
    back so they are orthonormal under the trapezoid inner product.

    Returns descending positive eigenvalues and eigenfunction values
    (one row per component).
    """
    cov = 0.5 * (cov + cov.T)
    w = trapezoid_weights(grid)
    sqw = np.sqrt(w)
    whitened = sqw[:, None] * cov * sqw[None, :]
    evals, evecs = eigh(whitened)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    keep = evals > 0.0
    evals = evals[keep]
    funcs = (evecs[:, keep] / sqw[:, None]).T
    funcs = np.array([fix_sign(f) for f in funcs]) if funcs.size else funcs
    return evals, funcs


def psd_project(matrix: np.ndarray) -> np.ndarray:
    """Spectral projection onto the PSD cone (negative eigenvalues zeroed)."""
    sym = 0.5 * (matrix + matrix.T)
    evals, evecs = eigh(sym)
    if evals.size and evals[0] >= 0.0:
        return sym
    clipped = np.clip(evals, 0.0, None)
    repaired = (evecs * clipped[None, :]) @ evecs.T
    return 0.5 * (repaired + repaired.T)


def select_num_components(evals: np.ndarray, pve: float, cap: int) -> int:
    """Smallest count whose cumulative eigenvalue share reaches ``pve``."""
    evals = np.asarray(evals, dtype=np.float64)
    if evals.size == 0:
        return 0
    total = float(evals.sum())
    if total <= 0.0:
        return 0
    shares = np.cumsum(evals) / total
    k = int(np.searchsorted(shares, pve - 1e-12) + 1)
    return min(k, cap, evals.size)
