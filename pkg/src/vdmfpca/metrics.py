"""Evaluation metrics: subject-averaged RMSE for curves and eigenfunctions."""

import numpy as np

from ._numerics import trapezoid_weights


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return float(np.sqrt(np.mean(diff * diff)))


def armse_curves(true_curves, reconstructed_curves) -> float:
    """Mean over subjects of each subject's RMSE across its evaluated points.

    Both arguments are per-subject sequences already restricted to the points
    being evaluated (the truncated interval for the binned method).
    """
    if len(true_curves) != len(reconstructed_curves):
        raise ValueError("subject count mismatch")
    if len(true_curves) == 0:
        raise ValueError("no subjects to evaluate")
    values = []
    for truth, recon in zip(true_curves, reconstructed_curves):
        truth = np.asarray(truth, dtype=np.float64)
        recon = np.asarray(recon, dtype=np.float64)
        if truth.size == 0:
            raise ValueError("empty evaluation set for a subject")
        if truth.shape != recon.shape:
            raise ValueError("truth/reconstruction length mismatch")
        values.append(_rmse(truth, recon))
    return float(np.mean(values))


def align_sign(times: np.ndarray, truth: np.ndarray, estimate: np.ndarray) -> np.ndarray:
    """Flip the estimate when its inner product with the truth is negative."""
    if times.size >= 2:
        w = trapezoid_weights(times)
        inner = float(np.sum(w * truth * estimate))
    else:
        inner = float(truth @ estimate)
    return -estimate if inner < 0 else estimate


def armse_eigenfunctions(times_list, true_functions, estimated_functions) -> float:
    """Mean over subjects of the sign-aligned RMSE between eigenfunctions.

    Eigenfunction sign is arbitrary, so each subject's estimate is flipped to
    have non-negative inner product with the truth before differencing.
    """
    if not (len(times_list) == len(true_functions) == len(estimated_functions)):
        raise ValueError("subject count mismatch")
    if len(times_list) == 0:
        raise ValueError("no subjects to evaluate")
    values = []
    for times, truth, est in zip(times_list, true_functions, estimated_functions):
        times = np.asarray(times, dtype=np.float64)
        truth = np.asarray(truth, dtype=np.float64)
        est = np.asarray(est, dtype=np.float64)
        if truth.size == 0:
            raise ValueError("empty evaluation set for a subject")
        if truth.shape != est.shape or truth.shape != times.shape:
            raise ValueError("grid/function length mismatch")
        values.append(_rmse(truth, align_sign(times, truth, est)))
    return float(np.mean(values))


def summarize(replicate_values) -> tuple:
    """Sample mean and SD (n-1 denominator) across replicates."""
    vals = np.asarray(replicate_values, dtype=np.float64)
    if vals.size < 2:
        raise ValueError("need at least 2 replicates to summarize")
    return float(vals.mean()), float(vals.std(ddof=1))
