"""Fixed-domain MFPCA baseline on domain-length bins.

Subjects are grouped into equal-width bins by domain length, every series in
a bin is truncated to the bin's shortest domain, and a standard two-level
FPCA (univariate components, then PCA of the stacked scores) runs per bin on
the resulting common grid.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from ._numerics import fix_sign, select_num_components, trapezoid_weights, weighted_eigh
from .dataset import FunctionalDataset
from .errors import ConfigError
from .ufpca import FpcaConfig


@dataclass
class BinAssignment:
    n_bins: int
    edges: np.ndarray  # n_bins + 1 ascending edges over [min T, max T]
    bin_index: np.ndarray  # per subject, after any merges
    truncation_lengths: np.ndarray  # per bin: min member domain length (nan if empty)
    notes: list = field(default_factory=list)


def assign_bins(domain_lengths, n_bins: int) -> BinAssignment:
    """Equal-width bins over the observed length range.

    Intervals are left-closed with a right-closed last bin.  Bins that end up
    with fewer than 2 members are merged into their left neighbour (rightward
    for the first bin); bins with fewer than 3 members are noted.
    """
    lengths = np.asarray(domain_lengths, dtype=np.float64)
    if n_bins < 2:
        raise ConfigError(f"n_bins must be >= 2, got {n_bins}")
    if np.unique(lengths).size < n_bins:
        raise ConfigError("need at least as many distinct domain lengths as bins")
    lo, hi = float(lengths.min()), float(lengths.max())
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.searchsorted(edges, lengths, side="right") - 1
    np.clip(idx, 0, n_bins - 1, out=idx)

    notes = []
    counts = np.bincount(idx, minlength=n_bins)
    for b in range(n_bins):
        if counts[b] < 2:
            target = b - 1 if b > 0 else b + 1
            while 0 <= target < n_bins and counts[target] == 0:
                target += -1 if b > 0 else 1
            if not 0 <= target < n_bins:
                continue
            idx[idx == b] = target
            counts[target] += counts[b]
            counts[b] = 0
            notes.append(f"bin {b} had <2 subjects; merged into bin {target}")
    for b in range(n_bins):
        if 2 <= counts[b] < 3:
            notes.append(f"bin {b} has only {counts[b]} subjects")

    trunc = np.full(n_bins, np.nan)
    for b in range(n_bins):
        members = lengths[idx == b]
        if members.size:
            trunc[b] = members.min()
    return BinAssignment(
        n_bins=n_bins, edges=edges, bin_index=idx, truncation_lengths=trunc, notes=notes
    )


@dataclass
class TruncatedBin:
    bin_id: int
    truncation_length: float
    grid: np.ndarray
    subject_indices: list  # positions into the original dataset
    values: dict  # variable -> (n_members, len(grid))
    dropped: list = field(default_factory=list)


def truncate(dataset: FunctionalDataset, assignment: BinAssignment) -> list:
    """Per-bin datasets on the bin's common truncated grid.

    Observations beyond the bin's truncation length are dropped.  The common
    grid is the shortest member's retained time grid; other members are
    interpolated onto it where their grids differ.  Members left with fewer
    than 2 points are excluded and recorded.
    """
    bins = []
    for b in range(assignment.n_bins):
        members = [i for i, k in enumerate(assignment.bin_index) if k == b]
        if not members:
            continue
        limit = assignment.truncation_lengths[b]
        ref = min(members, key=lambda i: dataset.subjects[i].domain_length)
        ref_times, _ = dataset.subjects[ref].series[dataset.variables[0]]
        grid = ref_times[ref_times <= limit + 1e-9]

        kept = []
        dropped = []
        rows = {var: [] for var in dataset.variables}
        for i in members:
            rec = dataset.subjects[i]
            ok = True
            interp = {}
            for var in dataset.variables:
                times, values = rec.series[var]
                mask = times <= limit + 1e-9
                if mask.sum() < 2:
                    ok = False
                    break
                interp[var] = np.interp(grid, times[mask], values[mask])
            if not ok:
                dropped.append(rec.subject_id)
                continue
            kept.append(i)
            for var in dataset.variables:
                rows[var].append(interp[var])
        if len(kept) < 2:
            for i in members:
                dropped.append(dataset.subjects[i].subject_id)
            bins.append(
                TruncatedBin(b, float(limit), grid, [], {v: np.empty((0, grid.size)) for v in dataset.variables}, dropped)
            )
            continue
        bins.append(
            TruncatedBin(
                bin_id=b,
                truncation_length=float(limit),
                grid=grid,
                subject_indices=kept,
                values={var: np.vstack(rows[var]) for var in dataset.variables},
                dropped=dropped,
            )
        )
    return bins


@dataclass
class BinFit:
    """Standard MFPCA of one bin on its truncated common grid."""

    bin_id: int
    grid: np.ndarray
    subject_indices: list
    mean_curves: dict  # variable -> (len(grid),)
    eigenvalues: dict  # variable -> (K_j,)
    eigenfunctions: dict  # variable -> (K_j, len(grid))
    univariate_scores: dict  # variable -> (n_members, K_j)
    stacked_eigenvalues: np.ndarray
    stacked_eigenvectors: np.ndarray  # columns
    multivariate_scores: np.ndarray  # (n_members, M)
    multivariate_eigenfunctions: dict  # variable -> (M, len(grid))
    reconstructions: dict  # variable -> (n_members, len(grid))


def standard_mfpca(bin_data: TruncatedBin, variables, config: FpcaConfig) -> BinFit:
    """Two-level FPCA on a common grid.

    Cross-sectional means, empirical covariance per variable, quadrature-
    weighted eigendecomposition truncated by the variance-share rule, scores
    by trapezoid integration, then PCA of the stacked scores and per-variable
    multivariate eigenfunctions and reconstructions.
    """
    n = len(bin_data.subject_indices)
    if n < 2:
        raise ConfigError(f"bin {bin_data.bin_id}: needs at least 2 usable subjects")
    grid = bin_data.grid
    w = trapezoid_weights(grid)

    mean_curves = {}
    eigenvalues = {}
    eigenfunctions = {}
    uni_scores = {}
    for var in variables:
        data = bin_data.values[var]
        mean = data.mean(axis=0)
        resid = data - mean[None, :]
        cov = resid.T @ resid / max(n - 1, 1)
        evals, funcs = weighted_eigh(cov, grid)
        k = max(select_num_components(evals, config.pve_univariate, config.k_max), 1)
        k = min(k, evals.size) if evals.size else 0
        mean_curves[var] = mean
        eigenvalues[var] = evals[:k]
        eigenfunctions[var] = funcs[:k]
        uni_scores[var] = resid @ (w[:, None] * funcs[:k].T) if k else np.zeros((n, 0))

    stacked = np.concatenate([uni_scores[var] for var in variables], axis=1)
    total = stacked.shape[1]
    if total:
        cov_scores = stacked.T @ stacked / max(n - 1, 1)
        evals, evecs = eigh(cov_scores)
        order = np.argsort(evals)[::-1]
        evals = np.clip(evals[order], 0.0, None)
        evecs = evecs[:, order]
        for m in range(total):
            evecs[:, m] = fix_sign(evecs[:, m])
        n_mv = max(select_num_components(evals, config.pve_multivariate, total), 1)
    else:
        evals = np.zeros(0)
        evecs = np.zeros((0, 0))
        n_mv = 0

    rho = stacked @ evecs[:, :n_mv] if n_mv else np.zeros((n, 0))
    mv_funcs = {}
    offset = 0
    for var in variables:
        k = eigenfunctions[var].shape[0]
        block = evecs[offset : offset + k, :n_mv]
        mv_funcs[var] = block.T @ eigenfunctions[var] if k else np.zeros((n_mv, grid.size))
        offset += k

    recon = {}
    for var in variables:
        base = np.repeat(mean_curves[var][None, :], n, axis=0)
        recon[var] = base + rho @ mv_funcs[var] if n_mv else base

    return BinFit(
        bin_id=bin_data.bin_id,
        grid=grid,
        subject_indices=list(bin_data.subject_indices),
        mean_curves=mean_curves,
        eigenvalues=eigenvalues,
        eigenfunctions=eigenfunctions,
        univariate_scores=uni_scores,
        stacked_eigenvalues=evals,
        stacked_eigenvectors=evecs,
        multivariate_scores=rho,
        multivariate_eigenfunctions=mv_funcs,
        reconstructions=recon,
    )


def evaluation_limit(assignment: BinAssignment, subject_position: int) -> float:
    """Upper end of the interval a subject's metrics are computed on."""
    return float(assignment.truncation_lengths[assignment.bin_index[subject_position]])


@dataclass
class BinnedMfpcaFit:
    assignment: BinAssignment
    bins: list  # BinFit entries, skipping unusable bins
    dropped_subjects: list


def fit_binned(dataset: FunctionalDataset, n_bins: int, config: FpcaConfig = None) -> BinnedMfpcaFit:
    """Assign, truncate, and run standard MFPCA in every usable bin."""
    config = config or FpcaConfig()
    assignment = assign_bins(dataset.domain_lengths(), n_bins)
    truncated = truncate(dataset, assignment)
    fits = []
    dropped = []
    for bin_data in truncated:
        dropped.extend(bin_data.dropped)
        if len(bin_data.subject_indices) >= 2:
            fits.append(standard_mfpca(bin_data, dataset.variables, config))
    return BinnedMfpcaFit(assignment=assignment, bins=fits, dropped_subjects=dropped)
