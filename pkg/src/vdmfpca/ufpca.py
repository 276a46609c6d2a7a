"""Univariate FPCA for functional variables with subject-specific domains.

Pipeline per variable: smooth the pooled observations into a mean surface
over (time, domain length), smooth within-subject residual products into a
covariance surface over (time, time, domain length), eigendecompose the
covariance at any requested domain length on a uniform grid, and score each
subject by numerical integration against the eigenfunctions at its own
domain length.
"""

from dataclasses import dataclass, field

import numpy as np

from ._numerics import select_num_components, trapezoid_weights, weighted_eigh
from .dataset import FunctionalDataset
from .errors import ConfigError, DataError, DomainError
from .pspline import BasisSpec, PenaltySpec, SmoothSurface, fit_surface

_BOX_SLACK = 1e-9


@dataclass(frozen=True)
class FpcaConfig:
    """Smoothing, truncation, and grid settings for the full pipeline."""

    mean_basis: tuple = (10, 10)
    cov_basis: tuple = (8, 8, 8)
    score_cov_basis: int = 10
    degree: int = 3
    penalty_order: int = 2
    lambda_grid: tuple = PenaltySpec().lambda_grid
    pve_univariate: float = 0.95
    k_max: int = 8
    pve_multivariate: float = 0.99
    grid_step: float = 1.0
    include_diagonal: bool = False
    min_obs: int = 0

    def penalty(self) -> PenaltySpec:
        return PenaltySpec(order=self.penalty_order, lambda_grid=self.lambda_grid)

    @classmethod
    def from_dict(cls, raw: dict) -> "FpcaConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(raw)
        for key in ("mean_basis", "cov_basis", "lambda_grid"):
            if key in coerced:
                coerced[key] = tuple(coerced[key])
        return cls(**coerced)


@dataclass(frozen=True)
class EigenAtLength:
    """Eigenpairs of the covariance operator at one domain length."""

    grid: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # (K, len(grid)), trapezoid-orthonormal rows


@dataclass
class UnivariateVdFpcaFit:
    variable: str
    mean_surface: SmoothSurface
    cov_surface: SmoothSurface
    num_components: int
    eigen_by_length: dict  # domain length -> EigenAtLength
    scores: np.ndarray  # (n_subjects, num_components)
    subject_ids: list
    domain_lengths: np.ndarray


def _time_box(dataset: FunctionalDataset) -> tuple:
    hi = float(dataset.domain_lengths().max())
    return 0.0, hi * (1.0 + _BOX_SLACK)


def _length_box(dataset: FunctionalDataset) -> tuple:
    lengths = dataset.domain_lengths()
    lo, hi = float(lengths.min()), float(lengths.max())
    if lo == hi:
        # Degenerate spread: widen so the margin stays well-posed; the
        # penalty then keeps the fit constant along this margin.
        pad = max(1.0, 1e-3 * abs(hi))
        return lo - pad, hi + pad
    span = hi - lo
    return lo - _BOX_SLACK * span, hi + _BOX_SLACK * span


def estimate_mean(dataset: FunctionalDataset, variable: str, config: FpcaConfig) -> SmoothSurface:
    """Smooth surface of the variable's mean over (time, domain length)."""
    if variable not in dataset.variables:
        raise ValueError(f"unknown variable {variable!r}")
    if len(dataset) < 2:
        raise ConfigError("mean estimation needs at least 2 subjects")
    coords = []
    values = []
    for rec in dataset.subjects:
        times, obs = rec.series[variable]
        coords.append(np.column_stack([times, np.full_like(times, rec.domain_length)]))
        values.append(obs)
    pts = np.concatenate(coords)
    y = np.concatenate(values)
    t_lo, t_hi = _time_box(dataset)
    l_lo, l_hi = _length_box(dataset)
    margins = (
        BasisSpec(config.mean_basis[0], t_lo, t_hi, config.degree),
        BasisSpec(config.mean_basis[1], l_lo, l_hi, config.degree),
    )
    return fit_surface(pts, y, margins, config.penalty())


def center(dataset: FunctionalDataset, variable: str, mean_surface: SmoothSurface) -> list:
    """Per-subject residuals after subtracting the mean surface."""
    residuals = []
    for rec in dataset.subjects:
        times, obs = rec.series[variable]
        mu = mean_surface.evaluate(
            np.column_stack([times, np.full_like(times, rec.domain_length)])
        )
        residuals.append(obs - mu)
    return residuals


def estimate_covariance(
    dataset: FunctionalDataset,
    variable: str,
    residuals: list,
    config: FpcaConfig,
) -> SmoothSurface:
    """Smooth surface of within-subject residual products over (t, s, length).

    Same-time products are excluded by default because they carry the
    measurement-error nugget.  The coefficient array is symmetrized in the
    two time margins after fitting.
    """
    coords = []
    values = []
    usable = 0
    for rec, res in zip(dataset.subjects, residuals):
        times, _ = rec.series[variable]
        m = times.size
        if m < 2:
            continue
        usable += 1
        ti = np.repeat(times, m)
        si = np.tile(times, m)
        prod = np.outer(res, res).ravel()
        if config.include_diagonal:
            mask = np.ones(m * m, dtype=bool)
        else:
            mask = ~np.eye(m, dtype=bool).ravel()
        coords.append(
            np.column_stack([ti[mask], si[mask], np.full(mask.sum(), rec.domain_length)])
        )
        values.append(prod[mask])
    if usable < 2:
        raise DataError("covariance estimation needs residual pairs from >= 2 subjects")
    pts = np.concatenate(coords)
    y = np.concatenate(values)
    t_lo, t_hi = _time_box(dataset)
    l_lo, l_hi = _length_box(dataset)
    time_margin = BasisSpec(config.cov_basis[0], t_lo, t_hi, config.degree)
    margins = (
        time_margin,
        BasisSpec(config.cov_basis[1], t_lo, t_hi, config.degree),
        BasisSpec(config.cov_basis[2], l_lo, l_hi, config.degree),
    )
    if config.cov_basis[0] != config.cov_basis[1]:
        raise ConfigError("covariance time margins must share a basis size")
    surface = fit_surface(pts, y, margins, config.penalty())
    tensor = surface.coefficient_tensor()
    sym = 0.5 * (tensor + tensor.transpose(1, 0, 2))
    return SmoothSurface(
        margins=surface.margins,
        coefficients=sym.ravel(),
        selected_lambda=surface.selected_lambda,
        edf=surface.edf,
        gcv_values=surface.gcv_values,
    )


def eigen_grid(domain_length: float, grid_step: float) -> np.ndarray:
    """Uniform grid ``{0, step, ..., T}``; the endpoint is always included."""
    if grid_step <= 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    grid = np.arange(0.0, domain_length, grid_step)
    if grid.size == 0 or domain_length - grid[-1] > 1e-9:
        grid = np.append(grid, domain_length)
    return grid


def covariance_on_grid(cov_surface: SmoothSurface, domain_length: float, grid: np.ndarray) -> np.ndarray:
    """Symmetric covariance matrix of the surface at one domain length."""
    lo = cov_surface.margins[2].domain_lo
    hi = cov_surface.margins[2].domain_hi
    if not lo <= domain_length <= hi:
        raise DomainError(f"domain length {domain_length} outside fitted range [{lo}, {hi}]")
    block = cov_surface.evaluate_grid([grid, grid, np.array([domain_length])])[:, :, 0]
    return 0.5 * (block + block.T)


def eigendecompose_at(
    cov_surface: SmoothSurface,
    domain_length: float,
    grid_step: float,
    num_components: int = None,
    pve: float = 0.95,
    k_max: int = 8,
):
    """Eigenpairs of the covariance operator at one domain length.

    The covariance surface is evaluated on ``{0, step, ..., T}``, whitened by
    trapezoid quadrature weights, and decomposed; eigenfunctions come back
    orthonormal under the trapezoid inner product.  When ``num_components``
    is None the count is the smallest one reaching the ``pve`` share, capped
    at ``k_max``.
    """
    grid = eigen_grid(domain_length, grid_step)
    if grid.size < 3:
        raise ValueError("eigendecomposition grid needs at least 3 points")
    cov = covariance_on_grid(cov_surface, domain_length, grid)
    evals, funcs = weighted_eigh(cov, grid)
    if num_components is None:
        k = select_num_components(evals, pve, k_max)
    else:
        k = min(int(num_components), evals.size)
    return EigenAtLength(grid=grid, eigenvalues=evals[:k], eigenfunctions=funcs[:k]), evals


def compute_scores(times: np.ndarray, residual: np.ndarray, eigen: EigenAtLength) -> np.ndarray:
    """Trapezoid integrals of the residual against each eigenfunction.

    The residual is interpolated linearly onto the eigen-grid (constant
    extension past the observed range).
    """
    if eigen.eigenfunctions.shape[0] == 0:
        return np.zeros(0)
    on_grid = np.interp(eigen.grid, times, residual)
    w = trapezoid_weights(eigen.grid)
    return eigen.eigenfunctions @ (w * on_grid)


def fit_univariate(dataset: FunctionalDataset, variable: str, config: FpcaConfig) -> UnivariateVdFpcaFit:
    """Full univariate fit: mean, covariance, eigenpairs per observed length, scores."""
    mean_surface = estimate_mean(dataset, variable, config)
    residuals = center(dataset, variable, mean_surface)
    cov_surface = estimate_covariance(dataset, variable, residuals, config)

    lengths = dataset.domain_lengths()
    median_length = float(np.median(lengths))
    _, spectrum = eigendecompose_at(
        cov_surface, median_length, config.grid_step, pve=config.pve_univariate, k_max=config.k_max
    )
    k = select_num_components(spectrum, config.pve_univariate, config.k_max)
    k = max(k, 1)

    eigen_by_length = {}
    for length in np.unique(lengths):
        eigen, _ = eigendecompose_at(cov_surface, float(length), config.grid_step, num_components=k)
        eigen_by_length[float(length)] = eigen

    scores = np.zeros((len(dataset), k))
    for i, (rec, res) in enumerate(zip(dataset.subjects, residuals)):
        eigen = eigen_by_length[float(rec.domain_length)]
        times, _ = rec.series[variable]
        got = compute_scores(times, res, eigen)
        scores[i, : got.size] = got

    return UnivariateVdFpcaFit(
        variable=variable,
        mean_surface=mean_surface,
        cov_surface=cov_surface,
        num_components=k,
        eigen_by_length=eigen_by_length,
        scores=scores,
        subject_ids=dataset.subject_ids(),
        domain_lengths=lengths,
    )
