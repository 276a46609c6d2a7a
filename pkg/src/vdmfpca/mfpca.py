"""Multivariate FPCA for variable-domain data via stacked univariate scores.

The stacked score vectors' outer products are smoothed elementwise against
domain length, giving a score covariance matrix evaluable at any observed
length.  Its eigendecomposition at a subject's own length yields multivariate
scores and per-variable multivariate eigenfunctions, from which curves are
reconstructed.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.stats import t as student_t

from ._numerics import fix_sign, psd_project, select_num_components, trapezoid_weights
from .dataset import FunctionalDataset
from .errors import ConfigError, DomainError
from .pspline import BasisSpec, SmoothSurface, fit_surface
from .ufpca import FpcaConfig, UnivariateVdFpcaFit, fit_univariate

_BOX_SLACK = 1e-9


@dataclass
class StackedScores:
    """Per-subject concatenation of univariate scores, variable blocks in order."""

    subject_ids: list
    domain_lengths: np.ndarray
    scores: np.ndarray  # (n_subjects, total_components)
    block_slices: dict  # variable -> slice into the stacked axis

    @property
    def total_components(self) -> int:
        return self.scores.shape[1]


def stack_scores(fits: list) -> StackedScores:
    """Concatenate per-variable score vectors subject by subject."""
    first = fits[0]
    for fit in fits[1:]:
        if fit.subject_ids != first.subject_ids:
            raise ValueError("univariate fits cover different subjects")
    blocks = {}
    offset = 0
    for fit in fits:
        blocks[fit.variable] = slice(offset, offset + fit.num_components)
        offset += fit.num_components
    scores = np.concatenate([fit.scores for fit in fits], axis=1)
    return StackedScores(
        subject_ids=list(first.subject_ids),
        domain_lengths=np.asarray(first.domain_lengths, dtype=np.float64),
        scores=scores,
        block_slices=blocks,
    )


@dataclass
class ScoreCovarianceModel:
    """Upper-triangle smooth curves of the score covariance over domain length."""

    total_components: int
    element_surfaces: list  # row-major upper triangle, length K(K+1)/2
    length_range: tuple

    def _check_range(self, length: float) -> None:
        lo, hi = self.length_range
        if not lo - 1e-9 <= length <= hi + 1e-9:
            raise DomainError(f"domain length {length} outside fitted range [{lo}, {hi}]")

    def evaluate_raw(self, length: float) -> np.ndarray:
        """Symmetric matrix at one length, before PSD repair."""
        self._check_range(length)
        k = self.total_components
        mat = np.empty((k, k))
        pos = 0
        pt = np.array([[length]])
        for i in range(k):
            for j in range(i, k):
                val = float(self.element_surfaces[pos].evaluate(pt)[0])
                mat[i, j] = val
                mat[j, i] = val
                pos += 1
        return mat


def fit_score_covariance(stacked: StackedScores, config: FpcaConfig) -> ScoreCovarianceModel:
    """Smooth each unique element of the score outer products against length."""
    n = stacked.scores.shape[0]
    if n < 2:
        raise ConfigError("score covariance needs at least 2 subjects")
    lengths = stacked.domain_lengths
    lo, hi = float(lengths.min()), float(lengths.max())
    if lo == hi:
        pad = max(1.0, 1e-3 * abs(hi))
        box = (lo - pad, hi + pad)
    else:
        span = hi - lo
        box = (lo - _BOX_SLACK * span, hi + _BOX_SLACK * span)
    margin = (BasisSpec(config.score_cov_basis, box[0], box[1], config.degree),)
    penalty = config.penalty()

    k = stacked.total_components
    surfaces = []
    pts = lengths[:, None]
    for i in range(k):
        for j in range(i, k):
            y = stacked.scores[:, i] * stacked.scores[:, j]
            surfaces.append(fit_surface(pts, y, margin, penalty))
    return ScoreCovarianceModel(
        total_components=k,
        element_surfaces=surfaces,
        length_range=(lo, hi),
    )


def eval_score_covariance(model: ScoreCovarianceModel, length: float) -> np.ndarray:
    """PSD-repaired score covariance matrix at one domain length."""
    return psd_project(model.evaluate_raw(length))


def multivariate_eigen_at(
    model: ScoreCovarianceModel,
    length: float,
    num_components: int = None,
    pve: float = 0.99,
):
    """Descending eigenpairs of the repaired covariance at one length.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors in columns,
    each flipped so its largest-magnitude entry is positive.
    """
    cov = eval_score_covariance(model, length)
    evals, evecs = eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    for m in range(evecs.shape[1]):
        evecs[:, m] = fix_sign(evecs[:, m])
    if num_components is None:
        m = select_num_components(evals, pve, model.total_components)
    else:
        if num_components > model.total_components:
            raise ValueError("cannot retain more components than the stacked dimension")
        m = int(num_components)
    return evals[:m], evecs[:, :m]


def multivariate_scores(stacked: StackedScores, eigenvectors_by_subject: list) -> np.ndarray:
    """Project each stacked score vector onto its own-length eigenvectors."""
    rows = []
    for xi, vecs in zip(stacked.scores, eigenvectors_by_subject):
        if vecs.shape[0] != xi.shape[0]:
            raise ValueError(
                f"eigenvector dimension {vecs.shape[0]} != stacked dimension {xi.shape[0]}"
            )
        rows.append(xi @ vecs)
    return np.vstack(rows)


def multivariate_eigenfunctions(
    fits: list,
    eigenvectors: np.ndarray,
    length: float,
) -> dict:
    """Combine univariate eigenfunctions at one length into multivariate ones.

    Returns per variable an array (m_components, grid size) using the block
    of each eigenvector that belongs to that variable.
    """
    out = {}
    offset = 0
    for fit in fits:
        key = float(length)
        if key not in fit.eigen_by_length:
            raise ValueError(f"no eigenfunctions at length {length} for {fit.variable}")
        eigen = fit.eigen_by_length[key]
        block = eigenvectors[offset : offset + fit.num_components, :]
        avail = eigen.eigenfunctions.shape[0]
        funcs = block[:avail, :].T @ eigen.eigenfunctions
        out[fit.variable] = funcs
        offset += fit.num_components
    return out


@dataclass
class MultivariateVdFit:
    """Fitted multivariate decomposition plus everything needed to reconstruct."""

    dataset: FunctionalDataset
    univariate_fits: dict  # variable -> UnivariateVdFpcaFit
    variables: list
    score_model: ScoreCovarianceModel
    stacked: StackedScores
    eigen_by_length: dict  # length -> (eigenvalues, eigenvector matrix)
    multivariate_scores: np.ndarray  # (n_subjects, total_components)
    num_components: int
    config: FpcaConfig

    def subject_index(self, subject_id: str) -> int:
        try:
            return self.stacked.subject_ids.index(subject_id)
        except ValueError:
            raise KeyError(f"unknown subject {subject_id!r}") from None

    def eigenfunctions_at(self, length: float, num_components: int = None) -> dict:
        """Per-variable multivariate eigenfunctions on the eigen-grid at ``length``."""
        m = self.num_components if num_components is None else int(num_components)
        _, vecs = self.eigen_by_length[float(length)]
        return multivariate_eigenfunctions(
            [self.univariate_fits[v] for v in self.variables], vecs[:, :m], length
        )

    def reconstruct(self, subject_id: str, num_components: int = None) -> dict:
        """Mean plus retained multivariate components, per variable.

        Values are returned on each variable's observed time grid for the
        subject; eigenfunctions are interpolated from the eigen-grid where
        the two differ.
        """
        idx = self.subject_index(subject_id)
        m = self.num_components if num_components is None else int(num_components)
        if m > self.stacked.total_components:
            raise ValueError("num_components exceeds retained components")
        length = float(self.stacked.domain_lengths[idx])
        funcs = self.eigenfunctions_at(length, m) if m > 0 else {}
        rho = self.multivariate_scores[idx, :m]
        record = self.dataset.subjects[idx]
        out = {}
        for var in self.variables:
            fit = self.univariate_fits[var]
            times, _ = record.series[var]
            mu = fit.mean_surface.evaluate(
                np.column_stack([times, np.full_like(times, length)])
            )
            recon = mu
            if m > 0:
                grid = fit.eigen_by_length[length].grid
                on_obs = np.vstack([np.interp(times, grid, f) for f in funcs[var]])
                recon = mu + rho[: on_obs.shape[0]] @ on_obs
            out[var] = recon
        return out


def fit_vd_mfpca(dataset: FunctionalDataset, config: FpcaConfig = None) -> MultivariateVdFit:
    """Run the full pipeline on a dataset.

    Univariate fits per variable, score stacking, elementwise covariance
    smoothing over domain length, then one eigendecomposition per observed
    length with signs chained along increasing length so component paths stay
    continuous.  The retained multivariate count is the smallest one reaching
    the configured variance share at the median length.
    """
    config = config or FpcaConfig()
    fits = [fit_univariate(dataset, var, config) for var in dataset.variables]
    stacked = stack_scores(fits)
    model = fit_score_covariance(stacked, config)

    lengths = np.unique(stacked.domain_lengths)
    eigen_by_length = {}
    prev_vecs = None
    for length in lengths:
        evals, vecs = multivariate_eigen_at(model, float(length), num_components=model.total_components)
        if prev_vecs is not None:
            for col in range(vecs.shape[1]):
                if float(vecs[:, col] @ prev_vecs[:, col]) < 0.0:
                    vecs[:, col] = -vecs[:, col]
        eigen_by_length[float(length)] = (evals, vecs)
        prev_vecs = vecs

    median_length = float(np.median(stacked.domain_lengths))
    eigen_at_median, _ = multivariate_eigen_at(model, median_length, num_components=model.total_components)
    m = select_num_components(eigen_at_median, config.pve_multivariate, model.total_components)
    m = max(m, 1)

    vecs_by_subject = [eigen_by_length[float(t)][1] for t in stacked.domain_lengths]
    rho = multivariate_scores(stacked, vecs_by_subject)

    return MultivariateVdFit(
        dataset=dataset,
        univariate_fits={fit.variable: fit for fit in fits},
        variables=list(dataset.variables),
        score_model=model,
        stacked=stacked,
        eigen_by_length=eigen_by_length,
        multivariate_scores=rho,
        num_components=m,
        config=config,
    )


def variance_explained_curve(
    model: ScoreCovarianceModel,
    lengths,
    num_components: int = None,
) -> np.ndarray:
    """Eigenvalue shares at each requested length, rows aligned to ``lengths``."""
    lengths = np.asarray(lengths, dtype=np.float64)
    k = model.total_components
    m = k if num_components is None else int(num_components)
    shares = np.zeros((lengths.size, m))
    for i, length in enumerate(lengths):
        evals, _ = multivariate_eigen_at(model, float(length), num_components=k)
        total = evals.sum()
        if total > 0:
            shares[i] = evals[:m] / total
    return shares


def score_domain_association(scores, domain_lengths):
    """Spearman rank correlation of scores with domain length.

    Ties get average ranks; the two-sided p-value uses the large-sample
    Student-t approximation.  Raises on constant inputs.
    """
    x = np.asarray(scores, dtype=np.float64)
    y = np.asarray(domain_lengths, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise ValueError("need at least 3 paired observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("correlation undefined for constant input")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    rho = float((rx @ ry) / denom)
    n = x.size
    if abs(rho) >= 1.0:
        return rho, 0.0
    stat = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    pval = 2.0 * float(student_t.sf(abs(stat), n - 2))
    return rho, pval


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks
