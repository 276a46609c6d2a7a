"""Variable-domain multivariate functional principal component analysis.

Curves observed on subject-specific intervals are decomposed by smoothing
mean and covariance structure over both time and domain length, stacking
per-variable scores, and modelling the stacked-score covariance as a smooth
function of domain length.  A binned fixed-domain baseline, a synthetic data
generator, evaluation metrics, and a benchmark CLI round out the package.
"""

from ._kernels import BACKEND
from .binned import BinnedMfpcaFit, assign_bins, fit_binned, standard_mfpca, truncate
from .dataset import FunctionalDataset, SubjectRecord, read_long_csv, write_long_csv
from .errors import ConfigError, DataError, DomainError
from .metrics import armse_curves, armse_eigenfunctions, summarize
from .mfpca import (
    MultivariateVdFit,
    ScoreCovarianceModel,
    StackedScores,
    eval_score_covariance,
    fit_score_covariance,
    fit_vd_mfpca,
    multivariate_eigen_at,
    multivariate_eigenfunctions,
    multivariate_scores,
    score_domain_association,
    stack_scores,
    variance_explained_curve,
)
from .pspline import (
    BasisSpec,
    PenaltySpec,
    SmoothSurface,
    bspline_design,
    difference_penalty,
    eval_surface,
    fit_surface,
)
from .simulate import SimConfig, SimTruth, derive_seed, generate, sample_domains
from .ufpca import (
    FpcaConfig,
    UnivariateVdFpcaFit,
    center,
    compute_scores,
    eigendecompose_at,
    estimate_covariance,
    estimate_mean,
    fit_univariate,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BasisSpec",
    "BinnedMfpcaFit",
    "ConfigError",
    "DataError",
    "DomainError",
    "FpcaConfig",
    "FunctionalDataset",
    "MultivariateVdFit",
    "PenaltySpec",
    "ScoreCovarianceModel",
    "SimConfig",
    "SimTruth",
    "SmoothSurface",
    "StackedScores",
    "SubjectRecord",
    "UnivariateVdFpcaFit",
    "armse_curves",
    "armse_eigenfunctions",
    "assign_bins",
    "bspline_design",
    "center",
    "compute_scores",
    "derive_seed",
    "difference_penalty",
    "eigendecompose_at",
    "estimate_covariance",
    "estimate_mean",
    "eval_score_covariance",
    "eval_surface",
    "fit_binned",
    "fit_score_covariance",
    "fit_surface",
    "fit_univariate",
    "fit_vd_mfpca",
    "generate",
    "multivariate_eigen_at",
    "multivariate_eigenfunctions",
    "multivariate_scores",
    "read_long_csv",
    "sample_domains",
    "score_domain_association",
    "stack_scores",
    "standard_mfpca",
    "summarize",
    "truncate",
    "variance_explained_curve",
    "write_long_csv",
]
