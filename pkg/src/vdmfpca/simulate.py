"""Synthetic bivariate variable-domain data with known ground truth.

Two functional variables on integer grids ``1..T`` with subject-specific
lengths: the first uses a sine/cosine eigenbasis, the second a length-weighted
blend of the two, both with geometrically decaying component variances.
Everything is reproducible from a single 64-bit seed; replicate seeds derive
from (base seed, index) through a counter scheme.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .dataset import FunctionalDataset, SubjectRecord
from .errors import ConfigError

DOMAIN_MIN = 10
DOMAIN_MAX = 100
GEOMETRIC_P = 0.06
WEIGHT_CENTER = 30.0
WEIGHT_SCALE = 10.0
VARIABLES = ("X1", "X2")


@dataclass(frozen=True)
class SimConfig:
    n_subjects: int
    domain_dist: str = "uniform"  # "uniform" or "nbinom"
    sigma: float = 0.1
    n_components: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 2:
            raise ConfigError(f"n_subjects must be >= 2, got {self.n_subjects}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.domain_dist not in ("uniform", "nbinom"):
            raise ConfigError(f"domain_dist must be 'uniform' or 'nbinom', got {self.domain_dist!r}")


@dataclass
class SubjectTruth:
    domain_length: int
    grid: np.ndarray
    scores: dict  # variable -> (n_components,)
    eigenfunctions: dict  # variable -> (n_components, T)
    noiseless: dict  # variable -> (T,)
    noisy: dict  # variable -> (T,)


@dataclass
class SimTruth:
    config: SimConfig
    eigenvalues: np.ndarray
    subjects: list = field(default_factory=list)


def derive_seed(base_seed: int, *indices: int) -> int:
    """Independent derived seed from (base seed, counter indices)."""
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(i) for i in indices))
    return int(seq.generate_state(1, np.uint64)[0])


def mean_one(t):
    """Mean curve of the first variable."""
    t = np.asarray(t, dtype=np.float64)
    return 0.0001 * (t - 120.0) ** 2 + 3.0 * np.sin(np.pi * t / 60.0)


def mean_two(t):
    """Mean curve of the second variable."""
    t = np.asarray(t, dtype=np.float64)
    return 0.0001 * (t - 20.0) ** 2 + 3.0 * np.sin(np.pi * t / 60.0)


def component_variances(n_components: int = 10) -> np.ndarray:
    """Geometric decay: 1, 1/2, 1/4, ..."""
    return 0.5 ** np.arange(n_components, dtype=np.float64)


def sample_domains(dist: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Integer domain lengths in [10, 100].

    ``uniform`` draws each length equally often; ``nbinom`` adds a geometric
    failure count (p = 0.06) to the minimum and clamps at the maximum, giving
    a right-skewed mix of mostly short domains.
    """
    if dist == "uniform":
        return rng.integers(DOMAIN_MIN, DOMAIN_MAX + 1, size=n).astype(np.int64)
    if dist == "nbinom":
        failures = rng.geometric(GEOMETRIC_P, size=n) - 1
        span = DOMAIN_MAX - DOMAIN_MIN
        return (DOMAIN_MIN + np.minimum(failures, span)).astype(np.int64)
    raise ConfigError(f"unknown domain distribution {dist!r}")


def length_weight(domain_length: float) -> float:
    """Gaussian-CDF weight of the sine part in the second variable's basis."""
    return float(ndtr((domain_length - WEIGHT_CENTER) / WEIGHT_SCALE))


def eigenfunctions_type1(domain_length: int, grid: np.ndarray = None, n_components: int = 10) -> np.ndarray:
    """Sine/cosine pairs scaled to unit square-integral on the domain."""
    if grid is None:
        grid = np.arange(1, domain_length + 1, dtype=np.float64)
    scale = np.sqrt(2.0) / np.sqrt(float(domain_length))
    funcs = np.empty((n_components, grid.size))
    for j in range(1, n_components // 2 + 1):
        phase = 2.0 * j * np.pi * grid / domain_length
        funcs[2 * j - 2] = np.sin(phase) * scale
        funcs[2 * j - 1] = np.cos(phase) * scale
    if n_components % 2 == 1:
        j = n_components // 2 + 1
        funcs[-1] = np.sin(2.0 * j * np.pi * grid / domain_length) * scale
    return funcs


def eigenfunctions_type2(domain_length: int, grid: np.ndarray = None, n_components: int = 10) -> np.ndarray:
    """Length-weighted sine/cosine blends (not orthonormal in general)."""
    if grid is None:
        grid = np.arange(1, domain_length + 1, dtype=np.float64)
    w = length_weight(domain_length)
    scale = np.sqrt(2.0) / np.sqrt(float(domain_length))
    funcs = np.empty((n_components, grid.size))
    for j in range(1, n_components + 1):
        phase = 2.0 * j * np.pi * grid / domain_length
        funcs[j - 1] = (w * np.sin(phase) + (1.0 - w) * np.cos(phase)) * scale
    return funcs


def generate(config: SimConfig):
    """Draw one dataset plus its full ground truth.

    Draw order is fixed (domains, then per subject: scores for each variable,
    then noise for each variable), so outputs are bitwise reproducible from
    the seed.
    """
    rng = np.random.default_rng(config.seed)
    lam = component_variances(config.n_components)
    sd = np.sqrt(lam)
    domains = sample_domains(config.domain_dist, config.n_subjects, rng)

    truth = SimTruth(config=config, eigenvalues=lam)
    records = []
    width = max(4, len(str(config.n_subjects)))
    for i, length in enumerate(domains):
        length = int(length)
        grid = np.arange(1, length + 1, dtype=np.float64)
        scores = {
            "X1": rng.normal(0.0, sd),
            "X2": rng.normal(0.0, sd),
        }
        funcs = {
            "X1": eigenfunctions_type1(length, grid, config.n_components),
            "X2": eigenfunctions_type2(length, grid, config.n_components),
        }
        means = {"X1": mean_one(grid), "X2": mean_two(grid)}
        noiseless = {}
        noisy = {}
        series = {}
        for var in VARIABLES:
            clean = means[var] + scores[var] @ funcs[var]
            noise = rng.normal(0.0, config.sigma, size=length) if config.sigma > 0 else 0.0
            observed = clean + noise
            noiseless[var] = clean
            noisy[var] = observed
            series[var] = (grid.copy(), observed)
        sid = f"S{i + 1:0{width}d}"
        records.append(SubjectRecord(subject_id=sid, domain_length=float(length), series=series))
        truth.subjects.append(
            SubjectTruth(
                domain_length=length,
                grid=grid,
                scores=scores,
                eigenfunctions=funcs,
                noiseless=noiseless,
                noisy=noisy,
            )
        )
    dataset = FunctionalDataset(subjects=records, variables=list(VARIABLES))
    return dataset, truth
