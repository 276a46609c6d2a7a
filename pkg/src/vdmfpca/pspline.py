"""Penalized tensor-product B-spline smoothing.

B-spline bases live on uniform knots extended ``degree`` intervals past each
domain endpoint, penalties are squared finite differences of coefficients,
and the smoothing parameter is picked by generalized cross-validation over a
log-spaced grid (one shared value across margins).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._kernels import accumulate_normal_equations, bspline_local
from .errors import ConfigError, DomainError

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-4.0, 6.0, 20))

_EDGE_SLACK = 1e-9


@dataclass(frozen=True)
class BasisSpec:
    """One margin of a tensor-product basis.

    ``num_basis`` cubic (by default) B-splines on ``[domain_lo, domain_hi]``
    with equally spaced knots; requires ``num_basis >= degree + 1``.
    """

    num_basis: int
    domain_lo: float
    domain_hi: float
    degree: int = 3

    def __post_init__(self):
        if self.degree < 0:
            raise ConfigError(f"degree must be >= 0, got {self.degree}")
        if self.num_basis < self.degree + 1:
            raise ConfigError(
                f"num_basis must be >= degree + 1, got {self.num_basis} with degree {self.degree}"
            )
        if not self.domain_lo < self.domain_hi:
            raise ConfigError(
                f"domain_lo must be < domain_hi, got [{self.domain_lo}, {self.domain_hi}]"
            )

    @property
    def num_segments(self) -> int:
        return self.num_basis - self.degree

    @property
    def step(self) -> float:
        return (self.domain_hi - self.domain_lo) / self.num_segments

    def knots(self) -> np.ndarray:
        """Uniform knot vector with ``degree`` extra intervals on each side."""
        idx = np.arange(-self.degree, self.num_segments + self.degree + 1)
        return self.domain_lo + idx * self.step

    def _check_inside(self, x: np.ndarray) -> None:
        slack = _EDGE_SLACK * (self.domain_hi - self.domain_lo)
        if x.size and (x.min() < self.domain_lo - slack or x.max() > self.domain_hi + slack):
            raise DomainError(
                f"point outside domain [{self.domain_lo}, {self.domain_hi}]"
            )

    def local_design(self, x: np.ndarray):
        """Compact design: first active basis index and local values per point."""
        x = np.asarray(x, dtype=np.float64)
        self._check_inside(x)
        return bspline_local(
            self.knots(), self.degree, self.domain_lo, self.step, self.num_segments, x
        )


@dataclass(frozen=True)
class PenaltySpec:
    """Difference-penalty order and the smoothing-parameter search grid."""

    order: int = 2
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID

    def __post_init__(self):
        if self.order < 1:
            raise ConfigError(f"penalty order must be >= 1, got {self.order}")
        grid = tuple(float(v) for v in self.lambda_grid)
        if len(grid) == 0:
            raise ConfigError("lambda_grid must be non-empty")
        if any(v <= 0 for v in grid):
            raise ConfigError("lambda_grid values must be positive")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ConfigError("lambda_grid must be sorted ascending")
        object.__setattr__(self, "lambda_grid", grid)


def bspline_design(spec: BasisSpec, points) -> np.ndarray:
    """Dense design matrix of basis values, one row per point."""
    x = np.asarray(points, dtype=np.float64).ravel()
    starts, vals = spec.local_design(x)
    design = np.zeros((x.shape[0], spec.num_basis))
    cols = starts[:, None] + np.arange(spec.degree + 1)[None, :]
    np.put_along_axis(design, cols, vals, axis=1)
    return design


def difference_penalty(num_basis: int, order: int) -> np.ndarray:
    """``D'D`` for the order-th difference operator on coefficient vectors."""
    if order < 1:
        raise ConfigError(f"penalty order must be >= 1, got {order}")
    if num_basis <= order:
        raise ConfigError(
            f"num_basis must exceed penalty order, got {num_basis} <= {order}"
        )
    diff = np.diff(np.eye(num_basis), n=order, axis=0)
    return diff.T @ diff


@dataclass(frozen=True)
class SmoothSurface:
    """Fitted tensor-product spline surface, evaluable inside its domain box."""

    margins: tuple
    coefficients: np.ndarray
    selected_lambda: tuple
    edf: float
    gcv_values: np.ndarray = field(repr=False, default=None)

    @property
    def dims(self) -> tuple:
        return tuple(m.num_basis for m in self.margins)

    def coefficient_tensor(self) -> np.ndarray:
        return self.coefficients.reshape(self.dims)

    def evaluate(self, points) -> np.ndarray:
        """Values at scattered d-dimensional points."""
        pts = _as_points(points, len(self.margins))
        tensor = self.coefficient_tensor()
        n = pts.shape[0]
        out = np.empty(n)
        chunk = 65536
        for beg in range(0, n, chunk):
            end = min(beg + chunk, n)
            out[beg:end] = self._evaluate_block(pts[beg:end], tensor)
        return out

    def _evaluate_block(self, pts, tensor):
        d = len(self.margins)
        locs = [m.local_design(pts[:, j]) for j, m in enumerate(self.margins)]
        offs = np.arange(self.margins[0].degree + 1)
        if d == 1:
            starts, vals = locs[0]
            block = tensor[starts[:, None] + offs[None, :]]
            return np.einsum("na,na->n", block, vals)
        if d == 2:
            (s0, v0), (s1, v1) = locs
            block = tensor[
                (s0[:, None] + offs[None, :])[:, :, None],
                (s1[:, None] + offs[None, :])[:, None, :],
            ]
            return np.einsum("nab,na,nb->n", block, v0, v1)
        (s0, v0), (s1, v1), (s2, v2) = locs
        block = tensor[
            (s0[:, None] + offs[None, :])[:, :, None, None],
            (s1[:, None] + offs[None, :])[:, None, :, None],
            (s2[:, None] + offs[None, :])[:, None, None, :],
        ]
        return np.einsum("nabc,na,nb,nc->n", block, v0, v1, v2)

    def evaluate_grid(self, axes) -> np.ndarray:
        """Values on the tensor grid spanned by one coordinate array per margin."""
        if len(axes) != len(self.margins):
            raise DomainError(
                f"expected {len(self.margins)} axes, got {len(axes)}"
            )
        designs = [bspline_design(m, np.asarray(ax, dtype=np.float64)) for m, ax in zip(self.margins, axes)]
        tensor = self.coefficient_tensor()
        for design in designs:
            tensor = np.tensordot(design, tensor, axes=(1, 0))
            tensor = np.moveaxis(tensor, 0, -1)
        return tensor


def _as_points(points, d):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None] if d == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != d:
        raise DomainError(f"points must have shape (n, {d}), got {pts.shape}")
    return pts


def _expanded_penalties(margins, order):
    """Per-margin difference penalties lifted to the full coefficient space."""
    dims = [m.num_basis for m in margins]
    expanded = []
    for j, m in enumerate(margins):
        pen = difference_penalty(m.num_basis, order)
        left = int(np.prod(dims[:j])) if j > 0 else 1
        right = int(np.prod(dims[j + 1:])) if j + 1 < len(dims) else 1
        expanded.append(np.kron(np.kron(np.eye(left), pen), np.eye(right)))
    return expanded


def _solve_penalized(gram, rhs, penalty_total, lam, ridge_scale):
    """Cholesky factor of ``G + lam * S``, adding a ridge only when singular."""
    base = gram + lam * penalty_total
    try:
        return cho_factor(base, lower=True)
    except np.linalg.LinAlgError:
        pass
    ridge = 1e-10 * ridge_scale
    for _ in range(4):
        try:
            return cho_factor(base + ridge * np.eye(base.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            ridge *= 1e3
    raise np.linalg.LinAlgError("penalized normal equations are numerically singular")


def fit_surface(points, values, margins, penalty: PenaltySpec, weights=None) -> SmoothSurface:
    """Penalized weighted least-squares fit with GCV smoothing selection.

    Minimizes ``sum_i w_i (y_i - f(x_i))^2 + lam * sum_m coef' P_m coef``
    over the tensor-product coefficient array, where ``P_m`` is the
    difference penalty along margin ``m`` and ``lam`` is shared across
    margins.  ``lam`` is the grid value minimizing
    ``n * RSS(lam) / (n - edf(lam))^2``.
    """
    margins = tuple(margins)
    pts = _as_points(points, len(margins))
    y = np.asarray(values, dtype=np.float64).ravel()
    if y.size == 0:
        raise ValueError("empty input")
    if pts.shape[0] != y.shape[0]:
        raise ValueError(f"{pts.shape[0]} points but {y.shape[0]} values")
    if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(y)):
        raise ValueError("non-finite coordinate or value")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape != y.shape:
            raise ValueError("weights must match values in length")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")

    locs = [m.local_design(pts[:, j]) for j, m in enumerate(margins)]
    starts = [loc[0] for loc in locs]
    vals = [loc[1] for loc in locs]
    dims = [m.num_basis for m in margins]
    gram, rhs = accumulate_normal_equations(starts, vals, dims, w, y)
    ywy = float(np.dot(w * y, y))

    penalty_total = sum(_expanded_penalties(margins, penalty.order))
    ridge_scale = max(float(gram.diagonal().max()), 1.0)
    n = y.shape[0]

    gcv = np.empty(len(penalty.lambda_grid))
    best = None
    for i, lam in enumerate(penalty.lambda_grid):
        factor = _solve_penalized(gram, rhs, penalty_total, lam, ridge_scale)
        theta = cho_solve(factor, rhs)
        edf = float(np.trace(cho_solve(factor, gram)))
        rss = max(ywy - 2.0 * float(theta @ rhs) + float(theta @ gram @ theta), 0.0)
        denom = n - edf
        gcv[i] = n * rss / (denom * denom) if denom > 1e-8 else np.inf
        if best is None or gcv[i] < gcv[best[0]]:
            best = (i, theta, edf)

    idx, theta, edf = best
    lam_hat = penalty.lambda_grid[idx]
    return SmoothSurface(
        margins=margins,
        coefficients=theta,
        selected_lambda=tuple(lam_hat for _ in margins),
        edf=edf,
        gcv_values=gcv,
    )


def eval_surface(surface: SmoothSurface, points) -> np.ndarray:
    """Evaluate a fitted surface at scattered points."""
    return surface.evaluate(points)
