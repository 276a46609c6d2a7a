"""Stacked scores, smoothed score covariance, multivariate components."""

import numpy as np
import pytest

from vdmfpca import ConfigError
from vdmfpca._numerics import trapezoid_weights
from vdmfpca.mfpca import (
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
from vdmfpca.pspline import BasisSpec, SmoothSurface
from vdmfpca.simulate import SimConfig, generate
from vdmfpca.ufpca import FpcaConfig, fit_univariate

FAST = FpcaConfig(mean_basis=(8, 8), cov_basis=(7, 7, 6))


def jacobi_eigh(matrix, sweeps=100):
    """Cyclic Jacobi rotations; an eigensolver independent of LAPACK."""
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < 1e-14:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-15:
                    continue
                theta = 0.5 * np.arctan2(2.0 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a), v


def make_constant_model(matrix, length_range=(10.0, 100.0)):
    """Score-covariance model whose every element curve is constant."""
    matrix = np.asarray(matrix, dtype=np.float64)
    k = matrix.shape[0]
    spec = BasisSpec(5, length_range[0] - 1.0, length_range[1] + 1.0)
    surfaces = []
    for i in range(k):
        for j in range(i, k):
            surfaces.append(
                SmoothSurface(
                    margins=(spec,),
                    coefficients=np.full(5, matrix[i, j]),
                    selected_lambda=(1.0,),
                    edf=1.0,
                )
            )
    return ScoreCovarianceModel(total_components=k, element_surfaces=surfaces, length_range=length_range)


def make_stacked(scores, lengths):
    scores = np.asarray(scores, dtype=np.float64)
    return StackedScores(
        subject_ids=[f"S{i}" for i in range(scores.shape[0])],
        domain_lengths=np.asarray(lengths, dtype=np.float64),
        scores=scores,
        block_slices={"X1": slice(0, scores.shape[1])},
    )


@pytest.fixture(scope="module")
def two_fits():
    dataset, _ = generate(SimConfig(n_subjects=25, sigma=0.05, seed=21))
    return dataset, [fit_univariate(dataset, v, FAST) for v in dataset.variables]


class TestStackScores:
    def test_block_layout(self, two_fits):
        _, fits = two_fits
        stacked = stack_scores(fits)
        k1 = fits[0].num_components
        k2 = fits[1].num_components
        assert stacked.total_components == k1 + k2
        assert stacked.block_slices["X1"] == slice(0, k1)
        assert stacked.block_slices["X2"] == slice(k1, k1 + k2)
        np.testing.assert_array_equal(stacked.scores[:, :k1], fits[0].scores)

    def test_single_variable_is_identity(self, two_fits):
        _, fits = two_fits
        stacked = stack_scores(fits[:1])
        np.testing.assert_array_equal(stacked.scores, fits[0].scores)

    def test_round_trip_through_blocks(self, two_fits):
        _, fits = two_fits
        stacked = stack_scores(fits)
        for fit in fits:
            block = stacked.scores[:, stacked.block_slices[fit.variable]]
            np.testing.assert_array_equal(block, fit.scores)

    def test_subject_mismatch_rejected(self, two_fits):
        _, fits = two_fits
        import copy

        other = copy.copy(fits[1])
        other.subject_ids = list(reversed(fits[1].subject_ids))
        with pytest.raises(ValueError):
            stack_scores([fits[0], other])


class TestFitScoreCovariance:
    def test_known_diagonal_recovered(self):
        rng = np.random.default_rng(22)
        n = 500
        lengths = rng.uniform(10.0, 100.0, n)
        scores = np.column_stack([rng.normal(0, 1.0, n), rng.normal(0, np.sqrt(0.5), n)])
        model = fit_score_covariance(make_stacked(scores, lengths), FpcaConfig())
        # Averaged over the mid-range: pointwise values carry the smoother's
        # local noise (GCV keeps a handful of dof for pure-noise responses).
        mids = [eval_score_covariance(model, float(t)) for t in np.linspace(40.0, 70.0, 7)]
        err_first = np.mean([abs(m[0, 0] - 1.0) for m in mids])
        err_second = np.mean([abs(m[1, 1] - 0.5) for m in mids])
        assert err_first <= 0.15
        assert err_second <= 0.15

    def test_zero_scores_give_zero_model(self):
        lengths = np.linspace(10.0, 100.0, 40)
        model = fit_score_covariance(make_stacked(np.zeros((40, 3)), lengths), FpcaConfig())
        mat = eval_score_covariance(model, 50.0)
        np.testing.assert_allclose(mat, 0.0, atol=1e-10)

    def test_evaluation_symmetric(self):
        rng = np.random.default_rng(23)
        lengths = rng.uniform(10.0, 100.0, 60)
        scores = rng.normal(0, 1, (60, 4))
        model = fit_score_covariance(make_stacked(scores, lengths), FpcaConfig())
        raw = model.evaluate_raw(42.0)
        assert np.abs(raw - raw.T).max() == 0.0


class TestEvalScoreCovariance:
    def test_repair_idempotent_on_psd_input(self):
        model = make_constant_model([[2.0, 0.5], [0.5, 1.0]])
        mat = eval_score_covariance(model, 50.0)
        again = eval_score_covariance(make_constant_model(mat), 50.0)
        assert np.abs(again - mat).max() <= 1e-12

    def test_repaired_matrix_is_psd(self):
        model = make_constant_model([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
        mat = eval_score_covariance(model, 50.0)
        evals = np.linalg.eigvalsh(mat)
        assert evals.min() >= -1e-10

    def test_projection_matches_independent_eigensolver(self):
        base = np.array(
            [
                [2.0, 1.0, 0.0, 0.3],
                [1.0, -1.0, 0.4, 0.0],
                [0.0, 0.4, 1.5, -0.2],
                [0.3, 0.0, -0.2, 0.8],
            ]
        )
        model = make_constant_model(base)
        repaired = eval_score_covariance(model, 50.0)
        evals, evecs = jacobi_eigh(base)
        oracle = np.zeros_like(base)
        for m in range(4):
            if evals[m] > 0:
                oracle += evals[m] * np.outer(evecs[:, m], evecs[:, m])
        np.testing.assert_allclose(repaired, oracle, atol=1e-9)

    def test_out_of_range_rejected(self):
        from vdmfpca.errors import DomainError

        model = make_constant_model(np.eye(2))
        with pytest.raises(DomainError):
            eval_score_covariance(model, 500.0)


class TestMultivariateEigenAt:
    def test_identity_spectrum_contract(self):
        model = make_constant_model(np.eye(3))
        evals, evecs = multivariate_eigen_at(model, 50.0, num_components=3)
        np.testing.assert_allclose(evals, 1.0, atol=1e-9)
        np.testing.assert_allclose(evecs.T @ evecs, np.eye(3), atol=1e-10)
        assert abs(evals.sum() - 3.0) <= 1e-9

    def test_classic_two_by_two(self):
        model = make_constant_model([[2.0, 1.0], [1.0, 2.0]])
        evals, evecs = multivariate_eigen_at(model, 50.0, num_components=2)
        np.testing.assert_allclose(evals, [3.0, 1.0], atol=1e-9)
        np.testing.assert_allclose(np.abs(evecs[:, 0]), np.full(2, 1.0 / np.sqrt(2)), atol=1e-9)

    def test_full_reconstruction(self):
        base = np.array([[3.0, 0.7, 0.2], [0.7, 2.0, -0.4], [0.2, -0.4, 1.0]])
        model = make_constant_model(base)
        evals, evecs = multivariate_eigen_at(model, 50.0, num_components=3)
        rebuilt = (evecs * evals[None, :]) @ evecs.T
        np.testing.assert_allclose(rebuilt, eval_score_covariance(model, 50.0), atol=1e-10)

    def test_too_many_components_rejected(self):
        model = make_constant_model(np.eye(2))
        with pytest.raises(ValueError):
            multivariate_eigen_at(model, 50.0, num_components=3)


class TestMultivariateScores:
    def test_standard_basis_extracts_coordinates(self):
        scores = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        stacked = make_stacked(scores, [20.0, 30.0])
        rho = multivariate_scores(stacked, [np.eye(3), np.eye(3)])
        np.testing.assert_array_equal(rho, scores)

    def test_energy_preserved_under_full_rotation(self):
        rng = np.random.default_rng(24)
        scores = rng.normal(0, 1, (10, 4))
        stacked = make_stacked(scores, np.linspace(10, 100, 10))
        q, _ = np.linalg.qr(rng.normal(0, 1, (4, 4)))
        rho = multivariate_scores(stacked, [q] * 10)
        for xi, r in zip(scores, rho):
            assert abs(xi @ xi - r @ r) <= 1e-10

    def test_matches_naive_dot_products(self):
        xi = np.array([1.0, -2.0, 0.5])
        vecs = np.array([[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [-0.8, 0.0, 0.6]]).T
        stacked = make_stacked(xi[None, :], [50.0])
        rho = multivariate_scores(stacked, [vecs])[0]
        naive = [sum(xi[i] * vecs[i, m] for i in range(3)) for m in range(3)]
        np.testing.assert_allclose(rho, naive, atol=1e-12)

    def test_dimension_mismatch_rejected(self):
        stacked = make_stacked(np.ones((2, 3)), [20.0, 30.0])
        with pytest.raises(ValueError):
            multivariate_scores(stacked, [np.eye(2), np.eye(2)])


@pytest.fixture(scope="module")
def small_fit():
    dataset, truth = generate(SimConfig(n_subjects=40, sigma=0.05, seed=25))
    return dataset, truth, fit_vd_mfpca(dataset, FAST)


class TestMultivariateEigenfunctions:
    def test_concentrated_vector_reproduces_univariate(self, small_fit):
        _, _, fit = small_fit
        length = float(fit.stacked.domain_lengths[0])
        k_total = fit.stacked.total_components
        vec = np.zeros((k_total, 1))
        vec[0, 0] = 1.0
        funcs = multivariate_eigenfunctions(
            [fit.univariate_fits[v] for v in fit.variables], vec, length
        )
        uni = fit.univariate_fits["X1"].eigen_by_length[length].eigenfunctions[0]
        np.testing.assert_array_equal(funcs["X1"][0], uni)
        np.testing.assert_allclose(funcs["X2"][0], 0.0, atol=1e-15)

    def test_orthonormal_under_summed_inner_product(self, small_fit):
        _, _, fit = small_fit
        length = float(np.median(fit.stacked.domain_lengths))
        lengths = fit.stacked.domain_lengths
        length = float(lengths[np.argmin(np.abs(lengths - length))])
        _, vecs = fit.eigen_by_length[length]
        funcs = fit.eigenfunctions_at(length, fit.stacked.total_components)
        m = fit.stacked.total_components
        gram = np.zeros((m, m))
        for var in fit.variables:
            grid = fit.univariate_fits[var].eigen_by_length[length].grid
            w = trapezoid_weights(grid)
            gram += funcs[var] @ (w[:, None] * funcs[var].T)
        assert np.abs(gram - np.eye(m)).max() <= 1e-4

    def test_matches_naive_double_loop(self, small_fit):
        _, _, fit = small_fit
        length = float(fit.stacked.domain_lengths[3])
        _, vecs = fit.eigen_by_length[length]
        got = fit.eigenfunctions_at(length, 2)
        for var in fit.variables:
            ufit = fit.univariate_fits[var]
            eigen = ufit.eigen_by_length[length]
            block = vecs[fit.stacked.block_slices[var], :2]
            for m in range(2):
                for g in range(0, eigen.grid.size, max(1, eigen.grid.size // 5)):
                    naive = sum(
                        block[l, m] * eigen.eigenfunctions[l, g]
                        for l in range(eigen.eigenfunctions.shape[0])
                    )
                    assert abs(got[var][m, g] - naive) <= 1e-12


class TestReconstruct:
    def test_zero_components_gives_mean(self, small_fit):
        dataset, _, fit = small_fit
        rec = dataset.subjects[0]
        got = fit.reconstruct(rec.subject_id, num_components=0)
        for var in fit.variables:
            times, _ = rec.series[var]
            mu = fit.univariate_fits[var].mean_surface.evaluate(
                np.column_stack([times, np.full_like(times, rec.domain_length)])
            )
            np.testing.assert_array_equal(got[var], mu)

    def test_score_approximation_monotone_in_components(self, small_fit):
        _, _, fit = small_fit
        k_total = fit.stacked.total_components
        for idx in (0, 5, 11):
            xi = fit.stacked.scores[idx]
            length = float(fit.stacked.domain_lengths[idx])
            _, vecs = fit.eigen_by_length[length]
            rho = fit.multivariate_scores[idx]
            errors = []
            for m in range(k_total + 1):
                approx = vecs[:, :m] @ rho[:m]
                errors.append(float(np.sum((xi - approx) ** 2)))
            assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))

    def test_unknown_subject_rejected(self, small_fit):
        _, _, fit = small_fit
        with pytest.raises(KeyError):
            fit.reconstruct("nope")

    def test_full_energy_preserved(self, small_fit):
        _, _, fit = small_fit
        k_total = fit.stacked.total_components
        for xi, rho in zip(fit.stacked.scores, fit.multivariate_scores):
            assert abs(xi @ xi - rho @ rho) <= 1e-10


class TestRankDeficientReconstruction:
    def test_noiseless_three_component_data(self):
        # Three true components, generous retention, domains long enough for
        # the default spline resolution.
        from vdmfpca.dataset import FunctionalDataset, SubjectRecord
        from vdmfpca.simulate import eigenfunctions_type1, eigenfunctions_type2, mean_one, mean_two

        rng = np.random.default_rng(26)
        n = 60
        lam = np.array([1.0, 0.5, 0.25])
        subjects = []
        clean = {}
        for i in range(n):
            length = int(rng.integers(60, 101))
            grid = np.arange(1.0, length + 1.0)
            series = {}
            for var, basis, mean in (
                ("X1", eigenfunctions_type1(length, grid, 3), mean_one(grid)),
                ("X2", eigenfunctions_type2(length, grid, 3), mean_two(grid)),
            ):
                xi = rng.normal(0.0, np.sqrt(lam))
                curve = mean + xi @ basis
                series[var] = (grid.copy(), curve)
                clean[(i, var)] = curve
            subjects.append(SubjectRecord(f"S{i:03d}", float(length), series))
        data = FunctionalDataset(subjects=subjects, variables=["X1", "X2"])

        config = FpcaConfig(
            cov_basis=(12, 12, 6), pve_univariate=0.999, k_max=6, pve_multivariate=0.9999
        )
        fit = fit_vd_mfpca(data, config)
        from vdmfpca.metrics import armse_curves

        for var in ("X1", "X2"):
            truths = [clean[(i, var)] for i in range(n)]
            recons = [fit.reconstruct(f"S{i:03d}")[var] for i in range(n)]
            assert armse_curves(truths, recons) <= 0.05


class TestVarianceExplained:
    def test_equal_eigenvalues_give_equal_shares(self):
        model = make_constant_model(np.eye(4))
        shares = variance_explained_curve(model, [30.0, 60.0])
        np.testing.assert_allclose(shares, 0.25, atol=1e-9)

    def test_shares_sum_to_one_with_all_components(self):
        base = np.diag([2.0, 1.0, 0.5])
        model = make_constant_model(base)
        shares = variance_explained_curve(model, [40.0])
        assert abs(shares.sum() - 1.0) <= 1e-12

    def test_matches_independent_recomputation(self):
        rng = np.random.default_rng(27)
        lengths = rng.uniform(10.0, 100.0, 80)
        scores = np.column_stack(
            [rng.normal(0, 1, 80), rng.normal(0, 0.7, 80), rng.normal(0, 0.4, 80)]
        )
        model = fit_score_covariance(make_stacked(scores, lengths), FpcaConfig())
        probes = [20.0, 50.0, 90.0]
        shares = variance_explained_curve(model, probes)
        for row, probe in zip(shares, probes):
            mat = eval_score_covariance(model, probe)
            evals = np.sort(np.linalg.eigvalsh(mat))[::-1]
            evals = np.clip(evals, 0.0, None)
            np.testing.assert_allclose(row, evals / evals.sum(), atol=1e-9)


class TestScoreDomainAssociation:
    def test_perfectly_increasing(self):
        rho, pval = score_domain_association([1.0, 2.0, 3.0, 4.0], [10.0, 20.0, 30.0, 40.0])
        assert rho == pytest.approx(1.0)
        assert pval == 0.0

    def test_anti_monotone(self):
        rho, _ = score_domain_association([4.0, 3.0, 2.0, 1.0], [10.0, 20.0, 30.0, 40.0])
        assert rho == pytest.approx(-1.0)

    def test_matches_definitional_rank_formula(self):
        rng = np.random.default_rng(28)
        x = rng.normal(0, 1, 10)
        y = rng.normal(0, 1, 10)
        rho, _ = score_domain_association(x, y)

        def ranks(v):
            order = sorted(range(len(v)), key=lambda i: v[i])
            out = [0.0] * len(v)
            for pos, idx in enumerate(order):
                out[idx] = pos + 1.0
            return out

        rx, ry = ranks(list(x)), ranks(list(y))
        mx = sum(rx) / 10
        my = sum(ry) / 10
        num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
        den = (sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry)) ** 0.5
        assert rho == pytest.approx(num / den, abs=1e-12)

    def test_constant_input_rejected(self):
        with pytest.raises(ValueError):
            score_domain_association([1.0, 1.0, 1.0], [10.0, 20.0, 30.0])


class TestFixedDomainConsistency:
    def test_matches_raw_sample_covariance_eigenvectors(self):
        rng = np.random.default_rng(29)
        n = 80
        scores = np.column_stack(
            [rng.normal(0, 1, n), rng.normal(0, 0.6, n), rng.normal(0, 0.3, n)]
        )
        stacked = make_stacked(scores, np.full(n, 55.0))
        model = fit_score_covariance(stacked, FpcaConfig())
        _, vecs = multivariate_eigen_at(model, 55.0, num_components=3)

        raw = scores.T @ scores / n
        evals, direct = np.linalg.eigh(raw)
        order = np.argsort(evals)[::-1]
        direct = direct[:, order]
        for m in range(3):
            cosine = abs(float(vecs[:, m] @ direct[:, m]))
            angle = np.degrees(np.arccos(min(cosine, 1.0)))
            assert angle <= 5.0


class TestEigenvectorOrthonormality:
    def test_every_evaluated_length(self, small_fit):
        _, _, fit = small_fit
        for evals, vecs in fit.eigen_by_length.values():
            assert np.abs(vecs.T @ vecs - np.eye(vecs.shape[1])).max() <= 1e-10
            assert np.all(np.diff(evals) <= 1e-12)
