import json

import numpy as np
import pytest
from scipy import stats

from edrdim import (
    Grid,
    ProcessSpec,
    TableSetting,
    beta_curves,
    generate_functional,
    generate_model5,
    inner_product,
    proposition1_check,
    run_table,
    statistic_profile,
    statistic_sample,
    table_settings,
)
from edrdim.errors import DomainError
from edrdim.simlab import (
    MODEL5_SIGNAL_EIGENVALUES,
    MODEL_TRUE_K,
    ModelSpec,
    _model5_basis,
    _model_link,
    _replicate_rng,
    beta_coefficients,
)

GRID_501 = Grid.uniform(501)


def _b_matrix(direction_rows, m):
    """Score-space projection coefficients of chosen directions, m columns."""
    omega = 20.0 * (np.arange(1, m + 1) + 1.5) ** -3
    coef = beta_coefficients(100)[direction_rows, :m]
    return coef * np.sqrt(omega)


class TestProcessSpec:
    def test_eigenvalue_rule(self):
        spec = ProcessSpec()
        assert spec.eigenvalue(1) == pytest.approx(1.28)
        assert np.allclose(spec.eigenvalues()[:3], [1.28, 20 / 3.5**3, 20 / 4.5**3])

    def test_validation(self):
        with pytest.raises(DomainError):
            ProcessSpec(score_law="student_t", nu=2.0)
        with pytest.raises(DomainError):
            ProcessSpec(truncation=4)
        with pytest.raises(DomainError):
            ProcessSpec(truncation=100, grid_size=150)
        with pytest.raises(DomainError):
            ProcessSpec(score_law="cauchy")


class TestModelSpec:
    def test_true_dimensions(self):
        assert [ModelSpec.for_model(i).true_dimension for i in (1, 2, 3)] == [1, 2, 3]
        assert ModelSpec.for_model(4).true_dimension == 2
        assert ModelSpec.for_model(5, p=20).true_dimension == 2

    def test_frozen_parameters(self):
        with pytest.raises(DomainError):
            ModelSpec(1, noise_sd=1.0)
        with pytest.raises(DomainError):
            ModelSpec(5, p=4, signal_eigenvalues=MODEL5_SIGNAL_EIGENVALUES)


class TestBetaCurves:
    def test_first_direction_leading_coefficient(self):
        beta1 = beta_curves(GRID_501, 100)[0]
        mode = np.sqrt(2.0) * np.cos(2 * np.pi * GRID_501.points)
        assert inner_product(beta1, mode, GRID_501) == pytest.approx(0.9, abs=1e-6)

    def test_second_direction_is_pure_sine(self):
        beta2 = beta_curves(GRID_501, 100)[1]
        for k in range(1, 12):
            mode = np.sqrt(2.0) * np.cos(2 * np.pi * k * GRID_501.points)
            assert inner_product(beta2, mode, GRID_501) == pytest.approx(0.0, abs=1e-8)

    def test_truncation_floor(self):
        with pytest.raises(DomainError):
            beta_coefficients(6)

    def test_hidden_direction_rank_structure(self):
        # Projections of the first and fourth directions onto the leading
        # five components are collinear; the sixth component separates them.
        b5 = _b_matrix([0, 3], 5)
        s5 = np.linalg.svd(b5, compute_uv=False)
        assert s5[1] <= 1e-12 * s5[0]
        b6 = _b_matrix([0, 3], 6)
        s6 = np.linalg.svd(b6, compute_uv=False)
        assert s6[1] > 1e-3

    @pytest.mark.parametrize("model,rows,m_full", [(1, [0], 1), (2, [0, 1], 2), (3, [0, 1, 2], 3)])
    def test_population_rank_recovers_true_dimension(self, model, rows, m_full):
        b = _b_matrix(rows, 3)
        rank = np.linalg.matrix_rank(b, tol=1e-10)
        assert rank == MODEL_TRUE_K[model]
        if m_full > 1:
            b_small = _b_matrix(rows, m_full - 1)
            assert np.linalg.matrix_rank(b_small, tol=1e-10) < MODEL_TRUE_K[model]


class TestGenerateFunctional:
    def test_projection_variance_matches_coefficients(self):
        # Analytic oracle: var of the first projection is the weighted sum
        # of squared direction coefficients.
        omega = 20.0 * (np.arange(1, 101) + 1.5) ** -3
        analytic = float(np.sum(omega * beta_coefficients(100)[0] ** 2))
        curves, _ = generate_functional(1, ProcessSpec(), 10_000, seed=17)
        beta1 = beta_curves(curves.grid, 100)[0]
        proj = (curves.values * curves.grid.weights) @ beta1
        assert np.var(proj) == pytest.approx(analytic, rel=0.06)

    def test_link_at_origin(self):
        zero = np.zeros((3, 4))
        assert np.allclose(_model_link(1, zero), 1.0)  # 1 + 2 sin(0)

    def test_student_t_scores_are_heavy_tailed(self):
        def first_score_kurtosis(law, seed):
            curves, _ = generate_functional(
                1, ProcessSpec(score_law=law), 10_000, seed=seed
            )
            mode = np.sqrt(2.0) * np.cos(2 * np.pi * curves.grid.points)
            xi = (curves.values * curves.grid.weights) @ mode / np.sqrt(1.28)
            return float(np.mean(xi**4) / np.mean(xi**2) ** 2)

        assert abs(first_score_kurtosis("gaussian", 3) - 3.0) < 0.3
        assert first_score_kurtosis("student_t", 3) > 4.0

    def test_student_t_scores_uncorrelated_but_dependent(self):
        curves, _ = generate_functional(
            2, ProcessSpec(score_law="student_t"), 10_000, seed=5
        )
        w = curves.grid.weights
        cos1 = np.sqrt(2.0) * np.cos(2 * np.pi * curves.grid.points)
        sin1 = np.sqrt(2.0) * np.sin(2 * np.pi * curves.grid.points)
        eta1 = (curves.values * w) @ cos1 / np.sqrt(20 / 2.5**3)
        eta2 = (curves.values * w) @ sin1 / np.sqrt(20 / 3.5**3)
        assert abs(np.corrcoef(eta1, eta2)[0, 1]) < 0.05
        assert np.corrcoef(eta1**2, eta2**2)[0, 1] > 0.1

    def test_score_moment_sanity(self):
        n = 2000
        curves, _ = generate_functional(1, ProcessSpec(), n, seed=99)
        w = curves.grid.weights
        omega = 20.0 * (np.arange(1, 7) + 1.5) ** -3
        for j in range(1, 7):
            k = (j + 1) // 2
            angle = 2 * np.pi * k * curves.grid.points
            mode = np.sqrt(2.0) * (np.cos(angle) if j % 2 else np.sin(angle))
            eta = (curves.values * w) @ mode / np.sqrt(omega[j - 1])
            assert abs(eta.mean()) <= 4 / np.sqrt(n)
            assert abs(eta.var() - 1.0) <= 8 / np.sqrt(n)

    def test_same_stream_same_data(self):
        a = generate_functional(1, ProcessSpec(), 20, seed=123)
        b = generate_functional(1, ProcessSpec(), 20, seed=123)
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[1].y, b[1].y)

    def test_replicate_stream_is_worker_independent(self):
        r1 = _replicate_rng(7, (1, 0, 50, 0), 3)
        r2 = _replicate_rng(7, (1, 0, 50, 0), 3)
        a = generate_functional(1, ProcessSpec(), 50, r1)
        b = generate_functional(1, ProcessSpec(), 50, r2)
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[1].y, b[1].y)

    def test_model5_id_rejected(self):
        with pytest.raises(DomainError):
            generate_functional(5, ProcessSpec(), 50, seed=1)


class TestGenerateModel5:
    def test_population_covariance_eigenvalues(self):
        basis = _model5_basis()
        p = 15
        cov = np.eye(p)
        cov[:10, :10] += basis @ np.diag(MODEL5_SIGNAL_EIGENVALUES) @ basis.T
        eigs = np.sort(np.linalg.eigvalsh(cov))[::-1]
        assert np.allclose(eigs[:5], [4.0, 3.8, 3.6, 3.4, 3.2], atol=1e-10)
        assert np.allclose(eigs[5:], 1.0, atol=1e-10)

    def test_sample_covariance_tracks_population(self):
        surrogate, _ = generate_model5(10_000, 15, seed=2)
        sample = np.cov(surrogate.values.T, ddof=0)
        top = np.sort(np.linalg.eigvalsh(sample))[::-1][:5]
        assert np.all(np.abs(top - [4.0, 3.8, 3.6, 3.4, 3.2]) < 0.4)

    def test_direction_span_rank(self):
        # The response touches the latent coordinates through exactly two
        # directions: (1,1,0,0,0,...) and (0,1,1,1,1,0,...).
        d = np.zeros((2, 10))
        d[0, :2] = 1.0
        d[1, 1:5] = 1.0
        assert np.linalg.matrix_rank(d) == 2

    def test_transcribed_formula(self):
        n, p, seed = 40, 12, 31
        surrogate, y = generate_model5(n, p, seed)
        rng = np.random.default_rng(seed)
        latent = rng.standard_normal((n, 5)) * np.sqrt(MODEL5_SIGNAL_EIGENVALUES)
        error = rng.standard_normal((n, p))
        noise = rng.normal(0.0, 0.5, size=n)
        x = np.zeros((n, p))
        x[:, :10] = latent @ _model5_basis().T
        y_expected = (
            (x[:, 0] + x[:, 1]) / (x[:, 1] + x[:, 2] + x[:, 3] + x[:, 4] + 1.5) ** 2
            + noise
        )
        assert np.array_equal(surrogate.values, x + error)
        assert np.array_equal(y.y, y_expected)

    def test_needs_ten_coordinates(self):
        with pytest.raises(DomainError):
            generate_model5(50, 8, seed=1)


class TestRunTable:
    def test_byte_identical_across_parallelism(self):
        settings = [
            TableSetting(model=1, dist="normal", n=64, method="chi2",
                         task="reject", m=3, k0=1),
            TableSetting(model=1, dist="normal", n=64, method="chi2",
                         task="dimension", m=3),
        ]
        blobs = []
        for workers in (1, 2, 3):
            reports = run_table(settings, 16, master_seed=5, parallelism=workers)
            blobs.append(json.dumps([r.to_json_dict() for r in reports]))
            assert all(r.successes == round(r.frequency * 16) for r in reports)
        assert blobs[0] == blobs[1] == blobs[2]

    def test_monte_carlo_se_formula(self):
        settings = [
            TableSetting(model=1, dist="normal", n=64, method="chi2",
                         task="reject", m=3, k0=0),
        ]
        report = run_table(settings, 25, master_seed=6)[0]
        f = report.frequency
        assert report.monte_carlo_se == pytest.approx(np.sqrt(f * (1 - f) / 25))

    def test_csv_round_trip_shape(self):
        settings = table_settings(4, model=5, n=64, p=12)
        reports = run_table(settings, 4, master_seed=8, parallelism=1)
        header = reports[0].CSV_HEADER.split(",")
        for report in reports:
            assert len(report.to_csv_row().split(",")) == len(header)

    def test_empty_settings(self):
        assert run_table([], 10, master_seed=0) == []

    def test_setting_validation(self):
        with pytest.raises(DomainError):
            TableSetting(model=1, dist="normal", n=50, method="chi2",
                         task="reject")  # m missing
        with pytest.raises(DomainError):
            TableSetting(model=5, dist="normal", n=50, method="chi2",
                         task="reject", m=5)  # p missing
        with pytest.raises(DomainError):
            TableSetting(model=2, dist="normal", n=50, method="chi2",
                         task="reject", m=5, p=10)  # p on a functional model

    def test_dimension_target_defaults_to_true_k(self):
        s = TableSetting(model=3, dist="t", n=100, method="adaptive_neyman",
                         task="dimension")
        assert s.target_k == 3


class TestTableSettings:
    def test_table1_cells(self):
        cells = table_settings(1, model=2, dist="t", n=200)
        assert len(cells) == 7
        assert all(c.task == "reject" and c.k0 == 1 for c in cells)
        assert {(c.method, c.m) for c in cells} >= {("chi2", 5), ("adjusted_chi2", 30)}

    def test_table5_is_size_check(self):
        cells = table_settings(5, model=5, n=200, p=20)
        assert all(c.task == "reject" and c.k0 == 2 for c in cells)
        assert {(c.method, c.m) for c in cells} == {("chi2", 20), ("adaptive_neyman", None)}

    def test_mismatched_model(self):
        with pytest.raises(DomainError):
            table_settings(1, model=5, n=100, p=15)
        with pytest.raises(DomainError):
            table_settings(4, model=1, n=100)


class TestStatisticProfile:
    def test_reference_line_values(self):
        rows = statistic_profile(
            200, m_values=[4, 5, 6], k0=2, replicates=4, master_seed=3,
            parallelism=1,
        )
        assert [r.reference for r in rows] == [10, 15, 20]
        assert all(r.mean_statistic > 0 for r in rows)

    def test_sample_matches_profile_mean(self):
        sample = statistic_sample(
            4, "normal", 200, k0=2, m=5, replicates=6, master_seed=3,
            parallelism=1,
        )
        rows = statistic_profile(
            200, m_values=[5], k0=2, replicates=6, master_seed=3, parallelism=1
        )
        assert rows[0].mean_statistic == pytest.approx(float(sample.mean()))


class TestProposition1:
    def test_r_zero_statistic_is_squared_frobenius_norm(self, rng):
        z = rng.standard_normal((4, 6))
        lam = np.linalg.eigvalsh(z @ z.T)
        assert lam.sum() == pytest.approx(float(np.sum(z**2)), rel=1e-10)

    def test_r_zero_bound_is_exact_distribution(self):
        report = proposition1_check(2, 3, 0, replicates=40_000, seed=1)
        for row in report.rows:
            # Exact law: empirical tail matches the bound both ways.
            assert abs(row.empirical_exceedance - row.bound_exceedance) <= 1.5 * row.tolerance
        assert report.dominated

    def test_small_case_dominated(self):
        report = proposition1_check(3, 4, 1, replicates=30_000, seed=7)
        assert report.dominated
        assert report.rows[0].probability == 0.5

    def test_deterministic(self):
        a = proposition1_check(3, 4, 1, replicates=5_000, seed=9)
        b = proposition1_check(3, 4, 1, replicates=5_000, seed=9)
        assert a.to_json_dict() == b.to_json_dict()

    def test_r_range_validated(self):
        with pytest.raises(DomainError):
            proposition1_check(3, 4, 3, replicates=100, seed=0)
