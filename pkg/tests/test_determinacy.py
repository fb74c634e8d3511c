import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsdet import (
    GroupSpec,
    ModelError,
    ModelSpec,
    Path,
    SingularMatrixError,
    benchmark_loading,
    build_sigma,
    closed_form_rho_sq,
    combined_loading,
    compensation,
    d_to_r,
    determinacy_closed,
    determinacy_matrix,
    determinacy_with_group,
    regression_weights,
    score_group_d,
)
from fsdet.determinacy import solve_cholesky, solve_rank_one
from fsdet.model import implied_structure

# frozen from tests/oracles.py (exact rational arithmetic / bisection / simulation)
W_08_03 = (0.7724957555178269, 0.11460101867572153)
W_3X06 = 15 / 43
RHO_SQ_UNEQUAL_4 = 0.7842221242838255
K_P10_L06_D05 = 1.2811515969410714
D_SCORE_SIMULATED = 0.7495442570203615


class TestRegressionWeights:
    def test_single_variable(self):
        w = regression_weights(build_sigma(ModelSpec(1, 0.6)))
        np.testing.assert_allclose(w, [[0.6]], atol=1e-15)

    def test_equal_loadings_equal_weights(self):
        w = regression_weights(build_sigma(ModelSpec(3, 0.6)))[:, 0]
        np.testing.assert_allclose(w, W_3X06, atol=1e-14)

    def test_unequal_two_variables(self):
        w = regression_weights(build_sigma(ModelSpec(2, (0.8, 0.3))))[:, 0]
        np.testing.assert_allclose(w, W_08_03, atol=1e-14)

    def test_phi_scaling(self):
        cs = build_sigma(ModelSpec(2, (0.8, 0.3)))
        with pytest.raises(ModelError):
            regression_weights(cs, phi=[[2.0]])

    @given(st.lists(st.floats(0.05, 0.9), min_size=1, max_size=12), st.floats(0, 1))
    @settings(max_examples=60)
    def test_rank_one_path_matches_cholesky(self, loadings, d):
        lam = loadings[0]
        if lam**2 + d_to_r(d) ** 2 >= 0.99:
            return
        for model in (ModelSpec(len(loadings), tuple(loadings)),
                      ModelSpec.equal(len(loadings), lam, d)):
            cs = build_sigma(model)
            fast = regression_weights(cs, method="rank_one")
            ref = regression_weights(cs, method="cholesky")
            np.testing.assert_allclose(fast, ref, rtol=0, atol=1e-12)

    def test_singular_rejected(self):
        sigma = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(SingularMatrixError):
            solve_cholesky(sigma, np.ones(2))

    def test_rank_one_rejects_two_factor(self):
        cs = implied_structure([0.5, 0.6], [0.3, 0.0])
        with pytest.raises(ModelError):
            solve_rank_one(cs, np.ones(2))
        # auto falls back to the reference solve
        w = regression_weights(cs, loadings=[0.5, 0.6])
        np.testing.assert_allclose(cs.sigma @ w[:, 0], [0.5, 0.6], atol=1e-14)


class TestDeterminacyMatrix:
    def test_single_variable(self):
        (rep,) = determinacy_matrix(build_sigma(ModelSpec(1, 0.6)))
        assert rep.rho == pytest.approx(0.6, abs=1e-15)
        assert rep.rho_sq == pytest.approx(0.36, abs=1e-15)
        assert rep.path is Path.MATRIX

    def test_moderate_d_example(self):
        (rep,) = determinacy_matrix(build_sigma(ModelSpec.equal(10, 0.6, 0.5)))
        assert round(rep.rho_sq, 2) == 0.88
        assert rep.rho_sq == pytest.approx(0.8781450419338924, abs=1e-12)

    def test_unequal_loadings_against_exact_inverse(self):
        (rep,) = determinacy_matrix(build_sigma(ModelSpec(4, (0.5, 0.6, 0.7, 0.8))))
        assert rep.rho_sq == pytest.approx(RHO_SQ_UNEQUAL_4, abs=1e-12)
        assert rep.lambda_used == (0.5, 0.6, 0.7, 0.8)

    def test_two_correlated_factors(self):
        # independent cluster structure: factor 1 on vars 0-2, factor 2 on 3-5
        lam = np.zeros((6, 2))
        lam[:3, 0] = 0.7
        lam[3:, 1] = 0.6
        phi = np.array([[1.0, 0.3], [0.3, 1.0]])
        common = lam @ phi @ lam.T
        sigma = common.copy()
        np.fill_diagonal(sigma, 1.0)
        uniq = 1 - np.diag(common)
        from fsdet.model import CorrelationStructure
        cs = CorrelationStructure(sigma, np.sqrt(np.diag(common)), uniq,
                                  np.zeros(6), np.zeros(6))
        reps = determinacy_matrix(cs, lam, phi, method="cholesky")
        expected = np.diag(phi @ lam.T @ np.linalg.inv(sigma) @ lam @ phi)
        np.testing.assert_allclose([r.rho_sq for r in reps], expected, atol=1e-12)


class TestClosedForm:
    def test_no_group_example(self):
        rep = determinacy_closed(10, 0.6)
        assert round(rep.rho_sq, 2) == 0.85
        assert rep.rho_sq == pytest.approx(45 / 53, abs=1e-15)
        assert rep.path is Path.CLOSED_FORM

    def test_single_variable(self):
        assert determinacy_closed(1, 0.6).rho_sq == pytest.approx(0.36, abs=1e-15)

    def test_zero_loading_by_continuity(self):
        rep = determinacy_closed(10, 0.0)
        assert rep.rho == 0.0 and rep.rho_sq == 0.0

    @pytest.mark.parametrize("p,lam", [(0, 0.5), (2.5, 0.5), (3, 1.0), (3, -0.2)])
    def test_rejects(self, p, lam):
        with pytest.raises(ModelError):
            determinacy_closed(p, lam)

    @pytest.mark.parametrize("p", range(1, 31))
    def test_matches_matrix(self, p):
        for lam in np.arange(1, 10) / 10:
            closed = determinacy_closed(p, lam).rho_sq
            (mat,) = determinacy_matrix(build_sigma(ModelSpec(p, lam)))
            assert abs(closed - mat.rho_sq) < 1e-12

    @given(st.integers(1, 200), st.floats(0.01, 0.98))
    def test_rho_sq_is_rho_squared_and_bounded(self, p, lam):
        rep = determinacy_closed(p, lam)
        assert 0 <= rep.rho <= 1
        assert rep.rho_sq == pytest.approx(rep.rho**2, abs=1e-12)
        assert rep.rho_sq < 1

    @given(st.integers(1, 200), st.floats(0.01, 0.95))
    def test_monotone(self, p, lam):
        assert determinacy_closed(p + 1, lam).rho_sq > determinacy_closed(p, lam).rho_sq
        assert determinacy_closed(p, lam + 0.01).rho_sq > determinacy_closed(p, lam).rho_sq

    def test_limit_large_p(self):
        assert determinacy_closed(10**9, 0.3).rho_sq == pytest.approx(1.0, abs=1e-7)


class TestWithGroup:
    def test_moderate_d_example(self):
        rep = determinacy_with_group(10, 0.60, 0.50)
        assert round(rep.rho_sq, 3) == 0.878
        assert rep.lambda_used == pytest.approx(math.sqrt(0.36 + 0.25 / 4.25), abs=1e-15)

    def test_no_group_matches_closed(self):
        assert determinacy_with_group(10, 0.6, 0.0) == determinacy_closed(10, 0.6)
        assert round(determinacy_with_group(10, 0.6, 0.0).rho_sq, 3) == 0.849

    def test_nothing_common(self):
        assert determinacy_with_group(10, 0.0, 0.0).rho_sq == 0.0

    @given(st.integers(1, 40), st.floats(0, 1.5))
    def test_zero_common_loading_is_group_baseline(self, p, d):
        assert determinacy_with_group(p, 0.0, d).rho_sq == pytest.approx(
            closed_form_rho_sq(p, d_to_r(d) ** 2), abs=1e-14
        )

    @given(st.integers(1, 40), st.floats(0, 0.85), st.floats(0, 1), st.floats(0.05, 0.95))
    def test_equals_closed_at_combined_loading(self, p, lam, d, p1):
        group = GroupSpec(d, p1)
        if lam**2 + d_to_r(group) ** 2 >= 0.999:
            return
        got = determinacy_with_group(p, lam, group)
        ref = determinacy_closed(p, combined_loading(lam, group))
        assert got.rho_sq == pytest.approx(ref.rho_sq, abs=1e-15)


class TestBenchmark:
    def test_ninety_percent_at_four(self):
        lam_sq = benchmark_loading(4, 0.90)
        assert lam_sq == pytest.approx(9 / 13, abs=1e-12)
        assert round(lam_sq, 2) == 0.69

    def test_eighty_percent_at_four(self):
        assert benchmark_loading(4, 0.80) == pytest.approx(0.5, abs=1e-12)

    def test_fifty_percent_single_variable(self):
        assert benchmark_loading(1, 0.50) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("p", range(1, 31))
    def test_specializations(self, p):
        assert benchmark_loading(p, 0.5) == pytest.approx(1 / (p + 1), abs=1e-12)
        assert benchmark_loading(p, 0.8) == pytest.approx(4 / (p + 4), abs=1e-12)
        assert benchmark_loading(p, 0.9) == pytest.approx(9 / (p + 9), abs=1e-12)

    @given(st.integers(1, 100), st.floats(0.01, 0.99))
    def test_round_trip(self, p, t):
        lam = math.sqrt(benchmark_loading(p, t))
        assert determinacy_closed(p, lam).rho_sq == pytest.approx(t, abs=1e-12)

    @pytest.mark.parametrize("t", [0.0, 1.0, 1.2])
    def test_rejects_targets(self, t):
        with pytest.raises(ModelError):
            benchmark_loading(4, t)


class TestCompensation:
    def test_worked_example(self):
        plan = compensation(5, 0.60, 0.81)
        assert round(plan.k, 2) == 1.78
        assert round(plan.p_plus_exact, 1) == 3.9
        assert plan.p_plus_rounded == 4
        assert round(plan.rho_sq_before, 2) == 0.83
        assert round(plan.rho_sq_after_elimination, 2) == 0.74

    def test_no_group(self):
        plan = compensation(7, 0.5, 0.0)
        assert plan.k == 1.0
        assert plan.p_plus_exact == 0.0 and plan.p_plus_rounded == 0

    def test_against_bisection_oracle(self):
        plan = compensation(10, 0.60, 0.50)
        assert plan.k == pytest.approx(K_P10_L06_D05, abs=1e-9)
        assert plan.p_plus_exact == pytest.approx(10 * K_P10_L06_D05 - 10, abs=1e-8)
        assert plan.p_plus_rounded == 3

    def test_zero_loading_rejected(self):
        with pytest.raises(ModelError):
            compensation(5, 0.0, 0.5)

    def test_rounds_half_up(self, monkeypatch):
        import fsdet.determinacy as det
        monkeypatch.setattr(det, "compensation_factor", lambda lam, g: 1.5)
        assert det.compensation(5, 0.5, 0.5).p_plus_rounded == 3

    @given(st.integers(1, 40), st.floats(0.1, 0.9), st.floats(0, 1))
    def test_equating_identity(self, p, lam, d):
        if lam**2 + d_to_r(d) ** 2 >= 0.999:
            return
        plan = compensation(p, lam, d)
        assert closed_form_rho_sq(plan.k * p, lam**2) == pytest.approx(plan.rho_sq_before, abs=1e-9)
        assert plan.rho_sq_before >= plan.rho_sq_after_elimination
        assert plan.k >= 1.0

    @given(st.floats(0.1, 0.8), st.floats(0.05, 0.9), st.floats(0.01, 0.1))
    def test_k_increasing_in_d(self, lam, d, delta):
        from fsdet import compensation_factor
        assert compensation_factor(lam, d + delta) > compensation_factor(lam, d)

    @given(st.floats(0.05, 1.0), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
    def test_k_u_shaped_in_loading(self, d, u1, u2):
        # k falls while lambda^2 < (1 - r^2) / 2 and rises after that
        from fsdet import compensation_factor
        r2 = d_to_r(d) ** 2
        a_min = (1 - r2) / 2
        lo, hi = sorted((u1, u2))
        if hi - lo < 1e-3:
            return
        below = [math.sqrt(a_min * u) for u in (lo, hi)]
        k_below = [compensation_factor(lam, d) for lam in below]
        assert k_below[1] < k_below[0]
        above = [math.sqrt(a_min + (1 - r2 - a_min) * u) for u in (lo, hi)]
        k_above = [compensation_factor(lam, d) for lam in above]
        assert k_above[1] > k_above[0]


class TestScoreGroupD:
    def test_against_simulation(self):
        assert score_group_d(10, 0.60, 0.50) == pytest.approx(D_SCORE_SIMULATED, abs=0.005)
        assert round(score_group_d(10, 0.60, 0.50), 3) == 0.750

    def test_no_group(self):
        assert score_group_d(10, 0.6, 0.0) == 0.0

    def test_single_variable_returns_d(self):
        assert score_group_d(1, 0.0, 0.5) == pytest.approx(0.5, abs=1e-15)
        assert score_group_d(1, 0.0, GroupSpec(0.5, 0.2)) == pytest.approx(0.5, abs=1e-15)

    @given(st.integers(1, 30), st.floats(0, 0.8), st.floats(0, 1))
    def test_amplified_relative_to_items(self, p, lam, d):
        if lam**2 + d_to_r(d) ** 2 >= 0.99:
            return
        # the sum of p items never shows a smaller d than one item does
        assert score_group_d(p, lam, d) >= score_group_d(1, lam, d) - 1e-12
