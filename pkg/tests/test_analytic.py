import math

import numpy as np
import pytest
from scipy.integrate import quad

from aoi_erasure.analytic import (
    BracketError,
    RootSolverConfig,
    aoi_maf_wfb,
    aoi_rr_nofb,
    baseline_infinite_battery,
    exp_max_moments,
    feedback_gain,
    optimize_gamma,
    p_nofb,
    p_wfb,
    percentage_gain,
    solve_nofb,
    solve_wfb,
)
from aoi_erasure.model import Feedback, Regime

# root of e^-x = x^2/2, the common q = 0 solution of both settings
ROOT_Q0 = 0.9012010317296648


class TestRootSolverConfig:
    def test_defaults(self):
        cfg = RootSolverConfig()
        assert cfg.bracket_lo == 0.0
        assert cfg.bracket_hi == 50.0
        assert cfg.tol == 1e-12
        assert cfg.max_iter == 200

    def test_validation(self):
        with pytest.raises(ValueError):
            RootSolverConfig(bracket_lo=2.0, bracket_hi=1.0)
        with pytest.raises(ValueError):
            RootSolverConfig(tol=0.0)
        with pytest.raises(ValueError):
            RootSolverConfig(max_iter=0)


class TestExpMaxMoments:
    def test_gamma_zero_is_plain_exponential(self):
        mm = exp_max_moments(0.0)
        assert mm.m1 == 1.0
        assert mm.m2 == 2.0

    @pytest.mark.parametrize("gamma", [1.0, 2.0])
    def test_matches_numerical_integration(self, gamma):
        m1_num, _ = quad(lambda t: max(gamma, t) * math.exp(-t), 0.0, 60.0)
        m2_num, _ = quad(lambda t: max(gamma, t) ** 2 * math.exp(-t), 0.0, 60.0)
        mm = exp_max_moments(gamma)
        assert mm.m1 == pytest.approx(m1_num, rel=1e-9)
        assert mm.m2 == pytest.approx(m2_num, rel=1e-9)

    def test_frozen_values(self):
        mm1 = exp_max_moments(1.0)
        assert mm1.m1 == pytest.approx(1.3678794411714423, abs=1e-12)
        assert mm1.m2 == pytest.approx(2.4715177646857693, abs=1e-12)
        mm2 = exp_max_moments(2.0)
        assert mm2.m1 == pytest.approx(2.1353352832366127, abs=1e-12)
        assert mm2.m2 == pytest.approx(4.812011699419676, abs=1e-12)

    def test_moment_inequalities(self):
        for gamma in np.linspace(0.0, 20.0, 81):
            mm = exp_max_moments(float(gamma))
            assert mm.m1 >= max(gamma, 1.0)
            assert mm.m2 >= mm.m1 * mm.m1

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            exp_max_moments(-0.5)


class TestPnofb:
    def test_at_zero(self):
        assert p_nofb(0.0, 0.3) == pytest.approx(0.4 / 0.49, rel=1e-12)
        assert p_nofb(0.0, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_q_zero_root(self):
        assert abs(p_nofb(ROOT_Q0, 0.0)) < 1e-4
        assert abs(p_nofb(ROOT_Q0, 0.0)) < 1e-12

    @pytest.mark.parametrize("q", [0.0, 0.3, 0.7, 0.9])
    def test_strictly_decreasing(self, q):
        grid = np.linspace(0.0, 50.0, 2001)
        vals = np.array([p_nofb(float(x), q) for x in grid])
        assert np.all(np.diff(vals) < 0.0)

    def test_domain(self):
        with pytest.raises(ValueError):
            p_nofb(-0.1, 0.3)
        with pytest.raises(ValueError):
            p_nofb(0.1, 1.0)


class TestSolveNofb:
    @pytest.mark.parametrize("q", [0.5, 0.6, 0.75])
    def test_greedy_regime_exact(self, q):
        sol = solve_nofb(q)
        assert sol.regime is Regime.GREEDY
        assert sol.threshold == 0.0
        assert sol.lambda_star == 1.0 / (1.0 - q)

    def test_q_zero(self):
        sol = solve_nofb(0.0)
        assert sol.regime is Regime.THRESHOLD
        assert sol.threshold == pytest.approx(ROOT_Q0, abs=1e-9)
        assert sol.lambda_star == sol.threshold

    def test_q_03_frozen(self):
        sol = solve_nofb(0.3)
        assert sol.threshold == pytest.approx(0.47047144322816536, abs=1e-9)
        assert sol.lambda_star == pytest.approx(1.4091964099730947, abs=1e-9)

    def test_q_03_matches_renewal_ratio(self):
        # independent reconstruction from the epoch moments: x = max(lp, tau),
        # epoch = geometric number of inter-attempt waits
        q = 0.3
        sol = solve_nofb(q)
        mm = exp_max_moments(sol.threshold)
        e_y = mm.m1 / (1.0 - q)
        e_r = mm.m2 / (2.0 * (1.0 - q)) + q * mm.m1**2 / (1.0 - q) ** 2
        assert sol.lambda_star == pytest.approx(e_r / e_y, rel=1e-10)

    def test_threshold_positive_below_half(self):
        for q in np.arange(0.0, 0.5, 0.05):
            sol = solve_nofb(float(q))
            assert sol.regime is Regime.THRESHOLD
            assert sol.threshold > 0.0

    def test_bracket_misconfiguration(self):
        with pytest.raises(BracketError):
            solve_nofb(0.0, RootSolverConfig(bracket_hi=0.1))


class TestPwfb:
    def test_lower_branch_value(self):
        assert p_wfb(0.5, 0.5) == pytest.approx(3.0, rel=1e-12)

    def test_q_zero_reduces_to_nofb(self):
        assert abs(p_wfb(ROOT_Q0, 0.0)) < 1e-4
        for lam in (0.1, 0.9, 2.0):
            assert p_wfb(lam, 0.0) == pytest.approx(p_nofb(lam, 0.0), rel=1e-12)

    def test_positive_at_breakpoint(self):
        q = 0.3
        d = q / (1.0 - q)
        assert p_wfb(d, q) > 0.0
        assert p_wfb(d * 0.999, q) > 0.0

    @pytest.mark.parametrize("q", [0.0, 0.3, 0.6, 0.9])
    def test_strictly_decreasing(self, q):
        grid = np.linspace(0.0, 50.0, 2001)
        vals = np.array([p_wfb(float(x), q) for x in grid])
        assert np.all(np.diff(vals) < 0.0)


class TestSolveWfb:
    def test_q_zero(self):
        sol = solve_wfb(0.0)
        assert sol.lambda_star == pytest.approx(ROOT_Q0, abs=1e-9)
        assert sol.threshold == sol.lambda_star

    def test_q_05_frozen(self):
        sol = solve_wfb(0.5)
        assert sol.lambda_star == pytest.approx(1.9437858746370043, abs=1e-9)
        assert sol.threshold == pytest.approx(0.9437858746370043, abs=1e-9)
        assert abs(p_wfb(sol.lambda_star, 0.5)) < 1e-10

    def test_threshold_always_positive(self):
        for q in np.arange(0.0, 0.96, 0.05):
            sol = solve_wfb(float(q))
            assert sol.regime is Regime.THRESHOLD
            assert sol.threshold > 0.0
            assert sol.lambda_star == pytest.approx(sol.threshold + q / (1.0 - q), rel=1e-12)

    def test_bracket_misconfiguration_when_breakpoint_escapes(self):
        # q/(1-q) = 99 sits beyond the default bracket_hi of 50
        with pytest.raises(BracketError):
            solve_wfb(0.99)


class TestAoiRrNofb:
    @pytest.mark.parametrize("q", [0.2, 0.5, 0.7])
    def test_single_source_greedy_value(self, q):
        assert aoi_rr_nofb(q, 1, 0.0) == pytest.approx(1.0 / (1.0 - q), rel=1e-12)

    def test_fixed_point_at_q_zero(self):
        # where e^-g = g^2/2 the ratio collapses to g itself
        assert aoi_rr_nofb(0.0, 1, ROOT_Q0) == pytest.approx(ROOT_Q0, abs=1e-9)

    def test_two_sources_greedy(self):
        assert aoi_rr_nofb(0.3, 2, 0.0) == pytest.approx(33.0 / 14.0, rel=1e-12)

    def test_increasing_in_m(self):
        for q, g in [(0.1, 0.0), (0.3, 0.4), (0.6, 1.0)]:
            vals = [aoi_rr_nofb(q, m, g) for m in range(1, 9)]
            assert np.all(np.diff(vals) > 0.0)

    def test_domain(self):
        with pytest.raises(ValueError):
            aoi_rr_nofb(0.3, 0, 0.0)
        with pytest.raises(ValueError):
            aoi_rr_nofb(0.3, 1, -0.1)


class TestAoiMafWfb:
    def test_no_erasures_equals_rr(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = int(rng.integers(1, 10))
            g = float(rng.uniform(0.0, 3.0))
            assert aoi_maf_wfb(0.0, m, g) == pytest.approx(aoi_rr_nofb(0.0, m, g), rel=1e-12)

    def test_single_source_at_optimum_recovers_lambda_star(self):
        sol = solve_wfb(0.5)
        assert aoi_maf_wfb(0.5, 1, sol.threshold) == pytest.approx(sol.lambda_star, rel=1e-10)
        assert aoi_maf_wfb(0.5, 1, 0.9435) == pytest.approx(1.9435, abs=1e-3)

    def test_two_sources_greedy(self):
        assert aoi_maf_wfb(0.3, 2, 0.0) == pytest.approx(15.0 / 7.0, rel=1e-12)

    def test_increasing_in_m(self):
        for q, g in [(0.1, 0.0), (0.3, 0.4), (0.6, 1.0)]:
            vals = [aoi_maf_wfb(q, m, g) for m in range(1, 9)]
            assert np.all(np.diff(vals) > 0.0)


class TestOptimizeGamma:
    def test_q_zero_single_source(self):
        g, aoi = optimize_gamma(0.0, 1, Feedback.NOFB)
        assert g == pytest.approx(ROOT_Q0, abs=1e-6)
        assert aoi == pytest.approx(ROOT_Q0, abs=1e-9)

    @pytest.mark.parametrize("q", [0.1, 0.25, 0.45])
    def test_single_source_matches_nofb_solver(self, q):
        sol = solve_nofb(q)
        g, aoi = optimize_gamma(q, 1, Feedback.NOFB)
        assert g == pytest.approx(sol.threshold, abs=1e-6)
        assert aoi == pytest.approx(sol.lambda_star, rel=1e-9)

    @pytest.mark.parametrize("q", [0.1, 0.5, 0.8])
    def test_single_source_matches_wfb_solver(self, q):
        sol = solve_wfb(q)
        g, aoi = optimize_gamma(q, 1, Feedback.WFB)
        assert g == pytest.approx(sol.threshold, abs=1e-6)
        assert aoi == pytest.approx(sol.lambda_star, rel=1e-9)

    def test_greedy_single_source_above_half(self):
        g, aoi = optimize_gamma(0.6, 1, Feedback.NOFB)
        assert g == 0.0
        assert aoi == pytest.approx(2.5, rel=1e-12)

    def test_boundary_hit_for_many_sources(self):
        # enough sources always pushes the optimal threshold to zero
        g_n, _ = optimize_gamma(0.3, 3, Feedback.NOFB)
        assert g_n == 0.0
        g_w, _ = optimize_gamma(0.3, 4, Feedback.WFB)
        assert g_w == 0.0
        g8, _ = optimize_gamma(0.3, 8, Feedback.WFB)
        assert g8 == 0.0

    def test_interior_optimum_two_sources_wfb(self):
        g, aoi = optimize_gamma(0.3, 2, Feedback.WFB)
        assert g == pytest.approx(0.253934, abs=1e-4)
        assert aoi <= aoi_maf_wfb(0.3, 2, 0.0)

    def test_returned_aoi_matches_closed_form(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            q = float(rng.uniform(0.0, 0.9))
            m = int(rng.integers(1, 7))
            setting = Feedback.NOFB if rng.random() < 0.5 else Feedback.WFB
            g, aoi = optimize_gamma(q, m, setting)
            direct = aoi_rr_nofb(q, m, g) if setting is Feedback.NOFB else aoi_maf_wfb(q, m, g)
            assert aoi == pytest.approx(direct, rel=1e-12)


class TestBaselines:
    def test_values(self):
        assert baseline_infinite_battery(0.0, Feedback.NOFB) == 0.5
        assert baseline_infinite_battery(0.5, Feedback.NOFB) == pytest.approx(1.5, rel=1e-12)
        assert baseline_infinite_battery(0.5, Feedback.WFB) == pytest.approx(1.0, rel=1e-12)

    def test_unit_battery_dominates_baselines(self):
        for q in np.arange(0.0, 0.95, 0.05):
            q = float(q)
            assert solve_nofb(q).lambda_star >= baseline_infinite_battery(q, Feedback.NOFB) - 1e-12
            assert solve_wfb(q).lambda_star >= baseline_infinite_battery(q, Feedback.WFB) - 1e-12

    def test_greedy_is_an_upper_bound_nofb(self):
        for q in np.arange(0.0, 0.95, 0.05):
            q = float(q)
            assert solve_nofb(q).lambda_star <= 1.0 / (1.0 - q) + 1e-12


class TestGains:
    def test_gain_zero_without_erasures(self):
        assert abs(feedback_gain(0.0)) < 1e-9
        assert abs(percentage_gain(0.0, 3)) < 1e-9

    def test_gain_nonnegative_and_peaks_mid_range(self):
        grid = np.arange(0.0, 0.95, 0.05)
        gains = np.array([feedback_gain(float(q)) for q in grid])
        assert np.all(gains >= -1e-12)
        peak_q = float(grid[int(np.argmax(gains))])
        assert 0.25 <= peak_q <= 0.55

    def test_percentage_gain_large_m_limit(self):
        val = percentage_gain(0.3, 200)
        assert val == pytest.approx(22.8999, abs=1e-3)
        assert abs(val - 0.3 / 1.3 * 100.0) < 1.0


class TestNearOneWarning:
    def test_warns_close_to_one(self):
        with pytest.warns(RuntimeWarning):
            p_nofb(0.1, 0.9995)
        with pytest.warns(RuntimeWarning):
            aoi_rr_nofb(0.9995, 1, 0.0)

    def test_silent_below_guard(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            aoi_rr_nofb(0.99, 1, 0.0)
