import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bgbm import (
    ModelParams,
    build_bouncing_path,
    build_modified_paths,
    count_trades,
    detect_trades,
    diffusion_coefficients,
    exact_trade_sequence,
    exact_trades_until,
    log_price_process,
    make_grid,
    path_trade_sequence,
    scaled_process,
)
from bgbm.dists import closed_form_moments, ig_cdf, v_marginal_params
from bgbm.errors import DomainError
from bgbm.rng import substream
from bgbm.trading import TradeSequence, renewal_moment_check, sample_z_terminal
from bgbm.verify import ks_statistic

STD = ModelParams(-1.0, 1.0, 1.0, 1.0, 0.1)


class TestTradeSequence:
    def test_increments_satisfy_recurrences(self):
        t = np.array([0.5, 1.2, 3.0])
        p = np.array([2.0, 2.2, 1.9])
        seq = TradeSequence(t, p)
        assert seq.u[0] == math.log(2.0)
        assert_allclose(seq.u[1:], np.diff(np.log(p)))
        assert seq.v[0] == 0.5
        assert_allclose(seq.v[1:], np.diff(t))

    def test_validation(self):
        with pytest.raises(DomainError):
            TradeSequence(np.array([1.0, 1.0]), np.array([1.0, 2.0]))
        with pytest.raises(DomainError):
            TradeSequence(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
        with pytest.raises(DomainError):
            TradeSequence(np.array([1.0, 2.0]), np.array([1.0, -2.0]))

    def test_csv_round_trip(self, tmp_path):
        seq = exact_trade_sequence(STD, math.exp(0.1), math.exp(-0.1), 50, seed=1)
        out = tmp_path / "trades.csv"
        seq.to_csv(out)
        back = TradeSequence.from_csv(out)
        assert_allclose(back.t, seq.t, rtol=0, atol=0)
        assert_allclose(back.p, seq.p, rtol=0, atol=0)


class TestDetectTrades:
    def test_drift_only_levels(self):
        # approach rate 2 from a gap of 2: trades at t = 1, 2, 3
        grid = make_grid(3.5, 0.5)
        diff = 2.0 - 2.0 * grid
        idx, levels = detect_trades(diff, 1.0)
        assert_allclose(grid[idx], [1.0, 2.0, 3.0])
        assert_allclose(levels, [0.0, -2.0, -4.0])

    def test_no_crossing_gives_empty(self):
        idx, levels = detect_trades(np.array([3.0, 2.5, 4.0]), 1.0)
        assert idx.size == 0 and levels.size == 0

    def test_single_step_crossing_multiple_levels(self):
        idx, levels = detect_trades(np.array([1.0, -5.0]), 1.0)
        assert_allclose(idx, [1, 1, 1])
        assert_allclose(levels, [0.0, -2.0, -4.0])

    def test_matches_sequential_scan(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            diff = np.concatenate([[0.5], 0.5 + np.cumsum(rng.standard_normal(2000) * 0.08 - 0.004)])
            delta = 0.25
            idx, levels = detect_trades(diff, delta)
            # plain left-to-right scan with a decrementing level
            exp_idx, exp_lev = [], []
            level = 0.0
            for i, d in enumerate(diff):
                while d <= level:
                    exp_idx.append(i)
                    exp_lev.append(level)
                    level -= 2.0 * delta
            assert np.array_equal(idx, np.array(exp_idx, dtype=np.int64))
            assert_allclose(levels, exp_lev, rtol=0, atol=0)

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(DomainError):
            detect_trades(np.zeros(3), 0.0)


class TestModifiedPaths:
    def setup_method(self):
        self.grid = make_grid(1.0, 1e-4)
        self.path = build_bouncing_path(STD, math.exp(0.1), math.exp(-0.1), self.grid, seed=11)

    def test_domination_is_exact(self):
        mod = build_modified_paths(self.path, STD.delta)
        assert np.all(mod.a_delta >= self.path.a)
        assert np.all(mod.b_delta <= self.path.b)

    def test_equality_before_first_trade(self):
        mod = build_modified_paths(self.path, STD.delta)
        first = mod.trade_indices[0]
        assert np.array_equal(mod.a_delta[:first], self.path.a[:first])
        assert np.array_equal(mod.b_delta[:first], self.path.b[:first])

    def test_reflected_paths_meet_at_trades(self):
        # on-grid analogue of the meeting property: exact zero regulated difference
        mod = build_modified_paths(self.path, STD.delta)
        spread = (self.path.x_a - self.path.x_b) + self.path.l
        assert np.all(spread[mod.trade_indices] == 0.0)

    def test_one_tick_separation_at_trades(self):
        mod = build_modified_paths(self.path, STD.delta)
        ratio = mod.a_delta[mod.trade_indices] / mod.b_delta[mod.trade_indices]
        # grid overshoot perturbs the ratio at the sqrt(step) scale
        tol = 6.0 * math.sqrt(STD.sigma2_sum * 1e-4)
        assert np.all(np.abs(np.log(ratio) - 2.0 * STD.delta) < tol)

    def test_sup_ratio_shrinks_with_tick(self):
        sups = []
        for delta in (0.1, 0.01, 0.001):
            mod = build_modified_paths(self.path, delta)
            sups.append(np.max(np.log(mod.a_delta) - np.log(self.path.a)))
        assert sups[0] >= sups[1] >= sups[2]
        assert sups[2] < 0.002


class TestPathTradeSequence:
    def test_extraction_on_fine_grid(self):
        grid = make_grid(1.0, 1e-4)
        path = build_bouncing_path(STD, math.exp(0.1), math.exp(-0.1), grid, seed=2)
        seq = path_trade_sequence(path, STD)
        idx, _ = detect_trades(path.x_a - path.x_b, STD.delta)
        assert len(seq) <= idx.size
        assert np.all(np.diff(seq.t) > 0.0)
        # first trade price: both driving paths agree there up to grid noise
        i0 = idx[0]
        assert seq.p[0] == pytest.approx(math.exp(path.x_a[i0]), rel=0.02)

    def test_grid_extracted_returns_follow_exact_law(self):
        # log-returns read off grid paths (weighted-price extraction) agree
        # with the closed-form return law of later trades
        from bgbm.dists import u_marginal_params
        from bgbm.verify import nig_cdf_grid

        rng_master = np.random.default_rng(71)
        u2 = []
        grid = make_grid(1.0, 1e-4)
        for _ in range(300):
            seed = int(rng_master.integers(0, 2**63 - 1))
            path = build_bouncing_path(STD, math.exp(0.1), math.exp(-0.1), grid, seed=seed)
            try:
                seq = path_trade_sequence(path, STD)
            except DomainError:
                continue  # no trade within the horizon on this path
            if len(seq) >= 2:
                u2.append(math.log(seq.p[1] / seq.p[0]))
        assert len(u2) > 250
        nig = u_marginal_params(STD, STD.delta, -STD.delta)
        xs, cdf = nig_cdf_grid(nig)
        ks = ks_statistic(np.array(u2), lambda x: np.interp(x, xs, cdf, left=0.0, right=1.0))
        assert ks < 0.1

    def test_grid_detected_times_approach_ig_law(self):
        # KS distance roughly halves when the step shrinks tenfold
        from bgbm.verify import grid_detected_second_intertrade

        ig = v_marginal_params(STD, STD.delta, -STD.delta)
        cdf = lambda x: ig_cdf(ig, x)
        n = 4000
        coarse = grid_detected_second_intertrade(101, STD, 3e-4 * STD.mean_intertrade, n)
        fine = grid_detected_second_intertrade(102, STD, 3e-5 * STD.mean_intertrade, n)
        ks_coarse = ks_statistic(coarse, cdf)
        ks_fine = ks_statistic(fine, cdf)
        assert ks_fine <= 1.5 * ks_coarse / 2.0 + 0.0136  # sampling noise floor at n=4000


class TestExactTradeSequence:
    def test_moments_against_closed_forms(self):
        seq = exact_trade_sequence(STD, math.exp(0.1), math.exp(-0.1), 200_000, seed=5)
        mom = closed_form_moments(STD)
        n = len(seq)
        se_v = seq.v.std(ddof=1) / math.sqrt(n)
        se_u = seq.u.std(ddof=1) / math.sqrt(n)
        assert abs(seq.v.mean() - mom.e_v) <= 3.0 * se_v
        assert abs(seq.u.mean() - mom.e_u) <= 3.0 * se_u
        dev = (seq.u - seq.u.mean()) * (seq.v - seq.v.mean())
        se_cov = dev.std(ddof=1) / math.sqrt(n)
        assert abs(dev.mean() - mom.cov_uv) <= 3.0 * se_cov

    def test_requires_strict_initial_gap(self):
        with pytest.raises(DomainError):
            exact_trade_sequence(STD, 1.0, 1.0, 10, seed=0)

    def test_deterministic_given_seed(self):
        s1 = exact_trade_sequence(STD, 1.2, 1.0, 100, seed=9)
        s2 = exact_trade_sequence(STD, 1.2, 1.0, 100, seed=9)
        assert np.array_equal(s1.t, s2.t) and np.array_equal(s1.p, s2.p)

    def test_until_horizon(self):
        seq = exact_trades_until(STD, 1.2, 1.0, 5.0, seed=3)
        assert seq.t[-1] <= 5.0
        assert len(seq) > 10


class TestCountingAndLogPrice:
    def setup_method(self):
        self.seq = TradeSequence(np.array([0.5, 1.2, 3.0]), np.exp([0.1, 0.05, 0.2]))

    def test_count_examples(self):
        assert count_trades(self.seq, 2.0) == 2
        assert count_trades(self.seq, 0.0) == 0
        assert count_trades(self.seq, 3.0) == 3
        assert count_trades(self.seq, 100.0) == 3

    def test_log_price_sums_returns(self):
        seq = TradeSequence(np.array([1.0, 2.0]), np.array([math.exp(0.1), math.exp(0.05)]))
        assert log_price_process(seq, 2.5) == pytest.approx(0.05)
        assert log_price_process(seq, 0.5) == 0.0

    def test_equals_log_price_at_trade_times(self):
        for k, t in enumerate(self.seq.t):
            assert log_price_process(self.seq, t) == pytest.approx(math.log(self.seq.p[k]))

    def test_piecewise_constant_right_continuous(self):
        eps = 1e-12
        t1 = self.seq.t[1]
        before = log_price_process(self.seq, t1 - eps)
        at = log_price_process(self.seq, t1)
        after = log_price_process(self.seq, t1 + eps)
        assert before == pytest.approx(math.log(self.seq.p[0]))
        assert at == after == pytest.approx(math.log(self.seq.p[1]))


class TestDiffusionScaling:
    def test_coefficient_values(self):
        assert diffusion_coefficients(ModelParams(-1.0, 3.0, 1.0, 1.0, 0.1)).m == 1.0
        assert diffusion_coefficients(ModelParams(-1.0, 1.0, 1.0, 2.0, 0.1)).s == 1.25

    def test_degenerate_drifts_rejected_upstream(self):
        with pytest.raises(DomainError):
            ModelParams(1.0, 1.0, 1.0, 1.0, 0.1)

    def test_scaled_process_formula(self):
        params = ModelParams(-1.0, 3.0, 1.0, 1.0, 0.1)
        seq = TradeSequence(np.array([1.0, 2.0]), np.array([math.exp(0.3), math.exp(0.5)]))
        t = 0.25
        expected = (0.1 * 0.5 - 1.0 * t) / math.sqrt(0.5 * 0.1)
        assert scaled_process(seq, params, t) == pytest.approx(expected)

    def test_centered_case_is_zero(self):
        params = ModelParams(-1.0, 3.0, 1.0, 1.0, 0.1)
        t = 0.2
        # one trade carrying exactly the drift budget m*t/delta
        seq = TradeSequence(np.array([1.0]), np.array([math.exp(1.0 * t / 0.1)]))
        assert scaled_process(seq, params, t) == pytest.approx(0.0, abs=1e-12)


class TestRenewalMomentCheck:
    def test_report_structure_and_sanity(self):
        report = renewal_moment_check(STD, 50.0, 500, seed=21)
        assert report["target_mean"] == 0.0
        assert report["target_var"] == pytest.approx(25.0)
        assert report["gap_mean"] <= 4.0 * report["se_mean"]
        assert report["var_z"] / 50.0 == pytest.approx(0.5, rel=0.15)

    def test_z_terminal_moments(self):
        zs = np.array([sample_z_terminal(STD, 40.0, substream(8, i))[0] for i in range(3000)])
        assert abs(zs.mean()) <= 4.0 * zs.std() / math.sqrt(zs.size)
        assert zs.var(ddof=1) / 40.0 == pytest.approx(0.5, rel=0.1)
