import json
import math

import numpy as np
import pytest

from bgbm import ModelParams, exact_trades_until
from bgbm.errors import DataError, DomainError
from bgbm.estimate import EstimateResult
from bgbm.forecast import (
    ForecastConfig,
    TickData,
    backtest,
    delta_trace,
    merge_ties,
    predict,
    summarize,
    write_records_csv,
)
from bgbm.rng import substream


def make_estimate(mu_a=-1.0, mu_b=1.0, s=1.0):
    return EstimateResult(
        mu_a=mu_a,
        mu_b=mu_b,
        sigma_a=math.sqrt(2.0 * s),
        sigma_b=math.sqrt(2.0 * s),
        delta=0.1,
        y=(0.0, 0.0, 0.0, 0.0),
        m=0.5 * (mu_a + mu_b),
        s=s,
        n=100,
    )


def synthetic_session(seed, duration_s, params=None, p0=10.0):
    params = params or ModelParams(-0.25e-3, 0.75e-3, 1e-3, 1e-3, 1e-3)
    seq = exact_trades_until(
        params, p0 * math.exp(params.delta), p0 * math.exp(-params.delta), duration_s,
        substream(seed, 0),
    )
    return TickData(seq.t, seq.p)


class TestTickData:
    def test_read_write_round_trip(self, tmp_path):
        data = TickData(np.array([1.0, 2.0, 2.0, 5.5]), np.array([10.0, 10.1, 10.05, 9.9]))
        out = tmp_path / "ticks.csv"
        data.to_csv(out)
        back = TickData.read_csv(out)
        assert np.array_equal(back.t, data.t)
        assert np.array_equal(back.p, data.p)

    def test_rejects_bad_header(self, tmp_path):
        out = tmp_path / "bad.csv"
        out.write_text("time,price\n1,2\n")
        with pytest.raises(DataError):
            TickData.read_csv(out)

    def test_rejects_decreasing_times_and_bad_prices(self):
        with pytest.raises(DataError):
            TickData(np.array([2.0, 1.0]), np.array([1.0, 1.0]))
        with pytest.raises(DataError):
            TickData(np.array([1.0, 2.0]), np.array([1.0, -1.0]))
        with pytest.raises(DataError):
            TickData(np.array([]), np.array([]))

    def test_merge_ties_keeps_last(self):
        data = TickData(np.array([1.0, 2.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0, 4.0]))
        merged = merge_ties(data)
        assert np.array_equal(merged.t, [1.0, 2.0, 3.0])
        assert np.array_equal(merged.p, [1.0, 3.0, 4.0])


class TestPredict:
    def test_point_value(self):
        # drift sum 0.2 per second over one minute
        est = make_estimate(mu_a=0.05, mu_b=0.15, s=1.0)
        assert predict(est, 60.0).point == pytest.approx(6.0)

    def test_band_half_width(self):
        # variance sum 4 at unit horizon: half-width 3
        est = make_estimate(s=1.0)
        pred = predict(est, 1.0)
        assert pred.upper - pred.point == pytest.approx(3.0)
        assert pred.point - pred.lower == pytest.approx(3.0)

    def test_zero_band_collapses(self):
        est = make_estimate()
        pred = predict(est, 2.0, band_width_sigmas=0.0)
        assert pred.lower == pred.point == pred.upper

    def test_zero_volatility_collapses(self):
        est = EstimateResult(
            mu_a=-1.0, mu_b=1.0, sigma_a=0.0, sigma_b=0.0, delta=0.1,
            y=(0, 0, 0, 0), m=0.0, s=0.0, n=10,
        )
        pred = predict(est, 1.0)
        assert pred.lower == pred.point == pred.upper

    def test_band_ordering(self):
        pred = predict(make_estimate(), 3.0)
        assert pred.lower <= pred.point <= pred.upper

    def test_rejects_bad_horizon(self):
        with pytest.raises(DomainError):
            predict(make_estimate(), 0.0)


class TestBacktest:
    def test_relative_error_definition(self):
        data = synthetic_session(1, 4000.0)
        records, summary = backtest(data, ForecastConfig(600.0, 60.0))
        ok = [r for r in records if not r.skipped]
        assert ok
        for r in ok[:50]:
            predicted_price = r.p0 * math.exp(r.predicted_log_return)
            assert r.relative_error == pytest.approx(
                (r.realized_price - predicted_price) / r.realized_price
            )
            assert r.lower <= r.predicted_log_return <= r.upper
        assert summary["max_abs_re"] >= summary["mean_abs_re"]

    def test_no_lookahead_at_window_end(self):
        # injecting an outlier trade exactly at the window end of one target
        # must not change that target's record
        data = synthetic_session(2, 3000.0)
        merged = merge_ties(data)
        cfg = ForecastConfig(600.0, 60.0)
        records, _ = backtest(data, cfg)
        ok = [r for r in records if not r.skipped]
        target = ok[len(ok) // 2]
        spike_t = target.target_time_s - cfg.lead_time_s
        assert not np.any(merged.t == spike_t)
        t2 = np.sort(np.append(merged.t, spike_t))
        k = int(np.searchsorted(t2, spike_t))
        p2 = np.insert(merged.p, k, 999.0)
        records2, _ = backtest(TickData(t2, p2), cfg)
        match = [r for r in records2 if r.target_time_s == target.target_time_s]
        assert match and match[0] == target

    def test_sparse_windows_are_skipped_with_reason(self):
        # a long quiet gap: targets after it lack window trades
        t = np.concatenate([np.linspace(1.0, 500.0, 120), [5000.0, 5010.0]])
        p = np.full(t.size, 10.0)
        p[-1] = 10.1
        records, summary = backtest(TickData(t, p), ForecastConfig(400.0, 60.0))
        skipped = [r for r in records if r.skipped]
        assert skipped
        assert {r.reason for r in skipped} <= {"too_few_trades", "degenerate_window", "empty_window"}
        assert summary["n_skipped"] == len(skipped)

    def test_delta_trace_matches_successful_windows(self):
        data = synthetic_session(3, 4000.0)
        cfg = ForecastConfig(600.0, 60.0)
        records, summary = backtest(data, cfg)
        trace = delta_trace(data, cfg)
        assert trace.shape[0] == summary["n_records"]
        assert np.all(trace[:, 1] > 0.0)
        assert trace.shape[0] <= len(records)

    def test_pooled_coverage_on_calibrated_sessions(self):
        # ten two-hour sessions with ~300 trades per window: the default
        # three-sigma band covers at least 98.5% of realised returns
        all_records = []
        for seed in range(10):
            data = synthetic_session(200 + seed, 7200.0)
            records, _ = backtest(data, ForecastConfig(600.0, 60.0))
            all_records.extend(records)
        pooled = summarize(all_records)
        assert pooled["n_records"] > 5000
        assert 0.985 <= pooled["band_coverage"] <= 1.0

    def test_records_csv_schema(self, tmp_path):
        data = synthetic_session(4, 3000.0)
        records, _ = backtest(data, ForecastConfig(600.0, 60.0))
        out = tmp_path / "records.csv"
        write_records_csv(records, out)
        header = out.read_text().splitlines()[0]
        assert header == (
            "target_time_s,p0,pred_log_return,lower,upper,realized_price,"
            "relative_error,skipped,reason"
        )
