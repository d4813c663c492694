import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bgbm import ModelParams, exact_trade_sequence
from bgbm.errors import DegenerateDataError, DomainError, InsufficientDataError
from bgbm.estimate import (
    SampleMoments,
    _well_definedness_terms,
    asymptotic_stderr,
    fit,
    fit_sequence,
    moments_from_pairs,
    population_moments,
    sample_moments,
)
from bgbm.rng import substream
from bgbm.trading import TradeSequence, _sample_uv_pairs

STD = ModelParams(-1.0, 1.0, 1.0, 1.0, 0.1)


def random_params(rng) -> ModelParams:
    mu_a = rng.uniform(-2.0, 1.0)
    return ModelParams(
        mu_a,
        mu_a + rng.uniform(0.1, 3.0),
        rng.uniform(0.2, 2.0),
        rng.uniform(0.2, 2.0),
        rng.uniform(0.01, 0.5),
    )


class TestSampleMoments:
    def test_arithmetic(self):
        # v = [1, 3], u = [1, 2] including the first (level, time) pair
        seq = TradeSequence(np.array([1.0, 4.0]), np.array([math.e, math.e**3]))
        mom = sample_moments(seq, use_first=True)
        assert_allclose(
            [mom.x1, mom.x2, mom.x3, mom.x4, mom.x5], [2.0, 1.5, 5.0, 2.5, 3.5]
        )
        assert mom.n == 2

    def test_degenerate_times_rejected(self):
        with pytest.raises(DegenerateDataError):
            moments_from_pairs(np.array([1.0, 1.0]), np.array([2.0, 2.0]))

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            moments_from_pairs(np.array([1.0]), np.array([2.0]))

    def test_default_drops_first_pair(self):
        seq = TradeSequence(np.array([1.0, 2.0, 4.0]), np.array([2.0, 2.1, 2.3]))
        mom = sample_moments(seq)
        assert mom.n == 2
        assert mom.x1 == pytest.approx(1.5)

    def test_cauchy_schwarz_always_holds(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            v = rng.uniform(0.1, 2.0, size=30)
            u = rng.standard_normal(30)
            mom = moments_from_pairs(v, u)  # must not raise
            terms = _well_definedness_terms(mom)
            assert all(t >= -1e-12 for t in terms)


class TestFit:
    def test_population_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            theta = random_params(rng)
            res = fit(population_moments(theta))
            assert_allclose(res.theta(), theta.astuple(), rtol=1e-10, atol=1e-14)

    def test_population_values_standard(self):
        # raw moments (0.1, 0, 0.06, 0.05, 0) recover the generating tuple
        mom = population_moments(STD)
        assert_allclose(
            [mom.x1, mom.x2, mom.x3, mom.x4, mom.x5], [0.1, 0.0, 0.06, 0.05, 0.0]
        )
        res = fit(mom)
        assert_allclose(res.theta(), STD.astuple(), atol=1e-12)

    def test_tick_identity(self):
        rng = np.random.default_rng(2)
        v, u = _sample_uv_pairs(STD, 0.1, -0.1, 500, rng)
        mom = moments_from_pairs(v, u)
        res = fit(mom)
        # algebraic identity up to the re-rounding of mu_b - mu_a
        assert res.delta == pytest.approx(0.5 * (res.mu_b - res.mu_a) * mom.x1, rel=1e-14)
        assert res.mu_b > res.mu_a

    def test_consistency_over_sample_size(self):
        errors = {n: [] for n in (1_000, 10_000, 100_000)}
        for rep in range(20):
            for n in errors:
                rng = substream(1000 + rep, n)
                v, u = _sample_uv_pairs(STD, 0.1, -0.1, n, rng)
                res = fit(moments_from_pairs(v, u))
                errors[n].append(np.abs(res.theta() - np.array(STD.astuple())))
        medians = {n: np.median(np.array(v), axis=0) for n, v in errors.items()}
        assert np.all(medians[10_000] < medians[1_000])
        assert np.all(medians[100_000] < medians[10_000])

    def test_fit_sequence_guard_and_window(self):
        seq = exact_trade_sequence(STD, math.exp(0.1), math.exp(-0.1), 9, seed=0)
        with pytest.raises(InsufficientDataError):
            fit_sequence(seq)
        seq = exact_trade_sequence(STD, math.exp(0.1), math.exp(-0.1), 400, seed=0)
        res = fit_sequence(seq, use_first=True, with_stderr=True)
        assert res.window == (float(seq.t[0]), float(seq.t[-1]))
        assert res.stderr is not None and len(res.stderr) == 5


class TestStandardErrors:
    def test_scaling_with_sample_size(self):
        # nested samples, ratios averaged over replicates: the mean ratio of
        # standard errors at n and 4n sits within 15% of 2
        ratios = []
        for rep in range(5):
            rng = substream(5, rep)
            v, u = _sample_uv_pairs(STD, 0.1, -0.1, 40_000, rng)
            seq_big = TradeSequence(np.cumsum(v), np.exp(np.cumsum(u)))
            seq_small = TradeSequence(np.cumsum(v[:10_000]), np.exp(np.cumsum(u[:10_000])))
            se_big = fit_sequence(seq_big, use_first=True, with_stderr=True).stderr
            se_small = fit_sequence(seq_small, use_first=True, with_stderr=True).stderr
            ratios.append(np.asarray(se_small) / np.asarray(se_big))
        mean_ratio = np.mean(ratios, axis=0)
        assert np.all(np.abs(mean_ratio - 2.0) < 0.3)

    def test_coverage_of_two_se_interval(self):
        # roughly 95% coverage for mu_b across simulated datasets
        hits = 0
        n_sets = 500
        for rep in range(n_sets):
            rng = substream(79, rep)
            v, u = _sample_uv_pairs(STD, 0.1, -0.1, 10_000, rng)
            t = np.cumsum(v)
            p = np.exp(np.cumsum(u))
            seq = TradeSequence(t, p)
            res = fit_sequence(seq, use_first=True, with_stderr=True)
            if abs(res.mu_b - STD.mu_b) <= 2.0 * res.stderr[1]:
                hits += 1
        assert 0.93 <= hits / n_sets <= 0.98

    def test_deterministic_data_rejected(self):
        rng = np.random.default_rng(3)
        v = rng.uniform(0.5, 1.5, size=300)
        u = 2.0 * v  # exactly collinear observations
        seq = TradeSequence(np.cumsum(v), np.exp(np.cumsum(u)))
        res = fit(moments_from_pairs(v, u)) if _fit_ok(v, u) else None
        with pytest.raises((DegenerateDataError,)):
            if res is None:
                raise DegenerateDataError("fit already degenerate")
            asymptotic_stderr(seq, res, use_first=True)

    def test_requires_enough_pairs(self):
        seq = exact_trade_sequence(STD, math.exp(0.1), math.exp(-0.1), 50, seed=1)
        res = fit_sequence(seq, use_first=True, min_trades=10)
        with pytest.raises(InsufficientDataError):
            asymptotic_stderr(seq, res, use_first=True)


def _fit_ok(v, u) -> bool:
    try:
        fit(moments_from_pairs(v, u))
        return True
    except DegenerateDataError:
        return False


def _fit_with_se(n, seed):
    rng = substream(seed, 0)
    v, u = _sample_uv_pairs(STD, 0.1, -0.1, n, rng)
    seq = TradeSequence(np.cumsum(v), np.exp(np.cumsum(u)))
    return fit_sequence(seq, use_first=True, with_stderr=True)
