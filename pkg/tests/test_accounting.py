import math

import numpy as np
import pytest
import scipy.stats

from hwfedsim.accounting import (
    CommMode,
    cohens_d,
    comm_cost_round,
    regularized_incomplete_beta,
    round_time,
    simulate_client_time,
    summarize_trials,
    t_cdf,
    t_two_sided_p,
    welch_t,
)
from hwfedsim.devices import DeviceProfile


def profile(cid, epoch_s, lat_ms):
    return DeviceProfile(
        client_id=cid, cpu_cores=4, ram_gb=8, epoch_time_s=epoch_s, latency_ms=lat_ms
    )


class TestClientTime:
    def test_epochs_plus_latency(self):
        assert simulate_client_time(profile(0, 2.0, 100), 2) == pytest.approx(4.1, abs=1e-12)

    def test_latency_free_limit(self):
        p = profile(0, 3.0, 1e-9)
        assert simulate_client_time(p, 1) == pytest.approx(3.0, abs=1e-9)

    def test_affine_in_epochs(self):
        p = profile(0, 2.5, 40)
        t1 = simulate_client_time(p, 1)
        t2 = simulate_client_time(p, 2)
        t3 = simulate_client_time(p, 3)
        assert t2 - t1 == pytest.approx(p.epoch_time_s, abs=1e-12)
        assert t3 - t2 == pytest.approx(p.epoch_time_s, abs=1e-12)

    def test_latency_charge_multiplier(self):
        p = profile(0, 1.0, 500)
        assert simulate_client_time(p, 1, latency_charges=2.0) == pytest.approx(2.0)


class TestRoundTime:
    def test_singleton(self):
        p = profile(0, 2.0, 100)
        assert round_time([p], {0: 2}) == simulate_client_time(p, 2)

    def test_max_over_selected(self):
        sel = [profile(0, 2.0, 100), profile(1, 3.0, 200)]
        assert round_time(sel, {0: 2, 1: 2}) == pytest.approx(6.2, abs=1e-12)

    def test_removing_argmax_strictly_decreases(self):
        sel = [profile(0, 2.0, 100), profile(1, 3.0, 200)]
        assert round_time(sel[:1], {0: 2}) < round_time(sel, {0: 2, 1: 2})

    def test_monotone_in_selection(self):
        rng = np.random.default_rng(1)
        fleet = [profile(i, float(rng.uniform(0.5, 4)), float(rng.uniform(10, 400))) for i in range(6)]
        epochs = {i: int(rng.integers(1, 5)) for i in range(6)}
        for cut in range(1, 6):
            assert round_time(fleet[:cut], epochs) <= round_time(fleet[: cut + 1], epochs)

    def test_empty_selection(self):
        with pytest.raises(ValueError, match="non-empty"):
            round_time([], {})


class TestCommCost:
    def test_shared_broadcast(self):
        assert comm_cost_round(3, 1.0, CommMode.SHARED_BROADCAST) == 4.0

    def test_symmetric_ratio_matches_three_fifths(self):
        full = comm_cost_round(5, 0.04762, CommMode.SYMMETRIC)
        topk = comm_cost_round(3, 0.04762, CommMode.SYMMETRIC)
        assert topk / full == pytest.approx(0.6, abs=1e-12)

    def test_mode_ratios(self):
        for m in (0.01, 1.0, 123.4):
            assert comm_cost_round(5, m, CommMode.SYMMETRIC) / comm_cost_round(
                3, m, CommMode.SYMMETRIC
            ) == pytest.approx(5 / 3, rel=1e-12)
            assert comm_cost_round(5, m, CommMode.SHARED_BROADCAST) / comm_cost_round(
                3, m, CommMode.SHARED_BROADCAST
            ) == pytest.approx(6 / 4, rel=1e-12)

    def test_zero_selection_forbidden(self):
        with pytest.raises(ValueError, match="n_selected"):
            comm_cost_round(0, 1.0, CommMode.SYMMETRIC)

    def test_cumulative_equals_rounds_times_cost(self):
        cost = comm_cost_round(3, 0.04762, CommMode.SYMMETRIC)
        assert math.fsum([cost] * 50) == 50 * cost


class TestTDistribution:
    def test_incomplete_beta_against_scipy(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            a = float(rng.uniform(0.2, 20))
            b = float(rng.uniform(0.2, 20))
            x = float(rng.uniform(0, 1))
            assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                scipy.stats.beta.cdf(x, a, b), abs=1e-12
            )

    def test_cdf_against_scipy(self):
        for df in (1, 2.5, 8, 30, 120):
            for t in (-4.0, -1.3, -0.2, 0.0, 0.7, 2.9):
                assert t_cdf(t, df) == pytest.approx(
                    scipy.stats.t.cdf(t, df), abs=1e-12
                )

    def test_cdf_against_monte_carlo(self):
        rng = np.random.default_rng(3)
        df = 8
        draws = rng.standard_t(df, size=1_000_000)
        for point in (-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0):
            empirical = float(np.mean(draws <= point))
            assert abs(empirical - t_cdf(point, df)) < 2e-3


class TestWelch:
    def test_identical_samples(self):
        t, p = welch_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert t == 0.0
        assert p == 1.0

    def test_reference_value(self):
        t, p = welch_t([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        assert t == pytest.approx(-1.0, abs=1e-9)
        assert p == pytest.approx(0.3466, abs=1e-3)

    def test_antisymmetric(self):
        rng = np.random.default_rng(5)
        a = list(rng.normal(0, 1, size=8))
        b = list(rng.normal(0.7, 2, size=6))
        t_ab, p_ab = welch_t(a, b)
        t_ba, p_ba = welch_t(b, a)
        assert t_ab == pytest.approx(-t_ba, abs=1e-12)
        assert p_ab == pytest.approx(p_ba, abs=1e-12)

    def test_matches_scipy(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            a = rng.normal(0, 1, size=int(rng.integers(2, 15)))
            b = rng.normal(rng.uniform(-1, 1), 2, size=int(rng.integers(2, 15)))
            t, p = welch_t(list(a), list(b))
            ref = scipy.stats.ttest_ind(a, b, equal_var=False)
            assert t == pytest.approx(ref.statistic, rel=1e-10)
            assert p == pytest.approx(ref.pvalue, rel=1e-9)

    def test_degenerate_samples_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            welch_t([1.0, 1.0], [2.0, 2.0])
        with pytest.raises(ValueError, match=">= 2"):
            welch_t([1.0], [2.0, 3.0])

    def test_p_decreases_with_shift(self):
        rng = np.random.default_rng(7)
        base = list(rng.normal(0, 1, size=10))
        ps = []
        for shift in (0.1, 0.5, 1.0, 2.0, 4.0):
            shifted = [x + shift for x in base]
            _, p = welch_t(base, shifted)
            assert 0 < p <= 1
            ps.append(p)
        assert ps == sorted(ps, reverse=True)


class TestCohensD:
    def test_equal_means(self):
        assert cohens_d([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == pytest.approx(0.0, abs=1e-12)

    def test_reference_value(self):
        assert cohens_d([2, 4, 6], [1, 3, 5]) == pytest.approx(0.5, abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError, match="pooled variance"):
            cohens_d([1.0, 1.0], [2.0, 2.0])


class TestSummarizeTrials:
    def test_single_seed_flagged_degenerate(self):
        summary = summarize_trials([{"acc": 0.5}])
        assert summary.degenerate
        assert summary.std == {"acc": 0.0}

    def test_mean_and_unbiased_std(self):
        summary = summarize_trials([{"acc": 0.3}, {"acc": 0.35}, {"acc": 0.4}])
        assert summary.mean["acc"] == pytest.approx(0.35, abs=1e-12)
        assert summary.std["acc"] == pytest.approx(0.05, abs=1e-12)
        assert not summary.degenerate

    def test_permutation_invariant(self):
        rows = [{"acc": 0.3, "t": 10.0}, {"acc": 0.4, "t": 20.0}, {"acc": 0.5, "t": 5.0}]
        fwd = summarize_trials(rows)
        rev = summarize_trials(list(reversed(rows)))
        assert fwd.mean == rev.mean
        assert fwd.std["acc"] == pytest.approx(rev.std["acc"], abs=1e-15)
        assert fwd.std["t"] == pytest.approx(rev.std["t"], abs=1e-12)
