import dataclasses

import numpy as np
import pytest

from hwfedsim.devices import (
    DeviceProfile,
    NormalizedProfile,
    ScoreWeights,
    energy_proxy,
    hardware_score,
    normalize_fleet,
    score_fleet,
)

from conftest import random_fleet


def equal_epoch_fleet(fleet):
    return [dataclasses.replace(p, epoch_time_s=1.0) for p in fleet]


class TestNormalizeFleet:
    def test_reference_fleet_laptop_hats(self, fleet):
        norms = normalize_fleet(fleet)
        laptop = norms[0]
        assert laptop.cpu_hat == 1.0
        assert laptop.ram_hat == 1.0
        assert laptop.lat_hat == pytest.approx(170 / 261, rel=1e-12)

    def test_single_client_all_ones(self):
        only = DeviceProfile(client_id=7, cpu_cores=3, ram_gb=2.5, epoch_time_s=1.2, latency_ms=80)
        (norm,) = normalize_fleet([only])
        assert (norm.cpu_hat, norm.ram_hat, norm.eff_hat, norm.lat_hat) == (1.0, 1.0, 1.0, 1.0)

    def test_equal_epoch_times_give_unit_efficiency(self, fleet):
        norms = normalize_fleet(equal_epoch_fleet(fleet))
        assert all(n.eff_hat == 1.0 for n in norms)

    def test_output_order_matches_input(self, fleet):
        reversed_fleet = list(reversed(fleet))
        norms = normalize_fleet(reversed_fleet)
        assert [n.client_id for n in norms] == [p.client_id for p in reversed_fleet]

    def test_empty_fleet_rejected(self):
        with pytest.raises(ValueError, match="empty fleet"):
            normalize_fleet([])

    def test_duplicate_ids_rejected(self, fleet):
        with pytest.raises(ValueError, match="duplicate client_id"):
            normalize_fleet([fleet[0], dataclasses.replace(fleet[1], client_id=0)])

    def test_non_positive_field_names_client_and_field(self):
        with pytest.raises(ValueError, match=r"client 3: latency_ms"):
            DeviceProfile(client_id=3, cpu_cores=2, ram_gb=4.0, epoch_time_s=1.0, latency_ms=0.0)
        with pytest.raises(ValueError, match=r"client 1: cpu_cores"):
            DeviceProfile(client_id=1, cpu_cores=0, ram_gb=4.0, epoch_time_s=1.0, latency_ms=5.0)

    def test_each_component_attains_one(self, fleet):
        norms = normalize_fleet(fleet)
        for attr in ("cpu_hat", "ram_hat", "eff_hat", "lat_hat"):
            values = [getattr(n, attr) for n in norms]
            assert max(values) == pytest.approx(1.0, abs=1e-15)
            assert all(0 < v <= 1.0 for v in values)

    def test_idempotence_on_prenormalized_fleet(self, fleet):
        norms = normalize_fleet(fleet)
        # Treat the hats as raw values, inverting the efficiency ratio back
        # into an epoch time, and normalize again (cpu_cores is duck-typed).
        roundtrip = normalize_fleet(
            [
                DeviceProfile(
                    client_id=n.client_id,
                    cpu_cores=n.cpu_hat,
                    ram_gb=n.ram_hat,
                    epoch_time_s=1.0 / n.eff_hat,
                    latency_ms=n.lat_hat,
                )
                for n in norms
            ]
        )
        for before, after in zip(norms, roundtrip):
            assert after.cpu_hat == pytest.approx(before.cpu_hat, abs=1e-12)
            assert after.ram_hat == pytest.approx(before.ram_hat, abs=1e-12)
            assert after.eff_hat == pytest.approx(before.eff_hat, abs=1e-12)
            assert after.lat_hat == pytest.approx(before.lat_hat, abs=1e-12)


class TestHardwareScore:
    def test_all_ones_default_weights(self):
        norm = NormalizedProfile(client_id=0, cpu_hat=1, ram_hat=1, eff_hat=1, lat_hat=1)
        got = hardware_score(norm, ScoreWeights(0.4, 0.2, 0.3, 0.1))
        assert got.score == pytest.approx(0.8, abs=1e-12)

    def test_laptop_with_equal_epoch_times(self, fleet, default_weights):
        scores = score_fleet(equal_epoch_fleet(fleet), default_weights)
        assert scores[0].score == pytest.approx(0.9 - 0.1 * 170 / 261, rel=1e-12)

    def test_symmetric_fleet_identical_scores(self):
        fleet = [
            DeviceProfile(client_id=i, cpu_cores=4, ram_gb=8, epoch_time_s=2.0, latency_ms=lat)
            for i, lat in enumerate([10, 250, 60])
        ]
        scores = score_fleet(fleet, ScoreWeights(0.4, 0.2, 0.3, 0.0))
        assert len({s.score for s in scores}) == 1

    def test_weights_must_not_be_negative_or_all_zero(self):
        with pytest.raises(ValueError, match="non-negative"):
            ScoreWeights(alpha=-0.1)
        with pytest.raises(ValueError, match="all be zero"):
            ScoreWeights(0, 0, 0, 0)

    def test_bounds_on_random_fleets(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            fleet = random_fleet(rng, int(rng.integers(1, 9)))
            w = ScoreWeights(*(float(x) for x in rng.uniform(0.01, 1.0, size=4)))
            for s in score_fleet(fleet, w):
                assert -w.delta < s.score <= w.alpha + w.beta + w.gamma + 1e-12

    @pytest.mark.parametrize("field", ["cpu_cores", "ram_gb", "epoch_time_s", "latency_ms"])
    def test_ranking_invariant_under_common_scaling(self, field):
        rng = np.random.default_rng(23)
        for _ in range(10):
            fleet = random_fleet(rng, 6)
            w = ScoreWeights()
            base = np.argsort([s.score for s in score_fleet(fleet, w)], kind="stable")
            factor = 3 if field == "cpu_cores" else 2.7
            scaled = [
                dataclasses.replace(p, **{field: getattr(p, field) * factor}) for p in fleet
            ]
            after = np.argsort([s.score for s in score_fleet(scaled, w)], kind="stable")
            assert list(base) == list(after)

    def test_latency_increase_never_raises_own_score(self, fleet, default_weights):
        base = score_fleet(fleet, default_weights)[2].score
        slower = [
            dataclasses.replace(p, latency_ms=p.latency_ms * 2) if p.client_id == 2 else p
            for p in fleet
        ]
        assert score_fleet(slower, default_weights)[2].score <= base

    def test_epoch_time_decrease_never_lowers_own_score(self, fleet, default_weights):
        base = score_fleet(fleet, default_weights)[1].score
        faster = [
            dataclasses.replace(p, epoch_time_s=p.epoch_time_s / 2) if p.client_id == 1 else p
            for p in fleet
        ]
        assert score_fleet(faster, default_weights)[1].score >= base

    def test_raw_efficiency_mode_uses_reciprocal_epoch_time(self, fleet, default_weights):
        raw = score_fleet(fleet, default_weights, raw_efficiency=True)
        norm = score_fleet(fleet, default_weights)
        # Laptop trains in 0.5 s, so the raw term is gamma * 2 instead of gamma.
        assert raw[0].score == pytest.approx(norm[0].score + 0.3, rel=1e-12)


class TestEnergyProxy:
    def test_direct_product(self):
        p = DeviceProfile(client_id=0, cpu_cores=16, ram_gb=8, epoch_time_s=2.0, latency_ms=10)
        assert energy_proxy(p, 1) == 32.0

    def test_linear_in_epochs(self):
        p = DeviceProfile(client_id=0, cpu_cores=4, ram_gb=8, epoch_time_s=1.5, latency_ms=10)
        assert energy_proxy(p, 2) == 2 * energy_proxy(p, 1)
        with pytest.raises(ValueError, match="epochs"):
            energy_proxy(p, 0)

    def test_swapped_cpu_and_time_commute(self):
        a = DeviceProfile(client_id=0, cpu_cores=8, ram_gb=4, epoch_time_s=3.0, latency_ms=10)
        b = DeviceProfile(client_id=1, cpu_cores=3, ram_gb=4, epoch_time_s=8.0, latency_ms=10)
        assert energy_proxy(a, 5) == energy_proxy(b, 5)
