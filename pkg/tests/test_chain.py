"""Repeater-chain recursions, closed forms and the waiting-time Monte Carlo."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnpm.chain import (ChainConfig, GeometryKind, Hardware,
                        binary_entropy, chain_closed_form, chain_iterated,
                        connect_step, direct_transmission_time,
                        expected_max_geometric, generation_perf,
                        generation_step, key_rate, simulate_waiting_time,
                        swap_perf, waiting_time_stats, worker_count)
from rnpm.formulas import DetectorKind, DetectorModel

HW = Hardware(0.98, DetectorModel(DetectorKind.SINGLE_PHOTON, 0.95))


def cfg(L=320.0, n=3, bg=0.1, bs=0.3, hw=HW, geom=GeometryKind.MIDPOINT):
    return ChainConfig(L, n, bg, bs, hw, geom)


class TestRecursions:
    def test_closed_form_equals_iteration(self):
        for n in range(0, 13):
            c = cfg(n=n, L=10.0 * 2 ** n)
            a = chain_iterated(c)
            b = chain_closed_form(c)
            assert b.T_avg == pytest.approx(a.T_avg, rel=1e-12)
            assert b.F == pytest.approx(a.F, abs=1e-12)
            assert np.allclose(b.eps_levels, a.eps_levels, atol=1e-12)
            assert np.allclose(b.t_levels, a.t_levels, rtol=1e-12)

    def test_n0_hand_case(self):
        c = cfg(n=0, L=40.0)
        p, eps0 = generation_perf(c.beta_g, c.hardware, 40.0, c.geometry)
        res = chain_closed_form(c)
        assert res.T_avg == pytest.approx((40e3 / 2e8) / p, rel=1e-14)
        assert res.F == pytest.approx(1.0 - eps0, abs=1e-15)

    def test_n1_hand_case(self):
        c = cfg(n=1, L=40.0)
        p_g, eps0 = generation_perf(c.beta_g, c.hardware, 20.0, c.geometry)
        p_s, eps_s = swap_perf(c.beta_s, c.hardware)
        res = chain_closed_form(c)
        t0 = (20e3 / 2e8) / p_g
        assert res.T_avg == pytest.approx(1.5 * t0 / p_s, rel=1e-14)
        expected_f = 0.5 * (1.0 + (1.0 - 2 * eps0) ** 2 * (1.0 - 2 * eps_s))
        assert res.F == pytest.approx(expected_f, abs=1e-15)

    def test_connect_step_validation(self):
        with pytest.raises(ValueError):
            connect_step(0.7, 1.0, 0.1, HW)

    def test_generation_step_endpoint_vs_midpoint(self):
        # midpoint halves each channel; endpoint pushes all loss to one arm
        mid = generation_perf(0.1, HW, 100.0, GeometryKind.MIDPOINT)
        end = generation_perf(0.1, HW, 100.0, GeometryKind.ENDPOINT)
        assert end[1] > mid[1]

    @settings(max_examples=30, deadline=None)
    @given(eps=st.floats(0.0, 0.49), bs=st.floats(0.01, 0.8))
    def test_connect_step_degrades(self, eps, bs):
        eps2, _ = connect_step(eps, 1.0, bs, HW)
        assert eps2 >= eps - 1e-15
        assert eps2 <= 0.5

    def test_config_validation(self):
        with pytest.raises(ValueError):
            cfg(n=-1)
        with pytest.raises(ValueError):
            cfg(L=0.0)


class TestScalars:
    def test_binary_entropy(self):
        assert binary_entropy(0.5) == pytest.approx(1.0)
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        with pytest.raises(ValueError):
            binary_entropy(1.5)

    def test_key_rate_sign(self):
        assert key_rate(0.5) == pytest.approx(0.0)
        for f in (0.5 + 1e-6, 0.6, 0.9, 1.0):
            assert key_rate(f) > 0.0 or f == 0.5

    def test_direct_transmission(self):
        t = direct_transmission_time(220.0, 1e10, 0.95, 22.0)
        assert t == pytest.approx(math.exp(10.0) / (1e10 * 0.95), rel=1e-14)
        with pytest.raises(ValueError):
            direct_transmission_time(100.0, 0.0, 0.9, 22.0)

    def test_expected_max_geometric(self):
        assert expected_max_geometric(1.0) == pytest.approx(1.0)
        assert expected_max_geometric(0.5) == pytest.approx(4.0 - 4.0 / 3.0)


class TestMonteCarlo:
    def test_n0_matches_geometric_mean(self):
        samples = simulate_waiting_time(0, 0.05, 1.0, seed=42, trials=100_000)
        mean, se = waiting_time_stats(samples)
        assert abs(mean - 20.0) < 5 * se

    def test_n1_matches_max_geometric(self):
        p = 0.05
        samples = simulate_waiting_time(1, p, 1.0, seed=1, trials=100_000)
        mean, se = waiting_time_stats(samples)
        assert abs(mean - expected_max_geometric(p)) < 5 * se

    def test_full_chain_within_band(self):
        # the 3/2 connection factor is an approximation, so allow +-25%
        for n, p_g, p_s in ((2, 0.2, 0.2), (4, 0.15, 0.1)):
            samples = simulate_waiting_time(n, p_g, p_s, seed=9, trials=400)
            mean, _ = waiting_time_stats(samples)
            predicted = 1.5 ** n / (p_g * p_s ** n)
            assert 0.75 * predicted <= mean <= 1.25 * predicted

    def test_deterministic_across_worker_counts(self):
        env1 = dict(os.environ, RNPM_THREADS="1")
        env2 = dict(os.environ, RNPM_THREADS="6")
        code = ("import hashlib\n"
                "from rnpm.chain import simulate_waiting_time\n"
                "s = simulate_waiting_time(3, 0.3, 0.5, seed=5, trials=1000)\n"
                "print(hashlib.sha256(s.tobytes()).hexdigest())\n")
        r1 = subprocess.run([sys.executable, "-c", code], env=env1,
                            capture_output=True, text=True, check=True)
        r2 = subprocess.run([sys.executable, "-c", code], env=env2,
                            capture_output=True, text=True, check=True)
        assert r1.stdout == r2.stdout

    def test_worker_count_env(self):
        old = os.environ.get("RNPM_THREADS")
        try:
            os.environ["RNPM_THREADS"] = "3"
            assert worker_count() == 3
        finally:
            if old is None:
                os.environ.pop("RNPM_THREADS", None)
            else:
                os.environ["RNPM_THREADS"] = old

    def test_validation(self):
        with pytest.raises(ValueError):
            simulate_waiting_time(1, 0.0, 1.0, 0, 10)
        with pytest.raises(ValueError):
            simulate_waiting_time(1, 0.5, 1.0, 0, 0)

    def test_p_one_is_deterministic_unit(self):
        samples = simulate_waiting_time(0, 1.0, 1.0, seed=0, trials=100)
        assert np.all(samples == 1.0)
