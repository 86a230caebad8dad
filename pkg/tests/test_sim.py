import dataclasses
import math

import numpy as np
import pytest

from delaysched.analysis import analytic_saturated_throughput, ic_upper_bound
from delaysched.channel import ChannelModel
from delaysched.errors import BudgetExceeded
from delaysched.experiments import bench_lc
from delaysched.sim.engine import (
    ChunkStats,
    SimConfig,
    run_trials,
    stability_probe,
)
from delaysched.state import ArrivalProcess
from delaysched.topology import DelayTable, InterferenceSpec

MODEL = ChannelModel.two_state(0.1)
VSD = DelayTable(((0, 1, 1), (1, 0, 1), (1, 2, 0)))
TABLE3 = lambda x: DelayTable(((0, 1), (x, 0)))
ARR = ArrivalProcess("poisson", (0.25, 0.25))


def sat_config(policy, table=VSD, trials=3000, seed=1, **kw):
    return SimConfig(table=table, models=MODEL, policy=policy, mode="saturated",
                     trials=trials, seed=seed, **kw)


def queued_config(policy, x=3, trials=400, horizon=128, seed=2, **kw):
    return SimConfig(table=TABLE3(x), models=MODEL, policy=policy, mode="queued",
                     arrivals=ARR, horizon=horizon, trials=trials, seed=seed, **kw)


class TestConfigValidation:
    def test_policy_and_mode(self):
        with pytest.raises(ValueError):
            sat_config("MAXWEIGHT")
        with pytest.raises(ValueError):
            SimConfig(table=VSD, models=MODEL, policy="IC", mode="never")

    def test_queued_needs_arrivals_and_horizon(self):
        with pytest.raises(ValueError):
            SimConfig(table=VSD, models=MODEL, policy="IC", mode="queued")
        with pytest.raises(ValueError):
            queued_config("IC", horizon=2)  # < tau_max + 1


class TestEngineEquality:
    @pytest.mark.parametrize("policy", ["DQIC1", "DQIC2", "O", "IC", "LC-ELDR", "LC-ERDMC"])
    def test_saturated_batch_equals_scalar(self, policy):
        cfg = sat_config(policy, trials=2500, chunk=800)
        a = run_trials(cfg, force_engine="scalar")
        b = run_trials(cfg, force_engine="batch")
        assert a == b

    @pytest.mark.parametrize("policy", ["DQIC1", "DQIC2", "O", "IC"])
    def test_queued_batch_equals_scalar(self, policy):
        cfg = queued_config(policy, trials=300, chunk=120, corr_lags=((0, 1), (0, 2)))
        a = run_trials(cfg, force_engine="scalar")
        b = run_trials(cfg, force_engine="batch")
        assert a == b

    def test_lc_saturated_on_bigger_table(self):
        rng = np.random.default_rng(33)
        m = rng.integers(1, 9, size=(5, 5))
        np.fill_diagonal(m, 0)
        table = DelayTable(tuple(tuple(int(x) for x in row) for row in m))
        cfg = sat_config("LC-ERDMC", table=table, trials=1200, chunk=500)
        assert run_trials(cfg, force_engine="scalar") == run_trials(cfg, force_engine="batch")


class TestDeterminism:
    def test_bit_identical_rerun(self):
        cfg = queued_config("DQIC1", trials=500, corr_lags=((0, 1),))
        assert run_trials(cfg) == run_trials(cfg)

    def test_chunk_merge_order_independent(self):
        a = ChunkStats(trials=2, delivered_sum=5, delivered_sq=13, q_sum=(1, 2),
                       q_max=(3, 4), corr={(0, 1): (1, 2, 3, 4, 5, 6)})
        b = ChunkStats(trials=1, delivered_sum=2, delivered_sq=4, q_sum=(5, 1),
                       q_max=(1, 9), corr={(0, 1): (6, 5, 4, 3, 2, 1)})
        assert a.merge(b) == b.merge(a)

    def test_seed_changes_results(self):
        m1 = run_trials(sat_config("LC-ELDR", seed=1, trials=2000))
        m2 = run_trials(sat_config("LC-ELDR", seed=2, trials=2000))
        assert m1.mean_throughput != m2.mean_throughput


class TestSaturatedStatistics:
    def test_single_link_stationary_mean(self):
        t = DelayTable(((0,),))
        m = run_trials(SimConfig(table=t, models=MODEL, policy="LC-ELDR",
                                 mode="saturated", trials=40_000, seed=3))
        assert abs(m.mean_throughput - 1.5) < 3 * m.throughput_stderr + 1e-9

    def test_matches_analytic_within_3_sigma(self):
        cfg = sat_config("LC-ELDR", trials=60_000, seed=4)
        m = run_trials(cfg)
        a = analytic_saturated_throughput(VSD, MODEL, "ELDR")
        assert abs(m.mean_throughput - a) < 3 * m.throughput_stderr

    def test_ic_dominates_delayed_policies(self):
        ic = run_trials(sat_config("IC", trials=30_000, seed=5))
        for policy in ("O", "LC-ELDR", "DQIC1"):
            other = run_trials(sat_config(policy, trials=30_000, seed=5))
            gap = ic.mean_throughput - other.mean_throughput
            noise = 3 * math.hypot(ic.throughput_stderr, other.throughput_stderr)
            assert gap > -noise

    def test_system_service_is_winner_rate(self):
        # with perfect collision and complete interference the delivered count
        # each saturated trial is one of the channel rates
        cfg = sat_config("LC-ELDR", trials=500, chunk=500)
        m = run_trials(cfg)
        assert 1.0 <= m.mean_throughput <= 2.0


class TestQueuedStatistics:
    def test_throughput_meets_arrivals_when_stable(self):
        cfg = queued_config("DQIC2", trials=800, horizon=512)
        m = run_trials(cfg)
        assert m.mean_packet_delay is not None
        assert abs(m.mean_throughput - 0.5) < 0.02  # served ~ offered load

    def test_correlations_in_range(self):
        cfg = queued_config("DQIC1", x=2, trials=500, horizon=512,
                            corr_lags=((0, 1), (0, 2), (0, 5)))
        m = run_trials(cfg)
        assert set(m.correlations) == {(0, 1), (0, 2), (0, 5)}
        for v in m.correlations.values():
            assert -1.0 <= v <= 1.0

    def test_gamma_collision_service(self):
        # gamma = 0.5 with even rates: collided R/H transmissions deliver half
        inter = InterferenceSpec.complete(2, gamma=0.5)
        model = ChannelModel((2, 4), [[0.9, 0.1], [0.1, 0.9]])
        cfg = SimConfig(table=TABLE3(1), models=model, policy="H", mode="saturated",
                        interference=inter, trials=400, seed=6)
        m = run_trials(cfg)
        assert m.mean_throughput > 0


class TestStabilityProbe:
    def test_boundary(self):
        stable = SimConfig(table=TABLE3(3), models=MODEL, policy="DQIC1",
                           mode="queued", arrivals=ARR, horizon=3000, trials=15, seed=7)
        assert stability_probe(stable, queue_bound=200)
        heavy = dataclasses.replace(
            stable, arrivals=ArrivalProcess("poisson", (0.95, 0.95)))
        assert not stability_probe(heavy, queue_bound=200)

    def test_zero_arrivals_trivially_stable(self):
        cfg = SimConfig(table=TABLE3(2), models=MODEL, policy="DQIC1", mode="queued",
                        arrivals=ArrivalProcess("bernoulli", (0.0, 0.0)),
                        horizon=64, trials=5, seed=8)
        assert stability_probe(cfg, queue_bound=1)

    def test_requires_queued_mode(self):
        with pytest.raises(ValueError):
            stability_probe(sat_config("IC"), queue_bound=10)


class TestBudgetSurfacing:
    def test_rh_simulation_respects_budget(self):
        table = DelayTable(((0, 11, 7), (9, 0, 8), (12, 6, 0)))
        cfg = SimConfig(table=table, models=MODEL, policy="R", mode="saturated",
                        trials=10, seed=9, budget=1e6)
        with pytest.raises(BudgetExceeded):
            run_trials(cfg)


class TestMicrobenchmark:
    def test_lc_call_is_fast_on_twenty_links(self):
        assert bench_lc(num_links=20, repeats=30) < 0.010
