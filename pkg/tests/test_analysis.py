import math

import numpy as np
import pytest

from delaysched.analysis import (
    DelaySample,
    analytic_mean_delay,
    analytic_o_throughput,
    analytic_saturated_throughput,
    delay_eval_complexity,
    generate_samples,
    ic_upper_bound,
    oracle_saturated_throughput,
    replay_mean_delay,
)
from delaysched.channel import ChannelModel, stationary
from delaysched.errors import BudgetExceeded, EmptyServiceSet, TypicalityUnreachable
from delaysched.sim.engine import SimConfig
from delaysched.state import ArrivalProcess
from delaysched.topology import BigPower, DelayTable

MODEL = ChannelModel.two_state(0.1)


def random_table(rng, n, hi=8):
    m = rng.integers(1, hi, size=(n, n))
    np.fill_diagonal(m, 0)
    return DelayTable(tuple(tuple(int(x) for x in row) for row in m))


class TestSaturatedThroughput:
    def test_single_link_stationary_mean(self):
        t = DelayTable(((0,),))
        pi = stationary(MODEL)
        want = float(pi @ np.array(MODEL.states))
        assert analytic_saturated_throughput(t, MODEL, "ELDR") == pytest.approx(want)
        assert oracle_saturated_throughput(t, MODEL, "ELDR") == pytest.approx(want)

    def test_two_link_hand_enumeration(self):
        # four cases of (C1[t-1], C2[t-1]); the better conditional mean wins
        t = DelayTable(((0, 1), (1, 0)))
        lo = 0.9 * 1 + 0.1 * 2  # from rate 1
        hi = 0.1 * 1 + 0.9 * 2  # from rate 2
        want = 0.25 * (lo + hi + hi + hi)
        got = oracle_saturated_throughput(t, MODEL, "ELDR")
        assert got == pytest.approx(want, abs=1e-12)

    def test_two_link_variants_equal(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            t = random_table(rng, 2)
            a = analytic_saturated_throughput(t, MODEL, "ELDR")
            b = analytic_saturated_throughput(t, MODEL, "ERDMC")
            assert a == pytest.approx(b, abs=1e-12)

    def test_analytic_equals_oracle_on_random_tables(self):
        rng = np.random.default_rng(22)
        for _ in range(25):
            n = int(rng.integers(2, 4))
            t = random_table(rng, n)
            for variant in ("ELDR", "ERDMC"):
                a = analytic_saturated_throughput(t, MODEL, variant)
                o = oracle_saturated_throughput(t, MODEL, variant)
                assert a == pytest.approx(o, abs=1e-9)

    def test_probability_mass_telescopes_to_one(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            t = random_table(rng, 3)
            for variant in ("ELDR", "ERDMC"):
                mass = analytic_saturated_throughput(t, MODEL, variant, _unit_payoff=True)
                assert mass == pytest.approx(1.0, abs=1e-12)

    def test_ic_dominates(self):
        rng = np.random.default_rng(24)
        bound = ic_upper_bound(MODEL, 3)
        for _ in range(15):
            t = random_table(rng, 3)
            assert analytic_saturated_throughput(t, MODEL, "ELDR") <= bound + 1e-12
            assert analytic_o_throughput(t, MODEL) <= bound + 1e-12

    def test_per_link_models_supported(self):
        t = DelayTable(((0, 2), (3, 0)))
        models = [ChannelModel.two_state(0.1), ChannelModel.two_state(0.3)]
        a = analytic_saturated_throughput(t, models, "ELDR")
        o = oracle_saturated_throughput(t, models, "ELDR")
        assert a == pytest.approx(o, abs=1e-12)

    def test_budget_guard(self):
        t = random_table(np.random.default_rng(0), 10)
        with pytest.raises(BudgetExceeded):
            analytic_saturated_throughput(t, MODEL, "ELDR", budget=1e9)
        with pytest.raises(BudgetExceeded):
            oracle_saturated_throughput(t, MODEL, "ELDR", budget=1e9)


class TestDelayComplexity:
    def test_two_link_count(self):
        got = delay_eval_complexity(2, a_max=1, num_states=2, horizon=10, t_max=2)
        assert got == BigPower(2, 48)

    def test_general_form(self):
        got = delay_eval_complexity(3, a_max=2, num_states=2, horizon=5, t_max=1)
        assert got == BigPower(6, 18)


def table3(x):
    return DelayTable(((0, 1), (x, 0)))


def queued_config(x, policy, horizon=400, trials=1):
    return SimConfig(
        table=table3(x),
        models=MODEL,
        policy=policy,
        mode="queued",
        arrivals=ArrivalProcess("poisson", (0.25, 0.25)),
        horizon=horizon,
        trials=trials,
        seed=0,
    )


class TestSamples:
    def test_typical_band(self):
        samples = generate_samples(
            MODEL, ArrivalProcess("poisson", (0.25, 0.25)), horizon=2000,
            t_max=2, count=5, seed=1, typical=True,
        )
        assert len(samples) == 5
        for s in samples:
            for l in range(2):
                path = s.channels[l]
                flips = np.mean(path[1:] != path[:-1])
                assert 0.05 <= flips <= 0.15

    def test_unreachable(self):
        with pytest.raises(TypicalityUnreachable):
            generate_samples(
                MODEL, ArrivalProcess("poisson", (0.25,)), horizon=10, t_max=0,
                count=1, seed=2, typical=True, eps=0.001, max_attempts=50,
            )

    def test_deterministic_per_seed(self):
        arr = ArrivalProcess("poisson", (0.25, 0.25))
        a = generate_samples(MODEL, arr, 200, 2, count=3, seed=9)
        b = generate_samples(MODEL, arr, 200, 2, count=3, seed=9)
        for x, y in zip(a, b):
            assert np.array_equal(x.arrivals, y.arrivals)
            assert np.array_equal(x.channels, y.channels)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            DelaySample(np.zeros((2, 5)), np.zeros((2, 6)))


class TestReplay:
    def test_single_packet_served_same_slot(self):
        cfg = queued_config(1, "DQIC1", horizon=4)
        arrivals = np.zeros((2, 5), dtype=np.int64)
        arrivals[0, 1] = 1  # slot t = 0
        channels = np.zeros((2, 5), dtype=np.int64)  # rate 1 everywhere
        sample = DelaySample(arrivals=arrivals, channels=channels)
        assert replay_mean_delay(sample, cfg) == 0.0

    def test_zero_arrivals_empty_service(self):
        cfg = queued_config(1, "DQIC1", horizon=4)
        sample = DelaySample(
            arrivals=np.zeros((2, 5), dtype=np.int64),
            channels=np.zeros((2, 5), dtype=np.int64),
        )
        with pytest.raises(EmptyServiceSet):
            replay_mean_delay(sample, cfg)

    def test_estimator_close_to_simulation(self):
        from delaysched.sim.engine import run_trials

        cfg = queued_config(2, "DQIC2", horizon=2000, trials=1500)
        samples = generate_samples(
            MODEL, cfg.arrivals, horizon=2000, t_max=2, count=40, seed=5
        )
        est = analytic_mean_delay(cfg, samples)
        sim = run_trials(cfg).mean_packet_delay
        assert abs(est - sim) / sim < 0.05
