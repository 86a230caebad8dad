"""Seeded Monte-Carlo simulation: configs, metrics, and the scalar engine.

Saturated trials sample one slot each: the delayed channel realisations a
policy reads are drawn from the stationary law and chained forward with
n-step transitions, the winner delivers its realised current rate.  Queued
trials run a slotted horizon with a warm-up of tau_max slots (t in
[-tau_max, -1]) during which every policy schedules on instantaneous
queue x rate products; services before t = 0 drain queues but stay out of
the delay statistics.

A vectorized twin (`batch.py`) reproduces the scalar engine bit for bit on
the same drawn inputs; `run_trials` picks whichever applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelModel, RateTable
from ..errors import BudgetExceeded
from ..state import ArrivalProcess, NetworkState
from ..topology import DelayTable, InterferenceSpec, tau_l_max, tau_max
from ..policies import (
    HistoryView,
    ScheduleDecision,
    ThresholdScheduler,
    schedule_dqic,
    schedule_ic,
    schedule_instantaneous,
    schedule_lc,
    schedule_multi_interference,
    schedule_o,
)

POLICIES = ("DQIC1", "DQIC2", "O", "IC", "LC-ELDR", "LC-ERDMC", "R", "H")
DEFAULT_CHUNK = 16384


def network_tau_max(table: DelayTable) -> int:
    """tau_max, with the single-link degenerate case pinned to 0."""
    return tau_max(table) if len(table.links) > 1 else 0


@dataclass(frozen=True)
class SimConfig:
    table: DelayTable
    models: tuple[ChannelModel, ...]
    policy: str
    mode: str = "saturated"
    interference: InterferenceSpec | None = None
    arrivals: ArrivalProcess | None = None
    horizon: int = 512
    trials: int = 100_000
    seed: int = 0
    budget: float = 1e9
    corr_lags: tuple[int, ...] = ()
    chunk: int = DEFAULT_CHUNK

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.mode not in ("saturated", "queued"):
            raise ValueError("mode must be 'saturated' or 'queued'")
        if self.table.mask:
            raise ValueError("simulation needs an unmasked delay table")
        if isinstance(self.models, ChannelModel):
            object.__setattr__(self, "models", (self.models,) * self.table.num_links)
        else:
            object.__setattr__(self, "models", tuple(self.models))
        if len(self.models) != self.table.num_links:
            raise ValueError("need one channel model per link")
        if self.interference is None:
            object.__setattr__(
                self, "interference", InterferenceSpec.complete(self.table.num_links)
            )
        if self.mode == "queued":
            if self.arrivals is None:
                raise ValueError("queued mode needs an arrival process")
            if self.arrivals.num_links != self.table.num_links:
                raise ValueError("need one arrival rate per link")
            if self.horizon < network_tau_max(self.table) + 1:
                raise ValueError("horizon must be at least tau_max + 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        gammas = set(self.interference.gamma)
        if gammas - {0.0}:
            self.interference.validate_integral_collisions(self.models[0].states)


@dataclass(frozen=True)
class SimMetrics:
    policy: str
    mode: str
    trials: int
    seed: int
    mean_throughput: float
    throughput_stderr: float
    mean_packet_delay: float | None = None
    delay_stderr: float | None = None
    packets_served: int = 0
    queue_mean: tuple[float, ...] = ()
    queue_max: tuple[int, ...] = ()
    max_queue: int = 0
    correlations: dict = field(default_factory=dict, hash=False)


# ---------------------------------------------------------------------------
# per-chunk accumulators (all integers or per-trial floats reduced in a fixed
# chunk order, so aggregation is order-independent)


@dataclass
class ChunkStats:
    trials: int = 0
    delivered_sum: int = 0
    delivered_sq: int = 0
    delay_sum: int = 0
    served: int = 0
    ratio_sum: float = 0.0
    ratio_sq: float = 0.0
    ratio_n: int = 0
    q_sum: tuple = ()
    q_max: tuple = ()
    corr: dict = field(default_factory=dict)

    def merge(self, other: "ChunkStats") -> "ChunkStats":
        corr = dict(self.corr)
        for k, v in other.corr.items():
            corr[k] = tuple(a + b for a, b in zip(corr[k], v)) if k in corr else v
        return ChunkStats(
            trials=self.trials + other.trials,
            delivered_sum=self.delivered_sum + other.delivered_sum,
            delivered_sq=self.delivered_sq + other.delivered_sq,
            delay_sum=self.delay_sum + other.delay_sum,
            served=self.served + other.served,
            ratio_sum=self.ratio_sum + other.ratio_sum,
            ratio_sq=self.ratio_sq + other.ratio_sq,
            ratio_n=self.ratio_n + other.ratio_n,
            q_sum=tuple(
                a + b for a, b in zip(self.q_sum, other.q_sum)
            )
            if self.q_sum
            else other.q_sum,
            q_max=tuple(max(a, b) for a, b in zip(self.q_max, other.q_max))
            if self.q_max
            else other.q_max,
            corr=corr,
        )


def _needed_delays(table: DelayTable, policy: str):
    """Per link: descending delay list a saturated trial must realise."""
    links = table.links
    t_max = network_tau_max(table)
    need = {l: {0} for l in links}
    if len(links) == 1 or policy in ("DQIC1", "DQIC2", "IC"):
        pass  # instantaneous channel only
    elif policy == "O":
        for l in links:
            need[l].add(tau_l_max(table, l))
    elif policy in ("LC-ELDR", "LC-ERDMC"):
        for l in links:
            for j in links:
                if j != l:
                    need[l].add(table.delays[l][j])
    elif policy in ("R", "H"):
        for l in links:
            for j in links:
                if j != l:
                    need[l].add(table.delays[l][j])
            need[l].add(tau_l_max(table, l) if policy == "H" else t_max)
    return {l: sorted(need[l], reverse=True) for l in links}


class _DrawnView:
    """Saturated view over pre-drawn delayed channel values for one trial."""

    saturated = True

    def __init__(self, values, trial: int):
        self.values = values
        self.trial = trial

    def channel(self, link: int, delay: int) -> int:
        return int(self.values[link][delay][self.trial])

    def queue_weight(self, link: int, delay: int) -> int:
        return 1


def _policy_runner(config: SimConfig, rates: RateTable):
    """Bind the configured policy to a (view -> ScheduleDecision) callable."""
    table, interference = config.table, config.interference
    name = config.policy
    if name in ("DQIC1", "DQIC2"):
        return lambda view: schedule_dqic(view, table, rates, name)
    if name == "O":
        return lambda view: schedule_o(view, table, rates)
    if name == "IC":
        return lambda view: schedule_ic(view, rates)
    if name in ("LC-ELDR", "LC-ERDMC"):
        variant = name.split("-")[1]
        if interference.is_complete():
            return lambda view: schedule_lc(view, table, rates, variant)
        return lambda view: schedule_multi_interference(
            view, table, rates, interference, variant
        )
    if name in ("R", "H"):
        scheduler = ThresholdScheduler(table, rates, interference, name, config.budget)
        return scheduler.decide
    raise ValueError(name)


def _granted_service(decision: ScheduleDecision, rates_now, interference: InterferenceSpec):
    """Realised service per link given who transmits and who collides."""
    out = [0] * len(rates_now)
    for l in decision.transmit:
        collided = any(m in decision.transmit for m in interference.interferers[l])
        if collided:
            g = interference.gamma[l] * rates_now[l]
            out[l] = int(round(g))
        else:
            out[l] = rates_now[l]
    return out


def run_saturated_chunk_scalar(config: SimConfig, values, n_trials: int) -> ChunkStats:
    rates = RateTable(config.models)
    runner = _policy_runner(config, rates)
    delivered_sum = 0
    delivered_sq = 0
    for i in range(n_trials):
        view = _DrawnView(values, i)
        decision = runner(view)
        rates_now = [
            config.models[l].states[view.channel(l, 0)] for l in range(config.table.num_links)
        ]
        service = _granted_service(decision, rates_now, config.interference)
        v = sum(service)
        delivered_sum += v
        delivered_sq += v * v
    return ChunkStats(trials=n_trials, delivered_sum=delivered_sum, delivered_sq=delivered_sq)


def run_queued_chunk_scalar(config: SimConfig, paths, arrivals, corr_lags=()) -> ChunkStats:
    """Reference slotted-time loop over pre-drawn inputs.

    `paths` and `arrivals` are (n, L, S) with S = tau_max + horizon slots;
    array column s corresponds to slot t = s - tau_max.
    """
    n, L, S = paths.shape
    t_max = network_tau_max(config.table)
    rates = RateTable(config.models)
    runner = _policy_runner(config, rates)
    depth = t_max + 1

    stats = ChunkStats(trials=n)
    q_sum = [0] * L
    q_max = [0] * L
    corr_acc = {key: [0, 0, 0, 0, 0, 0] for key in corr_lags}
    delivered_sum = 0
    delivered_sq = 0
    delay_sum_total = 0
    served_total = 0
    ratios = []

    states_of = [m.states for m in config.models]
    for i in range(n):
        net = NetworkState(L, depth, start_slot=-t_max)
        delivered = 0
        q_recent = {}  # (link, slot) -> queue length, for correlation lags
        for s in range(S):
            t = s - t_max
            qs = net.queue_lengths()
            net.history.append(qs, paths[i, :, s])
            view = HistoryView(net.history, saturated=False)
            if t < 0:
                decision = schedule_instantaneous(view, rates, config.table.links)
            else:
                decision = runner(view)
            rates_now = [states_of[l][paths[i, l, s]] for l in range(L)]
            service = _granted_service(decision, rates_now, config.interference)
            served = net.advance_slot(arrivals[i, :, s], service, t, record=(t >= 0))
            if t >= 0:
                delivered += sum(served)
                for l in range(L):
                    q_sum[l] += qs[l]
                    if qs[l] > q_max[l]:
                        q_max[l] = qs[l]
                for l, _ in corr_lags:
                    q_recent[(l, t)] = qs[l]
                for key in corr_lags:
                    l, lag = key
                    if t - lag >= 0:
                        a = qs[l]
                        b = q_recent[(l, t - lag)]
                        acc = corr_acc[key]
                        acc[0] += 1
                        acc[1] += a
                        acc[2] += b
                        acc[3] += a * b
                        acc[4] += a * a
                        acc[5] += b * b
        delivered_sum += delivered
        delivered_sq += delivered * delivered
        d = net.total_delay()
        k = net.total_served()
        delay_sum_total += d
        served_total += k
        if k > 0:
            ratios.append(d / k)
    return ChunkStats(
        trials=n,
        delivered_sum=delivered_sum,
        delivered_sq=delivered_sq,
        delay_sum=delay_sum_total,
        served=served_total,
        ratio_sum=math.fsum(ratios),
        ratio_sq=math.fsum(r * r for r in ratios),
        ratio_n=len(ratios),
        q_sum=tuple(q_sum),
        q_max=tuple(q_max),
        corr={k: tuple(v) for k, v in corr_acc.items()},
    )


def _chunk_sizes(trials: int, chunk: int):
    out = []
    left = trials
    while left > 0:
        take = min(chunk, left)
        out.append(take)
        left -= take
    return out


def run_trials(config: SimConfig, force_engine: str = "auto") -> SimMetrics:
    """Deterministic Monte-Carlo estimate for the configured policy."""
    from . import batch

    corr_lags = tuple(config.corr_lags)
    sizes = _chunk_sizes(config.trials, config.chunk)
    partials = []
    for ci, n in enumerate(sizes):
        partials.append(_run_chunk(config, ci, n, corr_lags, force_engine, batch))
    total = partials[0]
    for p in partials[1:]:
        total = total.merge(p)
    return _finalize(config, total, corr_lags)


def _run_chunk(config, ci, n, corr_lags, force_engine, batch):
    from . import draws

    if config.mode == "saturated":
        need = _needed_delays(config.table, config.policy)
        values = draws.draw_delayed_values(
            config.models, [need[l] for l in sorted(need)], n, config.seed, ci
        )
        use_batch = force_engine == "batch" or (
            force_engine == "auto" and batch.saturated_supported(config)
        )
        if use_batch:
            return batch.run_saturated_chunk(config, values, n)
        return run_saturated_chunk_scalar(config, values, n)

    slots = network_tau_max(config.table) + config.horizon
    paths = draws.draw_paths(config.models, slots, n, config.seed, ci)
    arr = draws.draw_arrivals(config.arrivals, slots, n, config.seed, ci)
    use_batch = force_engine == "batch" or (
        force_engine == "auto" and batch.queued_supported(config)
    )
    if use_batch:
        return batch.run_queued_chunk(config, paths, arr, corr_lags)
    return run_queued_chunk_scalar(config, paths, arr, corr_lags)


def _finalize(config: SimConfig, s: ChunkStats, corr_lags) -> SimMetrics:
    n = s.trials
    mean = s.delivered_sum / n
    var = max(0.0, s.delivered_sq / n - mean * mean)
    stderr = math.sqrt(var / n)
    if config.mode == "queued":
        mean /= config.horizon
        stderr /= config.horizon

    delay = None
    delay_se = None
    if config.mode == "queued" and s.served > 0:
        delay = s.delay_sum / s.served
        if s.ratio_n > 1:
            rm = s.ratio_sum / s.ratio_n
            rv = max(0.0, s.ratio_sq / s.ratio_n - rm * rm)
            delay_se = math.sqrt(rv / s.ratio_n)

    correlations = {}
    for key in corr_lags:
        cnt, sa, sb, sab, saa, sbb = s.corr[key]
        if cnt == 0:
            continue
        cov = sab / cnt - (sa / cnt) * (sb / cnt)
        va = saa / cnt - (sa / cnt) ** 2
        vb = sbb / cnt - (sb / cnt) ** 2
        if va <= 0 or vb <= 0:
            continue
        correlations[key] = cov / math.sqrt(va * vb)

    denom = n * config.horizon if config.mode == "queued" else 0
    return SimMetrics(
        policy=config.policy,
        mode=config.mode,
        trials=n,
        seed=config.seed,
        mean_throughput=mean,
        throughput_stderr=stderr,
        mean_packet_delay=delay,
        delay_stderr=delay_se,
        packets_served=s.served,
        queue_mean=tuple(q / denom for q in s.q_sum) if denom else (),
        queue_max=s.q_max,
        max_queue=max(s.q_max) if s.q_max else 0,
        correlations=correlations,
    )


def stability_probe(config: SimConfig, queue_bound: int) -> bool:
    """Bounded-queue heuristic for supportability: True when no queue ever
    exceeds the bound after warm-up."""
    if config.mode != "queued":
        raise ValueError("stability probe needs queued mode")
    metrics = run_trials(config)
    return metrics.max_queue < queue_bound
