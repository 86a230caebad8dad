"""Exact analytical evaluators and their independent cross-checks.

Two routes to the expected saturated throughput of the elimination
policies:

* `analytic_saturated_throughput` evaluates the closed triple sum: winners i
  times last rounds r times realisations of the delayed channel states read
  round by round, with survival indicators written exactly as the
  lexicographic rate comparisons and row-max reduction predicates, and
  probability weights chained through stationary starts and n-step
  transitions (a zero-step hop has weight 1, i.e. a variable repeated at the
  same delay is the same variable).
* `oracle_saturated_throughput` enumerates the same realisation tree but
  drives the production elimination scheduler on every branch, sharing
  nothing with the formula evaluation beyond the probability weights.

Both are exact; the suite requires them to agree to 1e-9.

The delay half evaluates the average per-packet queueing delay expression
by replaying deterministic (arrival stream, channel path) pairs through the
real queue dynamics and averaging, either over randomly drawn pairs or over
typical ones (empirical statistics within an epsilon band of the model).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, RateTable, n_step_matrix, stationary
from .errors import BudgetExceeded, EmptyServiceSet, TypicalityUnreachable
from .state import ArrivalProcess
from .topology import BigPower, DelayTable, tau_l_max, tau_max
from .policies import run_elimination
from .sim.engine import SimConfig, run_queued_chunk_scalar

# ---------------------------------------------------------------------------
# saturated throughput of the elimination policies


def _enumeration_guard(num_links: int, num_states: int, budget) -> None:
    if num_states < 2:
        return
    exponent = num_links * (num_links + 1) // 2 - 1
    bound = BigPower(num_states, exponent)
    if bound > budget:
        raise BudgetExceeded(
            f"up to {bound} delayed-realisation tuples exceed budget {budget}",
            counts=(bound,),
        )


def _masked_tau_map(delays, active):
    return {
        j: max(delays[j][k] for k in active if k != j)
        for j in active
    }


def _reduced_row_count(delays, active, k):
    """How many surviving rows' masked maxima strictly drop without column k."""
    cnt = 0
    for j in active:
        if j == k:
            continue
        best_other = max(
            (delays[j][m] for m in active if m not in (j, k)), default=-1
        )
        if delays[j][k] > best_other:
            cnt += 1
    return cnt


def _lex_is_max(scores, active, i) -> bool:
    """Strictly above every lower-indexed link, at least every higher one."""
    below = [scores[k] for k in active if k < i]
    above = [scores[k] for k in active if k > i]
    return (not below or scores[i] > max(below)) and (
        not above or scores[i] >= max(above)
    )


def _eliminated_link(delays, active, scores, protected, variant):
    """The formula's e^(r); None when nothing can be eliminated (links here
    are 0-based, so the paper's '0' sentinel becomes None)."""
    reducer_counts = {
        k: _reduced_row_count(delays, active, k)
        for k in active
        if k != protected
    }
    candidates = [k for k, c in reducer_counts.items() if c > 0]
    if not candidates:
        return None, reducer_counts
    if variant == "ELDR":
        pool = candidates
    else:
        most = max(reducer_counts[k] for k in candidates)
        pool = [k for k in candidates if reducer_counts[k] == most]
    out = None
    best = None
    for k in pool:  # lowest rate, tie -> largest link id
        if best is None or scores[k] <= best:
            best = scores[k]
            out = k
    return out, reducer_counts


def analytic_saturated_throughput(
    table: DelayTable,
    models,
    variant: str,
    budget: float = 1e9,
    _unit_payoff: bool = False,
) -> float:
    """Exact expected saturated system throughput of LC-ELDR / LC-ERDMC.

    With `_unit_payoff` the winner's conditional expected rate is replaced
    by 1, turning the sum into the total probability mass of the indicator
    partition (must be exactly 1; a test pins this).
    """
    if variant not in ("ELDR", "ERDMC"):
        raise ValueError(f"unknown LC variant {variant!r}")
    links = list(table.links)
    n = len(links)
    rates = RateTable(
        models if not isinstance(models, ChannelModel) else [models] * table.num_links
    )
    if n == 1:
        m = rates.model(links[0])
        return 1.0 if _unit_payoff else float(np.dot(stationary(m), m.states))
    _enumeration_guard(n, rates.model(links[0]).num_states, budget)

    delays = table.delays
    pis = {l: stationary(rates.model(l)) for l in links}
    terms = []

    # link -> 1 while the survival indicator product holds; realisations keyed
    # by (link, delay) so a delay repeated across rounds reuses its value
    def recurse(active, assigned, last, weight, survival):
        taus = _masked_tau_map(delays, active)
        new_vars = [
            (j, taus[j]) for j in sorted(active) if (j, taus[j]) not in assigned
        ]
        num_states = max(rates.model(j).num_states for j in links)
        for combo in itertools.product(range(num_states), repeat=len(new_vars)):
            w = weight
            ok = True
            a2 = dict(assigned)
            l2 = dict(last)
            for (j, d), s in zip(new_vars, combo):
                if s >= rates.model(j).num_states:
                    ok = False
                    break
                prev = l2.get(j)
                if prev is None:
                    p = float(pis[j][s])
                else:
                    pd, ps = prev
                    p = float(n_step_matrix(rates.model(j), pd - d)[ps, s])
                if p == 0.0:
                    ok = False
                    break
                w *= p
                a2[(j, d)] = s
                l2[j] = (d, s)
            if not ok:
                continue

            scores = {j: rates.rate(j, taus[j], a2[(j, taus[j])]) for j in active}
            protected = None
            for j in sorted(active):
                if _lex_is_max(scores, active, j):
                    protected = j
                    break

            if len(active) == 2:
                e, reducer_counts = None, {k: 0 for k in active}
            else:
                e, reducer_counts = _eliminated_link(
                    delays, active, scores, protected, variant
                )

            if e is None:
                # terminal round: winner is the lexicographic rate maximiser
                for i in active:
                    if survival[i] and _lex_is_max(scores, active, i):
                        payoff = 1.0 if _unit_payoff else scores[i]
                        terms.append(w * payoff)
            else:
                s2 = dict(survival)
                for i in active:
                    s1 = _lex_is_max(scores, active, i)
                    not_max = not s1
                    reduces_none = _reduced_row_count(delays, active, i) == 0
                    cond2 = not_max and reduces_none  # e != 0 already holds
                    cond3 = not_max and not reduces_none and e != i
                    s2[i] = survival[i] and (s1 or cond2 or cond3)
                recurse(
                    tuple(x for x in active if x != e), a2, l2, w, s2
                )

    recurse(tuple(links), {}, {}, 1.0, {l: True for l in links})
    return math.fsum(terms)


class _Unassigned(Exception):
    def __init__(self, var):
        self.var = var


def oracle_saturated_throughput(
    table: DelayTable,
    models,
    variant: str,
    budget: float = 1e9,
) -> float:
    """Independent check: enumerate the realisations the elimination
    dynamics actually read and run the production scheduler on each branch."""
    if variant not in ("ELDR", "ERDMC"):
        raise ValueError(f"unknown LC variant {variant!r}")
    links = list(table.links)
    n = len(links)
    rates = RateTable(
        models if not isinstance(models, ChannelModel) else [models] * table.num_links
    )
    if n == 1:
        m = rates.model(links[0])
        return float(np.dot(stationary(m), m.states))
    _enumeration_guard(n, rates.model(links[0]).num_states, budget)

    pis = {l: stationary(rates.model(l)) for l in links}
    terms = []

    def attempt(assigned):
        def rate_of(link, delay):
            key = (link, delay)
            if key not in assigned:
                raise _Unassigned(key)
            return rates.rate(link, delay, assigned[key])

        return run_elimination(
            table.delays, links, variant, rate_of, lambda l, d: 1
        )

    def explore(assigned, last, weight):
        try:
            winner, trace = attempt(assigned)
        except _Unassigned as exc:
            link, delay = exc.var
            prev = last.get(link)
            for s in range(rates.model(link).num_states):
                if prev is None:
                    p = float(pis[link][s])
                else:
                    pd, ps = prev
                    p = float(n_step_matrix(rates.model(link), pd - delay)[ps, s])
                if p == 0.0:
                    continue
                a2 = dict(assigned)
                a2[(link, delay)] = s
                l2 = dict(last)
                l2[link] = (delay, s)
                explore(a2, l2, weight * p)
            return
        final_tau = dict(trace[-1].tau)[winner]
        terms.append(
            weight * rates.rate(winner, final_tau, assigned[(winner, final_tau)])
        )

    explore({}, {}, 1.0)
    return math.fsum(terms)


def analytic_o_throughput(table: DelayTable, models) -> float:
    """Exact saturated throughput of the one-shot O policy."""
    links = list(table.links)
    rates = RateTable(
        models if not isinstance(models, ChannelModel) else [models] * table.num_links
    )
    if len(links) == 1:
        m = rates.model(links[0])
        return float(np.dot(stationary(m), m.states))
    pis = {l: stationary(rates.model(l)) for l in links}
    taus = {l: tau_l_max(table, l) for l in links}
    total = 0.0
    num_states = rates.model(links[0]).num_states
    for combo in itertools.product(range(num_states), repeat=len(links)):
        w = 1.0
        for i, l in enumerate(links):
            w *= float(pis[l][combo[i]])
        if w == 0.0:
            continue
        scores = {l: rates.rate(l, taus[l], combo[i]) for i, l in enumerate(links)}
        winner = None
        for l in links:
            if _lex_is_max(scores, links, l):
                winner = l
                break
        total += w * scores[winner]
    return total


def ic_upper_bound(models, num_links: int | None = None) -> float:
    """E[max_l C_l[t]] under the stationary law; the IC policy's saturated
    throughput with complete interference."""
    if isinstance(models, ChannelModel):
        models = [models] * int(num_links)
    pis = [stationary(m) for m in models]
    total = 0.0
    for combo in itertools.product(*(range(m.num_states) for m in models)):
        w = 1.0
        for i, m in enumerate(models):
            w *= float(pis[i][combo[i]])
        total += w * max(m.states[c] for m, c in zip(models, combo))
    return total


# ---------------------------------------------------------------------------
# analytical per-packet queueing delay


def delay_eval_complexity(
    num_links: int, a_max: int, num_states: int, horizon: int, t_max: int
) -> BigPower:
    """Operation count of evaluating the delay expression comprehensively."""
    return BigPower((a_max + 1) * num_states, num_links * (t_max + horizon))


@dataclass(frozen=True)
class DelaySample:
    """One joint realisation: per-link arrivals and channel-state indices
    over slots -tau_max .. horizon-1."""

    arrivals: np.ndarray  # (L, tau_max + horizon) counts
    channels: np.ndarray  # (L, tau_max + horizon) state indices

    def __post_init__(self):
        if self.arrivals.shape != self.channels.shape:
            raise ValueError("arrival and channel sample shapes differ")


def _empirical_transition_ok(path, model: ChannelModel, eps: float) -> bool:
    m = model.num_states
    counts = np.zeros((m, m))
    for a, b in zip(path, path[1:]):
        counts[a, b] += 1
    rows = counts.sum(axis=1)
    if np.any(rows == 0):
        return False
    emp = counts / rows[:, None]
    return bool(np.max(np.abs(emp - model.transition)) <= eps)


def _empirical_arrivals_ok(stream, process: ArrivalProcess, link: int, eps: float) -> bool:
    n = len(stream)
    top = int(stream.max()) if n else 0
    # every value with non-negligible model mass must sit inside the band
    k = 0
    while True:
        p = process.pmf(link, k)
        f = float(np.count_nonzero(stream == k)) / n
        if abs(f - p) > eps:
            return False
        if k >= top and p < eps / 4:
            return True
        k += 1


def generate_samples(
    models,
    process: ArrivalProcess,
    horizon: int,
    t_max: int,
    count: int,
    seed: int,
    typical: bool = True,
    eps: float = 0.05,
    max_attempts: int = 1000,
) -> list[DelaySample]:
    """Joint (arrival stream, channel path) samples for the delay estimator.

    Typical samples are rejection-sampled per link until the empirical
    one-step transition frequencies and the empirical arrival histogram both
    sit within eps (sup norm) of the model.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    num_links = process.num_links
    if isinstance(models, ChannelModel):
        models = [models] * num_links
    slots = t_max + horizon
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed)))
    out = []
    for _ in range(count):
        chans = np.empty((num_links, slots), dtype=np.int64)
        arrs = np.empty((num_links, slots), dtype=np.int64)
        for l in range(num_links):
            model = models[l]
            pi_cum = np.cumsum(stationary(model))
            cum = np.cumsum(model.transition, axis=1)
            for attempt in range(max_attempts + 1):
                if attempt == max_attempts:
                    raise TypicalityUnreachable(
                        f"no typical channel path for link {l} in {max_attempts} tries"
                    )
                path = np.empty(slots, dtype=np.int64)
                path[0] = np.searchsorted(pi_cum, rng.random(), side="right")
                u = rng.random(slots - 1)
                for t in range(1, slots):
                    path[t] = np.searchsorted(cum[path[t - 1]], u[t - 1], side="right")
                if not typical or _empirical_transition_ok(path, model, eps):
                    chans[l] = path
                    break
            for attempt in range(max_attempts + 1):
                if attempt == max_attempts:
                    raise TypicalityUnreachable(
                        f"no typical arrival stream for link {l} in {max_attempts} tries"
                    )
                stream = process.sample(rng, slots)[l]
                if not typical or _empirical_arrivals_ok(stream, process, l, eps):
                    arrs[l] = stream
                    break
        out.append(DelaySample(arrivals=arrs, channels=chans))
    return out


def replay_mean_delay(sample: DelaySample, config: SimConfig) -> float:
    """Deterministic replay of one sample through the real queue dynamics."""
    stats = run_queued_chunk_scalar(
        config,
        sample.channels[None, :, :],
        sample.arrivals[None, :, :],
    )
    if stats.served == 0:
        raise EmptyServiceSet("no packet serviced over the horizon")
    return stats.delay_sum / stats.served


def analytic_mean_delay(config: SimConfig, samples) -> float:
    """Sample-average estimate of the exact delay expression."""
    if not samples:
        raise ValueError("need at least one sample")
    vals = [replay_mean_delay(s, config) for s in samples]
    return math.fsum(vals) / len(vals)
