"""Single-shot argmax schedulers: the DQIC pair, O, and IC.

All of them pick exactly one winner; ties resolve to the smallest link id,
matching the lexicographic split used by the analytical delay expressions
(strict '>' against lower-numbered links, '>=' against higher-numbered).
"""

from __future__ import annotations

from ..channel import RateTable
from ..topology import DelayTable, tau_l_max, tau_max
from .base import ScheduleDecision, argmax_smallest_index


def current_rate(view, rates: RateTable, link: int) -> int:
    """The realised rate C_l[t] in packets/slot."""
    return rates.model(link).states[view.channel(link, 0)]


def schedule_dqic(view, table: DelayTable, rates: RateTable, variant: str) -> ScheduleDecision:
    """Delayed queue lengths, instantaneous channel states.

    DQIC1 weighs with Q[t - tau_max], DQIC2 with Q[t - tau_l_max].
    """
    if variant not in ("DQIC1", "DQIC2"):
        raise ValueError(f"unknown DQIC variant {variant!r}")
    links = table.links
    if len(links) == 1:
        return ScheduleDecision(frozenset(links))
    t_max = tau_max(table)

    def score(l):
        q_delay = t_max if variant == "DQIC1" else tau_l_max(table, l)
        return view.queue_weight(l, q_delay) * current_rate(view, rates, l)

    winner, _ = argmax_smallest_index((l, score(l)) for l in links)
    return ScheduleDecision(frozenset({winner}))


def schedule_o(view, table: DelayTable, rates: RateTable) -> ScheduleDecision:
    """Queue-weighted conditional expected rate at each link's own tau_l_max."""
    links = table.links
    if len(links) == 1:
        return ScheduleDecision(frozenset(links))

    def score(l):
        d = tau_l_max(table, l)
        return view.queue_weight(l, d) * rates.rate(l, d, view.channel(l, d))

    winner, _ = argmax_smallest_index((l, score(l)) for l in links)
    return ScheduleDecision(frozenset({winner}))


def schedule_ic(view, rates: RateTable) -> ScheduleDecision:
    """Instantaneous queue x rate argmax.

    Reads NSI no transmitter actually has under the delay model; it is the
    upper-bound yardstick, not an NSI-conformant policy.
    """
    winner, _ = argmax_smallest_index(
        (l, view.queue_weight(l, 0) * current_rate(view, rates, l))
        for l in range(len(rates.models))
    )
    return ScheduleDecision(frozenset({winner}))


def schedule_instantaneous(view, rates: RateTable, links) -> ScheduleDecision:
    """Warm-up rule shared by every policy for slots t < 0: undelayed Q x C."""
    winner, _ = argmax_smallest_index(
        (l, view.queue_weight(l, 0) * current_rate(view, rates, l)) for l in links
    )
    return ScheduleDecision(frozenset({winner}))
