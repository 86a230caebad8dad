"""Shared scheduler types: NSI views and schedule decisions."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class RoundRecord:
    """One elimination round, kept for auditability."""

    active: tuple[int, ...]
    tau: tuple[tuple[int, int], ...]  # (link, masked tau_l_max)
    rates: tuple[tuple[int, float], ...]  # (link, queue-weighted expected rate)
    protected: int  # H, the set-aside link
    candidates: tuple[int, ...]  # EC
    eliminated: int | None


@dataclass(frozen=True)
class ScheduleDecision:
    transmit: frozenset[int]
    trace: tuple[RoundRecord, ...] = ()

    @property
    def winner(self) -> int | None:
        """The single transmitting link, when there is exactly one."""
        if len(self.transmit) == 1:
            return next(iter(self.transmit))
        return None


class HistoryView:
    """Adapter giving the schedulers delayed reads over an NsiHistory."""

    def __init__(self, history, saturated: bool = False):
        self.history = history
        self.saturated = saturated

    def channel(self, link: int, delay: int) -> int:
        return self.history.channel_at(link, delay)

    def queue_weight(self, link: int, delay: int) -> int:
        if self.saturated:
            return 1
        return self.history.queue_at(link, delay)


class MappingView:
    """View backed by explicit {(link, delay): state} maps; used by the
    enumeration oracles and the golden-trace tests."""

    def __init__(self, channels: dict, queues: dict | None = None, saturated: bool = True):
        self.channels = dict(channels)
        self.queues = dict(queues or {})
        self.saturated = saturated

    def channel(self, link: int, delay: int) -> int:
        return self.channels[(link, delay)]

    def queue_weight(self, link: int, delay: int) -> int:
        if self.saturated:
            return 1
        return self.queues[(link, delay)]


def argmax_smallest_index(items):
    """(key, link) argmax resolving ties toward the smallest link id.

    `items` yields (link, score) with links ascending; strict improvement
    replaces, equality keeps the earlier link.
    """
    best_link = None
    best = None
    for link, score in items:
        if best is None or score > best:
            best = score
            best_link = link
    return best_link, best
