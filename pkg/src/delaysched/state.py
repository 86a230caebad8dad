"""Slotted-time network state: queues, arrivals, and the NSI history.

Conventions used throughout the simulator:

* ``Q_l[t]`` is the queue length at the *start* of slot t, before the slot's
  arrivals.  The history records exactly these values, so delayed queue
  reads match the update law ``Q[t+1] = (Q[t] + A[t] - S[t])^+``.
* Packets that arrive in slot t can be served in slot t, in which case their
  recorded queueing delay is ``(t - t)^+ = 0``.
* Warm-up runs over slots ``t in [-tau_max, -1]``; services there are real
  (they drain queues) but are excluded from the delay statistics.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import EmptyServiceSet, InsufficientHistory
from .topology import DelayTable, tau_l_max


@dataclass(frozen=True)
class ArrivalProcess:
    """Per-link i.i.d. arrival counts: bernoulli, poisson or truncated_poisson.

    Plain poisson violates the bounded-arrival assumption of the model; it is
    kept for reproducing the delay experiments, truncated_poisson is the
    model-faithful variant (mass above the cap collapses onto the cap).
    """

    kind: str
    rates: tuple[float, ...]
    a_max: int = 1

    def __post_init__(self):
        if self.kind not in ("bernoulli", "poisson", "truncated_poisson"):
            raise ValueError(f"unknown arrival kind {self.kind!r}")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if any(r < 0 for r in self.rates):
            raise ValueError("rates must be non-negative")
        if self.kind == "bernoulli" and any(r > 1 for r in self.rates):
            raise ValueError("bernoulli rates must lie in [0, 1]")
        if self.a_max < 1:
            raise ValueError("a_max must be >= 1")

    @property
    def num_links(self) -> int:
        return len(self.rates)

    def mean(self, link: int) -> float:
        if self.kind in ("bernoulli", "poisson"):
            return self.rates[link]
        lam = self.rates[link]
        # truncation shifts a little mass; E = sum k pmf(k)
        return sum(k * self.pmf(link, k) for k in range(self.a_max + 1))

    def sample(self, rng: np.random.Generator, num_slots: int) -> np.ndarray:
        """(num_links, num_slots) array of arrival counts."""
        l = self.num_links
        if self.kind == "bernoulli":
            u = rng.random((l, num_slots))
            return (u < np.asarray(self.rates)[:, None]).astype(np.int64)
        draws = rng.poisson(np.asarray(self.rates)[:, None], size=(l, num_slots))
        if self.kind == "truncated_poisson":
            np.minimum(draws, self.a_max, out=draws)
        return draws.astype(np.int64)

    def pmf(self, link: int, k: int) -> float:
        lam = self.rates[link]
        if self.kind == "bernoulli":
            if k == 0:
                return 1.0 - lam
            if k == 1:
                return lam
            return 0.0
        if k < 0:
            return 0.0
        pois = math.exp(-lam) * lam**k / math.factorial(k)
        if self.kind == "poisson":
            return pois
        if k > self.a_max:
            return 0.0
        if k < self.a_max:
            return pois
        # truncated: everything at or above the cap
        below = sum(
            math.exp(-lam) * lam**j / math.factorial(j) for j in range(self.a_max)
        )
        return 1.0 - below


class PacketQueue:
    """FIFO of arrival timestamps with cumulative service accounting."""

    __slots__ = ("_stamps", "served", "delay_sum")

    def __init__(self):
        self._stamps: deque[int] = deque()
        self.served = 0  # N_l, services during the measured window only
        self.delay_sum = 0

    def __len__(self) -> int:
        return len(self._stamps)

    def push(self, count: int, t: int) -> None:
        self._stamps.extend([t] * count)

    def serve(self, k: int, t: int, record: bool) -> int:
        """Remove min(k, len) oldest packets; record (t - a)^+ if asked."""
        n = min(k, len(self._stamps))
        for _ in range(n):
            a = self._stamps.popleft()
            if record:
                self.delay_sum += max(0, t - a)
                self.served += 1
        return n

    def head_arrivals(self, k: int) -> list[int]:
        out = []
        for i, a in enumerate(self._stamps):
            if i >= k:
                break
            out.append(a)
        return out


class NsiHistory:
    """Rolling per-link record of (queue length, channel state index).

    Depth must cover tau_max + 1 slots so any read at delay <= tau_max
    succeeds once the warm-up has filled the buffer.
    """

    def __init__(self, num_links: int, depth: int, start_slot: int):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.num_links = num_links
        self.depth = depth
        self._q = np.zeros((num_links, depth), dtype=np.int64)
        self._c = np.zeros((num_links, depth), dtype=np.int64)
        self.t = start_slot - 1  # no slot recorded yet
        self._filled = 0

    def append(self, queue_lengths, channel_states) -> None:
        self.t += 1
        col = self.t % self.depth
        self._q[:, col] = queue_lengths
        self._c[:, col] = channel_states
        self._filled = min(self._filled + 1, self.depth)

    def _col(self, delay: int) -> int:
        if delay < 0 or delay >= self._filled or delay >= self.depth:
            raise InsufficientHistory(f"no record at delay {delay} (slot {self.t})")
        return (self.t - delay) % self.depth

    def queue_at(self, link: int, delay: int) -> int:
        return int(self._q[link, self._col(delay)])

    def channel_at(self, link: int, delay: int) -> int:
        return int(self._c[link, self._col(delay)])


def delayed_view(history: NsiHistory, table: DelayTable, observer: int):
    """The NSI the observer's transmitter holds at the current slot.

    For every link m it spans delays tau_l_max(m) down to the observer's own
    delay for m; the observer's own link always carries a delay-0 entry.
    """
    out = {}
    for m in table.links:
        lo = table.observation_delay(observer, m)
        hi = tau_l_max(table, m) if len(table.links) > 1 else 0
        entries = []
        for d in range(hi, lo - 1, -1):
            entries.append((d, history.queue_at(m, d), history.channel_at(m, d)))
        out[m] = tuple(entries)
    return out


class NetworkState:
    """Queues plus history for one simulation trial."""

    def __init__(self, num_links: int, depth: int, start_slot: int):
        self.queues = [PacketQueue() for _ in range(num_links)]
        self.history = NsiHistory(num_links, depth, start_slot)

    def queue_lengths(self) -> list[int]:
        return [len(q) for q in self.queues]

    def record_slot(self, channel_states) -> None:
        self.history.append(self.queue_lengths(), channel_states)

    def advance_slot(self, arrivals, service, t: int, record: bool) -> list[int]:
        """Apply one slot: push arrivals, serve FIFO heads, return served counts.

        `service` is the granted rate per link (0 when not transmitting);
        packets arriving this slot are servable this slot.
        """
        served = []
        for l, q in enumerate(self.queues):
            q.push(int(arrivals[l]), t)
            served.append(q.serve(int(service[l]), t, record))
        return served

    def total_served(self) -> int:
        return sum(q.served for q in self.queues)

    def total_delay(self) -> int:
        return sum(q.delay_sum for q in self.queues)

    def mean_delay(self) -> float:
        n = self.total_served()
        if n == 0:
            raise EmptyServiceSet("no packet serviced in the measured window")
        return self.total_delay() / n
