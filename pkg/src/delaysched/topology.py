"""Heterogeneous delay tables and the complexity calculators built on them.

A delay table is oriented the same way as the experiment tables in the
configs: entry (i, j) is the delay with which the transmitter of link j
obtains the NSI of link i.  Rows therefore describe an observed link and
columns an observing transmitter; diagonals are zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath

from .errors import NonDistinctDelays

_EXACT_EXPONENT_LIMIT = 10_000


def _prime_factors(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class BigPower:
    """Exact base**exponent for counts far beyond machine range."""

    base: int
    exponent: int

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        if self.exponent < 0:
            raise ValueError("exponent must be >= 0")

    def expandable(self) -> bool:
        return self.exponent < _EXACT_EXPONENT_LIMIT

    def value(self) -> int:
        if not self.expandable():
            raise OverflowError(f"{self} is too large to expand exactly")
        return self.base ** self.exponent

    def _canonical(self) -> tuple[tuple[int, int], ...]:
        if self.exponent == 0:
            return ()
        return tuple(
            sorted((p, a * self.exponent) for p, a in _prime_factors(self.base).items())
        )

    def log10(self) -> mpmath.mpf:
        with mpmath.workdps(50):
            return self.exponent * mpmath.log10(self.base)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.expandable() and self.value() == other
        if not isinstance(other, BigPower):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        return hash(self._canonical())

    def _cmp(self, other) -> int:
        if isinstance(other, (int, float)):
            if self.expandable():
                v = self.value()
                return (v > other) - (v < other)
            with mpmath.workdps(60):
                b = mpmath.log10(mpmath.mpf(other)) if other > 0 else mpmath.mpf("-inf")
                a = self.log10()
            return (a > b) - (a < b)
        if self == other:
            return 0
        with mpmath.workdps(60):
            a, b = self.log10(), other.log10()
        return 1 if a > b else -1

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __str__(self):
        return f"{self.base}^{self.exponent}"


@dataclass(frozen=True)
class DelayTable:
    delays: tuple[tuple[int, ...], ...]
    mask: frozenset[int] = frozenset()

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.delays)
        object.__setattr__(self, "delays", rows)
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ValueError("delay table must be square")
        for i, row in enumerate(rows):
            if row[i] != 0:
                raise ValueError("diagonal delays must be 0")
            if any(v < 0 for v in row):
                raise ValueError("delays must be non-negative")
        mask = frozenset(int(m) for m in self.mask)
        if any(not 0 <= m < n for m in mask):
            raise ValueError("mask must reference links in the table")
        object.__setattr__(self, "mask", mask)

    @property
    def num_links(self) -> int:
        return len(self.delays)

    @property
    def links(self) -> tuple[int, ...]:
        """Unmasked link ids, ascending."""
        return tuple(i for i in range(self.num_links) if i not in self.mask)

    def observation_delay(self, observer: int, observed: int) -> int:
        """Delay with which the transmitter of `observer` knows link `observed`."""
        return self.delays[observed][observer]

    def with_mask(self, extra) -> "DelayTable":
        return DelayTable(self.delays, self.mask | frozenset(extra))

    def submatrix(self, n: int) -> "DelayTable":
        """Top-left n x n sub-table (the paper's way of shrinking profiles)."""
        return DelayTable(tuple(row[:n] for row in self.delays[:n]))


def tau_max(table: DelayTable) -> int:
    links = table.links
    if len(links) < 2:
        raise ValueError("tau_max needs at least 2 unmasked links")
    return max(table.delays[i][j] for i in links for j in links if i != j)


def tau_l_max(table: DelayTable, link: int) -> int:
    if link in table.mask:
        raise ValueError("link is masked")
    others = [j for j in table.links if j != link]
    if not others:
        raise ValueError("tau_l_max needs another unmasked link")
    return max(table.delays[link][j] for j in others)


@dataclass(frozen=True)
class InterferenceSpec:
    interferers: tuple[frozenset[int], ...]
    gamma: tuple[float, ...]

    def __post_init__(self):
        inter = tuple(frozenset(int(x) for x in s) for s in self.interferers)
        object.__setattr__(self, "interferers", inter)
        gamma = tuple(float(g) for g in self.gamma)
        object.__setattr__(self, "gamma", gamma)
        n = len(inter)
        if len(gamma) != n:
            raise ValueError("gamma must have one entry per link")
        for l, s in enumerate(inter):
            if l in s:
                raise ValueError("a link cannot interfere with itself")
            if any(not 0 <= m < n for m in s):
                raise ValueError("interferer ids out of range")
        if any(not 0.0 <= g <= 1.0 for g in gamma):
            raise ValueError("gamma must lie in [0, 1]")

    @classmethod
    def complete(cls, num_links: int, gamma: float = 0.0) -> "InterferenceSpec":
        return cls(
            tuple(frozenset(range(num_links)) - {l} for l in range(num_links)),
            (gamma,) * num_links,
        )

    @property
    def num_links(self) -> int:
        return len(self.interferers)

    def is_complete(self) -> bool:
        n = self.num_links
        return all(self.interferers[l] == frozenset(range(n)) - {l} for l in range(n))

    def validate_integral_collisions(self, states) -> None:
        """Fractional collisions must deliver whole packets for every rate."""
        for l, g in enumerate(self.gamma):
            if g in (0.0, 1.0):
                continue
            for c in states:
                if abs(g * c - round(g * c)) > 1e-9:
                    raise ValueError(
                        f"gamma[{l}]={g} times rate {c} is not an integer"
                    )


@dataclass(frozen=True)
class CriticalSets:
    """Network-wide and per-link critical NSI, as (link, delay) pairs."""

    network: frozenset[tuple[int, int]]
    per_link: dict[int, frozenset[tuple[int, int]]] = field(hash=False)

    def __post_init__(self):
        for l, s in self.per_link.items():
            if not s <= self.network:
                raise ValueError(f"per-link critical set of link {l} escapes the network set")


def _network_critical_set(table: DelayTable) -> frozenset[tuple[int, int]]:
    links = table.links
    return frozenset(
        (m, table.observation_delay(k, m)) for m in links for k in links if k != m
    )


def _per_link_sets(table: DelayTable, horizon) -> dict[int, frozenset[tuple[int, int]]]:
    net = _network_critical_set(table)
    out = {}
    for l in table.links:
        out[l] = frozenset(
            (m, d)
            for (m, d) in net
            if table.observation_delay(l, m) <= d <= horizon(m)
        )
    return out


def critical_sets_R(table: DelayTable) -> CriticalSets:
    """Critical NSI intersected with what each transmitter sees at the
    network-wide horizon."""
    t_max = tau_max(table)
    return CriticalSets(_network_critical_set(table), _per_link_sets(table, lambda m: t_max))


def critical_sets_H(table: DelayTable) -> CriticalSets:
    """Same construction, but each link m is capped at its own tau_l_max."""
    return CriticalSets(
        _network_critical_set(table),
        _per_link_sets(table, lambda m: tau_l_max(table, m)),
    )


def conditioning_pairs(table: DelayTable, policy: str) -> frozenset[tuple[int, int]]:
    """The common conditioning symbols each policy gives away for free."""
    if policy == "R":
        t = tau_max(table)
        return frozenset((m, t) for m in table.links)
    if policy == "H":
        return frozenset((m, tau_l_max(table, m)) for m in table.links)
    raise ValueError("policy must be 'R' or 'H'")


def complexity_threshold_vectors(table: DelayTable, num_states: int, policy: str) -> BigPower:
    """Count of threshold-function vectors in the optimization domain."""
    cs = critical_sets_R(table) if policy == "R" else critical_sets_H(table)
    cond = conditioning_pairs(table, policy)
    exponent = sum(num_states ** len(cs.per_link[l] - cond) for l in table.links)
    return BigPower(num_states + 1, exponent)


def complexity_sample_paths(table: DelayTable, num_states: int, policy: str) -> BigPower:
    """Count of sample paths behind one conditional-expectation evaluation."""
    links = table.links
    if policy == "R":
        exponent = len(links) * tau_max(table)
    elif policy == "H":
        exponent = sum(tau_l_max(table, l) for l in links)
    else:
        raise ValueError("policy must be 'R' or 'H'")
    return BigPower(num_states, exponent) if exponent > 0 else BigPower(num_states, 0)


def worst_case_rearrange(table: DelayTable) -> DelayTable:
    """Sort each row's off-diagonal delays descending left-to-right.

    This is the arrangement that maximises the functional-evaluation count;
    it only exists when the off-diagonal delays are all distinct.
    """
    links = range(table.num_links)
    off = [table.delays[i][j] for i in links for j in links if i != j]
    if len(set(off)) != len(off):
        raise NonDistinctDelays("off-diagonal delays must be all distinct")
    rows = []
    for i in links:
        vals = sorted((table.delays[i][j] for j in links if j != i), reverse=True)
        row = []
        k = 0
        for j in links:
            if j == i:
                row.append(0)
            else:
                row.append(vals[k])
                k += 1
        rows.append(tuple(row))
    return DelayTable(tuple(rows), table.mask)


def worst_case_threshold_vectors(num_links: int, num_states: int, policy: str) -> BigPower:
    """Closed-form counts for tables already in worst-case form."""
    if policy == "R":
        exponent = sum(
            num_states ** (i * (num_links - 2) + (num_links - 1))
            for i in range(1, num_links + 1)
        )
    elif policy == "H":
        exponent = sum(num_states ** (i * (num_links - 2)) for i in range(1, num_links + 1))
    else:
        raise ValueError("policy must be 'R' or 'H'")
    return BigPower(num_states + 1, exponent)
