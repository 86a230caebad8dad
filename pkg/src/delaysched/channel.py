"""Per-link discrete-time Markov channel model.

Rates live on an ordered integer state space; the chain is shared by all
links by default but every API accepts per-link models where it matters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonErgodic

ROW_SUM_TOL = 1e-12

#: Crossover probabilities of the named two-state channel profiles, from the
#: very-slow-varying to the very-fast-varying channel.
PROFILE_CROSSOVERS = {
    "VSVC": 0.1,
    "SVC": 0.3,
    "MVC": 0.5,
    "FVC": 0.7,
    "VFVC": 0.9,
}


@dataclass(frozen=True)
class ChannelProfile:
    name: str
    crossover: float

    def __post_init__(self):
        if self.name not in PROFILE_CROSSOVERS:
            raise ValueError(f"unknown channel profile {self.name!r}")
        if abs(PROFILE_CROSSOVERS[self.name] - self.crossover) > 0:
            raise ValueError(
                f"profile {self.name} requires crossover {PROFILE_CROSSOVERS[self.name]}"
            )

    @classmethod
    def named(cls, name: str) -> "ChannelProfile":
        return cls(name, PROFILE_CROSSOVERS[name])


@dataclass(frozen=True)
class ChannelModel:
    """Rate states c_1 < ... < c_M (packets/slot) and a row-stochastic matrix."""

    states: tuple[int, ...]
    transition: np.ndarray
    _pow_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        object.__setattr__(self, "states", states)
        p = np.asarray(self.transition, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] != len(states):
            raise ValueError("transition must be MxM matching the state count")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("transition entries must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > ROW_SUM_TOL):
            raise ValueError("transition rows must sum to 1 within 1e-12")
        if any(s < 0 for s in states):
            raise ValueError("states must be non-negative integers")
        if any(a >= b for a, b in zip(states, states[1:])):
            raise ValueError("states must be strictly increasing")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "transition", p)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @classmethod
    def two_state(cls, crossover: float, states=(1, 2)) -> "ChannelModel":
        q = float(crossover)
        return cls(tuple(states), np.array([[1.0 - q, q], [q, 1.0 - q]]))

    @classmethod
    def from_profile(cls, profile) -> "ChannelModel":
        if isinstance(profile, str):
            profile = ChannelProfile.named(profile)
        return cls.two_state(profile.crossover)


def n_step_matrix(model: ChannelModel, n: int) -> np.ndarray:
    """transition**n by repeated squaring; n == 0 gives the identity."""
    if n < 0:
        raise ValueError("n must be non-negative")
    cache = model._pow_cache
    got = cache.get(n)
    if got is None:
        got = np.linalg.matrix_power(model.transition, n)
        got.setflags(write=False)
        cache[n] = got
    return got


def _reachability_ok(p: np.ndarray) -> bool:
    """Irreducible and aperiodic, checked on the positive-probability digraph."""
    m = p.shape[0]
    adj = p > 0.0
    # strong connectivity via forward/backward BFS from state 0
    for mat in (adj, adj.T):
        seen = np.zeros(m, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for i in frontier:
                for j in np.nonzero(mat[i])[0]:
                    if not seen[j]:
                        seen[j] = True
                        nxt.append(int(j))
            frontier = nxt
        if not seen.all():
            return False
    # aperiodicity: gcd of return-time lengths; P^m + P^(m+1) having a full
    # positive diagonal suffices for primitive detection at these sizes
    import math

    period = 0
    reach = np.eye(m, dtype=bool)
    for step in range(1, 2 * m + 1):
        reach = reach @ adj
        if reach[0, 0]:
            period = math.gcd(period, step)
        if period == 1:
            return True
    return period == 1


def stationary(model: ChannelModel) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 by direct linear solve.

    Raises NonErgodic when the reachability check fails; power iteration is
    kept out of here on purpose (it is the independent oracle in the tests).
    """
    p = model.transition
    if not _reachability_ok(p):
        raise NonErgodic("chain is not irreducible and aperiodic")
    m = p.shape[0]
    a = p.T - np.eye(m)
    a[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    return pi


def stationary_mean_rate(model: ChannelModel) -> float:
    return float(np.dot(stationary(model), model.states))


def cond_expected_rate(model: ChannelModel, observed_state_index: int, tau: int) -> float:
    """E[C[t] | C[t - tau] = states[observed_state_index]]."""
    if not 0 <= observed_state_index < model.num_states:
        raise ValueError("observed_state_index out of range")
    row = n_step_matrix(model, tau)[observed_state_index]
    return float(np.dot(row, model.states))


class RateTable:
    """Memoised (link, delay, state) -> conditional expected rate lookups.

    Every scheduler and evaluator shares one of these so that floating-point
    ties are detected identically everywhere.
    """

    def __init__(self, models):
        self.models = tuple(models)
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    @classmethod
    def uniform(cls, model: ChannelModel, num_links: int) -> "RateTable":
        return cls([model] * num_links)

    def model(self, link: int) -> ChannelModel:
        return self.models[link]

    def rates(self, link: int, tau: int) -> np.ndarray:
        key = (link, tau)
        got = self._cache.get(key)
        if got is None:
            m = self.models[link]
            got = n_step_matrix(m, tau) @ np.asarray(m.states, dtype=float)
            got.setflags(write=False)
            self._cache[key] = got
        return got

    def rate(self, link: int, tau: int, state_index: int) -> float:
        return float(self.rates(link, tau)[state_index])


def sample_path(
    model: ChannelModel,
    length: int,
    rng: np.random.Generator,
    initial_state_index: int | None = None,
    initial_from_stationary: bool = False,
) -> np.ndarray:
    """State-index sequence of the given length, deterministic per generator."""
    if length < 1:
        raise ValueError("length must be >= 1")
    cum = np.cumsum(model.transition, axis=1)
    out = np.empty(length, dtype=np.int64)
    if initial_from_stationary:
        pi_cum = np.cumsum(stationary(model))
        out[0] = int(np.searchsorted(pi_cum, rng.random(), side="right"))
    else:
        if initial_state_index is None:
            raise ValueError("need initial_state_index or initial_from_stationary")
        out[0] = int(initial_state_index)
    u = rng.random(length - 1)
    for i in range(1, length):
        out[i] = int(np.searchsorted(cum[out[i - 1]], u[i - 1], side="right"))
    np.minimum(out, model.num_states - 1, out=out)
    return out
