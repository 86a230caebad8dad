"""Deterministic random-input generation for the simulation engines.

All randomness is drawn here, chunk by chunk, from Philox streams keyed on
(seed, chunk index, purpose).  Both the scalar and the vectorized engines
consume the same arrays, so their outputs are identical by construction and
reruns with the same (config, seed) are bit-identical.
"""

from __future__ import annotations

import numpy as np

from ..channel import ChannelModel, n_step_matrix, stationary


def _rng(seed: int, chunk: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=(int(seed), int(chunk), purpose)))
    )


def _categorical(rng, cum_rows: np.ndarray) -> np.ndarray:
    """One draw per row of cumulative probabilities."""
    u = rng.random(cum_rows.shape[0])
    return (u[:, None] > cum_rows).sum(axis=1).astype(np.int64)


def _step_states(rng, model: ChannelModel, current: np.ndarray, n: int) -> np.ndarray:
    cum = np.cumsum(n_step_matrix(model, n), axis=1)
    return _categorical(rng, cum[current])


def draw_paths(models, num_slots: int, n_trials: int, seed: int, chunk: int) -> np.ndarray:
    """(n_trials, L, num_slots) state indices; slot 0 from stationary."""
    L = len(models)
    out = np.empty((n_trials, L, num_slots), dtype=np.int8)
    rng = _rng(seed, chunk, purpose=1)
    for l, model in enumerate(models):
        pi_cum = np.cumsum(stationary(model))
        out[:, l, 0] = _categorical(rng, np.broadcast_to(pi_cum, (n_trials, len(pi_cum))))
        cum = np.cumsum(model.transition, axis=1)
        for t in range(1, num_slots):
            u = rng.random(n_trials)
            out[:, l, t] = (u[:, None] > cum[out[:, l, t - 1]]).sum(axis=1)
    return out


def draw_arrivals(process, num_slots: int, n_trials: int, seed: int, chunk: int) -> np.ndarray:
    """(n_trials, L, num_slots) arrival counts."""
    rng = _rng(seed, chunk, purpose=2)
    rates = np.asarray(process.rates)[None, :, None]
    shape = (n_trials, process.num_links, num_slots)
    if process.kind == "bernoulli":
        return (rng.random(shape) < rates).astype(np.int16)
    draws = rng.poisson(np.broadcast_to(rates, shape)).astype(np.int16)
    if process.kind == "truncated_poisson":
        np.minimum(draws, process.a_max, out=draws)
    return draws


def draw_delayed_values(models, delays_per_link, n_trials: int, seed: int, chunk: int):
    """Channel states at a sparse set of delays, exactly marginalised.

    `delays_per_link[l]` is a descending list of delays ending at 0.  The
    largest delay draws from the stationary law, each following one from the
    n-step transition over the gap.  Returns {link: {delay: (n_trials,) int
    array}}.
    """
    rng = _rng(seed, chunk, purpose=3)
    out = {}
    for l, model in enumerate(models):
        delays = list(delays_per_link[l])
        if any(a <= b for a, b in zip(delays, delays[1:])):
            raise ValueError("delays must be strictly descending")
        vals = {}
        pi_cum = np.cumsum(stationary(model))
        cur = _categorical(rng, np.broadcast_to(pi_cum, (n_trials, len(pi_cum))))
        vals[delays[0]] = cur
        for prev, d in zip(delays, delays[1:]):
            cur = _step_states(rng, model, cur, prev - d)
            vals[d] = cur
        out[l] = vals
    return out
