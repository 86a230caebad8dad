"""Exhaustively optimal threshold scheduling (the R and H policies).

Step 1 maximises the queue-weighted sum of conditional expected rates over
every threshold-function vector; step 2 lets each link transmit iff its
current rate clears its own function's value at the observed critical NSI.
R conditions everything at the network-wide maximum delay, H at each
link's own maximum delay; that is the only difference between them.

The optimizer is algebraically identical to enumerating every vector but is
organised as an exact decomposition: realisations of the free critical
variables are enumerated once, threshold tables of links that see *all*
free variables decouple per realisation, and only the remaining links'
tables are enumerated outright.  Ties resolve to the first vector in the
canonical order: entries of the outer-enumerated links (link ascending,
domain index ascending) are the most significant digits, then the
per-realisation choices of the decoupled links (realisation index
ascending, link ascending), every digit running over representative
thresholds in ascending order.  A test pins this against a literal
enumeration on small instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import mpmath
import numpy as np

from ..channel import RateTable, n_step_matrix, stationary
from ..errors import BudgetExceeded
from ..topology import (
    DelayTable,
    InterferenceSpec,
    complexity_sample_paths,
    complexity_threshold_vectors,
    conditioning_pairs,
    critical_sets_H,
    critical_sets_R,
    tau_l_max,
    tau_max,
)
from .base import ScheduleDecision


def threshold_representatives(states) -> tuple[float, ...]:
    """The C+1 threshold values worth considering: below the lowest rate,
    between consecutive rates, above the highest."""
    reps = [states[0] - 0.5]
    reps += [(a + b) / 2.0 for a, b in zip(states, states[1:])]
    reps.append(states[-1] + 0.5)
    return tuple(reps)


def check_budget(table: DelayTable, num_states: int, policy: str, budget) -> None:
    vectors = complexity_threshold_vectors(table, num_states, policy)
    paths = complexity_sample_paths(table, num_states, policy)
    with mpmath.workdps(50):
        total = vectors.log10() + paths.log10()
        if total > mpmath.log10(budget):
            raise BudgetExceeded(
                f"{vectors} threshold vectors x {paths} sample paths exceed budget {budget}",
                counts=(vectors, paths),
            )


@dataclass(frozen=True)
class ThresholdVector:
    """Optimal threshold tables over the free critical variables.

    `tables[l]` maps the domain index of link l's free variables (base-C
    digits in `free_vars_of[l]` order) to a representative threshold.
    """

    policy: str
    free_vars: tuple[tuple[int, int], ...]
    free_vars_of: dict
    tables: dict
    objective: float


class ThresholdProblem:
    """Everything static about one (table, channel, interference, policy)."""

    def __init__(self, table: DelayTable, rates: RateTable, interference: InterferenceSpec, policy: str):
        if table.mask:
            raise ValueError("threshold policies run on unmasked tables")
        if policy not in ("R", "H"):
            raise ValueError("policy must be 'R' or 'H'")
        self.table = table
        self.rates = rates
        self.interference = interference
        self.policy = policy
        self.links = table.links
        self.num_links = len(self.links)

        cs = critical_sets_R(table) if policy == "R" else critical_sets_H(table)
        self.cond = {}
        for m in self.links:
            self.cond[m] = tau_max(table) if policy == "R" else tau_l_max(table, m)
        cond_pairs = conditioning_pairs(table, policy)
        self.free_vars = tuple(sorted(cs.network - cond_pairs))
        self.var_index = {v: i for i, v in enumerate(self.free_vars)}
        self.free_vars_of = {
            l: tuple(v for v in self.free_vars if v in (cs.per_link[l] - cond_pairs))
            for l in self.links
        }

        m0 = rates.model(self.links[0])
        self.num_states = m0.num_states
        for l in self.links:
            if rates.model(l).num_states != self.num_states:
                raise ValueError("threshold policies need a common state count")
        self.reps = {l: threshold_representatives(rates.model(l).states) for l in self.links}
        self.num_reps = self.num_states + 1

    # -- realisation bookkeeping ------------------------------------------

    def realisations(self):
        """All joint assignments of the free critical variables."""
        c = self.num_states
        return itertools.product(range(c), repeat=len(self.free_vars))

    def domain_index(self, link: int, z) -> int:
        idx = 0
        for v in self.free_vars_of[link]:
            idx = idx * self.num_states + z[self.var_index[v]]
        return idx

    def domain_size(self, link: int) -> int:
        return self.num_states ** len(self.free_vars_of[link])

    def _chain(self, link: int):
        """Free delays of this link, descending from its conditioning delay."""
        return sorted((d for (m, d) in self.free_vars if m == link), reverse=True)

    def path_weights(self, cond_values):
        """For every realisation z: (base weight, per-link tail row over the
        current rates).  The base covers the conditioning-to-last-free-var
        chain, the tail row the final hop to slot t."""
        out = []

        def step(link, n):
            return n_step_matrix(self.rates.model(link), n)

        for z in self.realisations():
            base = 1.0
            tails = []
            for l in self.links:
                prev_d = self.cond[l]
                prev_s = cond_values[l]
                for d in self._chain(l):
                    s = z[self.var_index[(l, d)]]
                    base *= float(step(l, prev_d - d)[prev_s, s])
                    prev_d, prev_s = d, s
                if prev_d == 0:
                    row = np.zeros(self.num_states)
                    row[prev_s] = 1.0
                else:
                    row = np.asarray(step(l, prev_d)[prev_s], dtype=float)
                tails.append(row)
            out.append((z, base, tails))
        return out

    # -- objective ---------------------------------------------------------

    def _payoff_table(self, weights):
        """payoff[yidx, tidx] = sum_l w_l c_l 1{c_l >= t_l} (gamma + (1-gamma) prod...)

        y runs over joint current rates, t over joint representative choices.
        """
        c = self.num_states
        nl = self.num_links
        states = [self.rates.model(l).states for l in self.links]
        gamma = self.interference.gamma
        inter = self.interference.interferers
        ys = list(itertools.product(range(c), repeat=nl))
        ts = list(itertools.product(range(self.num_reps), repeat=nl))
        table = np.zeros((len(ys), len(ts)))
        for yi, y in enumerate(ys):
            rate = [states[i][y[i]] for i in range(nl)]
            for ti, t in enumerate(ts):
                on = [rate[i] >= self.reps[self.links[i]][t[i]] for i in range(nl)]
                val = 0.0
                for i, l in enumerate(self.links):
                    if not on[i]:
                        continue
                    clear = 1.0
                    for m in inter[l]:
                        mi = self.links.index(m)
                        if on[mi]:
                            clear = 0.0
                            break
                    val += weights[i] * rate[i] * (gamma[l] + (1.0 - gamma[l]) * clear)
                table[yi, ti] = val
        return ys, ts, table

    def optimize(self, weights, cond_values, budget=None) -> ThresholdVector:
        """Exact argmax over threshold vectors for the given common NSI."""
        if budget is not None:
            check_budget(self.table, self.num_states, self.policy, budget)
        c = self.num_states
        nl = self.num_links
        nrep = self.num_reps

        ys, ts, payoff = self._payoff_table(weights)
        tidx = {t: i for i, t in enumerate(ts)}
        zinfo = self.path_weights(cond_values)

        # G[zi, t1..tL]: conditional contribution of realisation z under the
        # joint threshold choice
        g = np.zeros((len(zinfo),) + (nrep,) * nl)
        for zi, (z, base, tails) in enumerate(zinfo):
            for yi, y in enumerate(ys):
                w = base
                for i in range(nl):
                    w *= tails[i][y[i]]
                if w == 0.0:
                    continue
                g[zi] += w * payoff[yi].reshape((nrep,) * nl)
        zindex = {z: zi for zi, (z, _, _) in enumerate(zinfo)}

        all_free = self.free_vars
        full = [l for l in self.links if self.free_vars_of[l] == all_free]
        partial = [l for l in self.links if self.free_vars_of[l] != all_free]
        li = {l: i for i, l in enumerate(self.links)}

        best_val = None
        best_tables = None

        partial_domains = [self.domain_size(l) for l in partial]
        outer = itertools.product(
            *(itertools.product(range(nrep), repeat=d) for d in partial_domains)
        )
        for assignment in outer:
            pi = dict(zip(partial, assignment))
            total = 0.0
            chosen = {l: np.zeros(self.domain_size(l), dtype=np.int64) for l in full}
            for z in self.realisations():
                zi = zindex[z]
                slice_idx = [slice(None)] * nl
                for l in partial:
                    slice_idx[li[l]] = pi[l][self.domain_index(l, z)]
                sub = g[zi][tuple(slice_idx)]
                flat = int(np.argmax(sub))
                total += float(sub.flat[flat])
                if full:
                    picks = np.unravel_index(flat, sub.shape)
                    for k, l in enumerate(full):
                        chosen[l][self.domain_index(l, z)] = picks[k]
            if best_val is None or total > best_val:
                best_val = total
                tables = {}
                for l in partial:
                    tables[l] = np.asarray(
                        [self.reps[l][r] for r in pi[l]], dtype=float
                    )
                for l in full:
                    tables[l] = np.asarray(
                        [self.reps[l][r] for r in chosen[l]], dtype=float
                    )
                best_tables = tables

        return ThresholdVector(
            policy=self.policy,
            free_vars=self.free_vars,
            free_vars_of=self.free_vars_of,
            tables=best_tables,
            objective=float(best_val),
        )


class ThresholdScheduler:
    """Per-slot R/H scheduling with memoised step-1 optimisations.

    Step 1 only depends on the queue weights and the conditioning
    realisation, so decisions cache on exactly that key.
    """

    def __init__(
        self,
        table: DelayTable,
        rates: RateTable,
        interference: InterferenceSpec,
        policy: str,
        budget: float = 1e9,
    ):
        self.table = table
        self.rates = rates
        self.policy = policy
        self.budget = budget
        self.single_link = table.num_links == 1
        if not self.single_link:
            check_budget(table, rates.model(table.links[0]).num_states, policy, budget)
            self.problem = ThresholdProblem(table, rates, interference, policy)
        self._cache = {}

    def optimum(self, weights, cond_values) -> ThresholdVector:
        key = (tuple(weights), tuple(cond_values))
        got = self._cache.get(key)
        if got is None:
            got = self.problem.optimize(weights, cond_values)
            self._cache[key] = got
        return got

    def decide(self, view, saturated: bool = False) -> ScheduleDecision:
        if self.single_link:
            return ScheduleDecision(frozenset({self.table.links[0]}))
        p = self.problem
        cond_values = tuple(view.channel(m, p.cond[m]) for m in p.links)
        if saturated or getattr(view, "saturated", False):
            weights = (1,) * p.num_links
        else:
            weights = tuple(view.queue_weight(m, p.cond[m]) for m in p.links)
        opt = self.optimum(weights, cond_values)

        transmit = set()
        for l in p.links:
            z_l = tuple(view.channel(m, d) for (m, d) in p.free_vars_of[l])
            idx = 0
            for s in z_l:
                idx = idx * p.num_states + s
            threshold = opt.tables[l][idx]
            rate = p.rates.model(l).states[view.channel(l, 0)]
            if rate >= threshold:
                transmit.add(l)
        return ScheduleDecision(frozenset(transmit))


def schedule_threshold_optimal(
    view,
    table: DelayTable,
    rates: RateTable,
    variant: str,
    budget: float = 1e9,
    interference: InterferenceSpec | None = None,
    saturated: bool = False,
) -> ScheduleDecision:
    """One-shot convenience wrapper; reuse ThresholdScheduler in loops."""
    inter = interference or InterferenceSpec.complete(table.num_links)
    return ThresholdScheduler(table, rates, inter, variant, budget).decide(
        view, saturated=saturated
    )


def exact_saturated_throughput(
    table: DelayTable,
    rates: RateTable,
    variant: str,
    interference: InterferenceSpec | None = None,
    budget: float = 1e9,
) -> float:
    """Stationary expectation of the step-1 optimum with unit weights.

    In saturated operation the delivered packets per slot, conditioned on
    the common NSI, equal the optimised objective, so averaging it over the
    stationary law of the conditioning symbols is exact.
    """
    if table.num_links == 1:
        m = rates.model(table.links[0])
        return float(np.dot(stationary(m), m.states))
    inter = interference or InterferenceSpec.complete(table.num_links)
    check_budget(table, rates.model(table.links[0]).num_states, variant, budget)
    problem = ThresholdProblem(table, rates, inter, variant)
    weights = (1,) * problem.num_links
    pis = {l: stationary(rates.model(l)) for l in problem.links}
    total = 0.0
    for cond in itertools.product(range(problem.num_states), repeat=problem.num_links):
        prob = 1.0
        for i, l in enumerate(problem.links):
            prob *= float(pis[l][cond[i]])
        if prob == 0.0:
            continue
        total += prob * problem.optimize(weights, cond).objective
    return total
