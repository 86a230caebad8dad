"""Low-complexity elimination schedulers (ELDR and ERDMC variants).

Per round over the surviving links: recompute each link's masked row-max
delay, score every link by queue-weighted conditional expected rate at that
delay, protect the top scorer, collect the links whose removal would
strictly lower some survivor's delay, and eliminate one of them.  ELDR drops
the candidate with the lowest score, ERDMC the one (among those shrinking
the most rows) with the lowest score.  Ties: the protected link is the
smallest-index maximiser, the eliminated link the largest-index minimiser;
these conventions are what the exact throughput expressions assume.
"""

from __future__ import annotations

from ..channel import RateTable
from ..topology import DelayTable, InterferenceSpec
from .base import RoundRecord, ScheduleDecision, argmax_smallest_index


def _row_stats(delays, active):
    """Per surviving row: (masked row-max, count of columns attaining it).

    Removing column k strictly lowers row j's max exactly when k is the
    unique attainer, so one pass serves both the tau values and the
    elimination-candidate test.
    """
    stats = {}
    for j in active:
        row = delays[j]
        best = -1
        count = 0
        for k in active:
            if k == j:
                continue
            v = row[k]
            if v > best:
                best = v
                count = 1
            elif v == best:
                count += 1
        stats[j] = (best, count)
    return stats


def _reduced_rows(delays, active, stats, k):
    """Rows whose masked max strictly drops when link k is removed."""
    return [
        j
        for j in active
        if j != k and stats[j][1] == 1 and delays[j][k] == stats[j][0]
    ]


def run_elimination(
    delays,
    active,
    variant: str,
    rate_of,
    weight_of,
) -> tuple[int, tuple[RoundRecord, ...]]:
    """Core elimination loop over an explicit delay matrix.

    `rate_of(link, delay)` is the conditional expected rate given the link's
    realisation at that delay; `weight_of(link, delay)` the queue weight
    (1 when saturated).  Returns (winner, trace).
    """
    if variant not in ("ELDR", "ERDMC"):
        raise ValueError(f"unknown LC variant {variant!r}")
    active = sorted(active)
    if not active:
        raise ValueError("active set must be non-empty")
    if len(active) == 1:
        return active[0], ()

    trace = []
    while True:
        stats = _row_stats(delays, active)
        taus = {j: stats[j][0] for j in active}
        scores = {j: weight_of(j, taus[j]) * rate_of(j, taus[j]) for j in active}
        protected, _ = argmax_smallest_index((j, scores[j]) for j in active)

        if len(active) == 2:
            # final round: no elimination, the better-scoring link transmits
            trace.append(
                RoundRecord(
                    active=tuple(active),
                    tau=tuple(sorted(taus.items())),
                    rates=tuple(sorted(scores.items())),
                    protected=protected,
                    candidates=(),
                    eliminated=None,
                )
            )
            return protected, tuple(trace)

        reducers = {
            k: _reduced_rows(delays, active, stats, k)
            for k in active
            if k != protected
        }
        candidates = [k for k in active if k != protected and reducers.get(k)]

        if not candidates:
            trace.append(
                RoundRecord(
                    active=tuple(active),
                    tau=tuple(sorted(taus.items())),
                    rates=tuple(sorted(scores.items())),
                    protected=protected,
                    candidates=(),
                    eliminated=None,
                )
            )
            return protected, tuple(trace)

        if variant == "ELDR":
            pool = candidates
        else:
            most = max(len(reducers[k]) for k in candidates)
            pool = [k for k in candidates if len(reducers[k]) == most]
        # lowest score, tie -> largest link id
        out = None
        best = None
        for k in pool:
            if best is None or scores[k] <= best:
                best = scores[k]
                out = k

        trace.append(
            RoundRecord(
                active=tuple(active),
                tau=tuple(sorted(taus.items())),
                rates=tuple(sorted(scores.items())),
                protected=protected,
                candidates=tuple(candidates),
                eliminated=out,
            )
        )
        active = [j for j in active if j != out]


def schedule_lc(
    view,
    table: DelayTable,
    rates: RateTable,
    variant: str,
    active_set=None,
    saturated: bool = False,
) -> ScheduleDecision:
    """ELDR/ERDMC over an NSI view; queue weights use the round-masked delays."""
    active = sorted(active_set) if active_set is not None else list(table.links)

    def rate_of(link, delay):
        return rates.rate(link, delay, view.channel(link, delay))

    def weight_of(link, delay):
        if saturated or getattr(view, "saturated", False):
            return 1
        return view.queue_weight(link, delay)

    winner, trace = run_elimination(table.delays, active, variant, rate_of, weight_of)
    return ScheduleDecision(frozenset({winner}), trace)


def schedule_multi_interference(
    view,
    table: DelayTable,
    rates: RateTable,
    interference: InterferenceSpec,
    variant: str,
    saturated: bool = False,
) -> ScheduleDecision:
    """General interference sets: repeatedly run the elimination, retire the
    winner together with its interferers, until no contender remains.

    Delay entries between non-interfering pairs are zeroed first, so masked
    row-max delays only reflect transmitters that actually contend.
    """
    n = table.num_links
    delays = [list(row) for row in table.delays]
    for i in range(n):
        for j in range(n):
            if i != j and i not in interference.interferers[j]:
                delays[i][j] = 0
    scrubbed = DelayTable(tuple(tuple(row) for row in delays), table.mask)

    active = set(scrubbed.links)
    chosen = set()
    trace = []
    while active:
        decision = schedule_lc(
            view, scrubbed, rates, variant, active_set=active, saturated=saturated
        )
        w = decision.winner
        chosen.add(w)
        trace.extend(decision.trace)
        active -= {w} | set(interference.interferers[w])
    return ScheduleDecision(frozenset(chosen), tuple(trace))
