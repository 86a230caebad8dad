"""Experiment driver: sweeps, method dispatch, CSV/JSON output."""

from __future__ import annotations

import csv
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

from . import analysis
from .channel import PROFILE_CROSSOVERS, RateTable
from .config import (
    Experiment,
    ExperimentSpec,
    apply_sweep,
    parse_sim_config,
)
from .errors import BudgetExceeded
from .policies import exact_saturated_throughput, schedule_lc, MappingView
from .presets import md
from .sim.engine import run_trials
from .topology import InterferenceSpec, tau_max

CSV_COLUMNS = ("sweep_value", "policy", "metric", "value", "stderr", "method")


def _atomic_write(path: str, write_fn) -> None:
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _simulation_rows(sweep_value, cfg):
    metrics = run_trials(cfg)
    rows = [
        (sweep_value, cfg.policy, "throughput", metrics.mean_throughput,
         metrics.throughput_stderr, "simulation")
    ]
    if metrics.mean_packet_delay is not None:
        rows.append(
            (sweep_value, cfg.policy, "mean_delay", metrics.mean_packet_delay,
             metrics.delay_stderr or 0.0, "simulation")
        )
    for (link, lag), value in sorted(metrics.correlations.items()):
        rows.append(
            (sweep_value, cfg.policy, f"corr_q{link}_lag{lag}", value, 0.0,
             "simulation")
        )
    return rows


def _analytic_rows(sweep_value, cfg, doc):
    rows = []
    policy = cfg.policy
    if cfg.mode == "saturated":
        if policy in ("LC-ELDR", "LC-ERDMC"):
            v = analysis.analytic_saturated_throughput(
                cfg.table, cfg.models, policy.split("-")[1], budget=cfg.budget
            )
        elif policy == "O":
            v = analysis.analytic_o_throughput(cfg.table, cfg.models)
        elif policy == "IC":
            v = analysis.ic_upper_bound(cfg.models)
        elif policy in ("R", "H"):
            v = exact_saturated_throughput(
                cfg.table, RateTable(cfg.models), policy,
                interference=cfg.interference, budget=cfg.budget,
            )
        else:
            return rows
        rows.append((sweep_value, policy, "throughput", v, 0.0, "analytic"))
        return rows
    # queued: sample-based evaluation of the exact delay expression
    run = doc.get("run", {})
    samples = analysis.generate_samples(
        cfg.models,
        cfg.arrivals,
        horizon=cfg.horizon,
        t_max=tau_max(cfg.table),
        count=int(run.get("samples", 100)),
        seed=cfg.seed + 7_777,
        typical=bool(run.get("typical", True)),
        eps=float(run.get("typical_eps", 0.05)),
    )
    v = analysis.analytic_mean_delay(cfg, samples)
    rows.append((sweep_value, policy, "mean_delay", v, 0.0, "analytic"))
    return rows


def _oracle_rows(sweep_value, cfg):
    if cfg.mode != "saturated" or cfg.policy not in ("LC-ELDR", "LC-ERDMC"):
        return []
    v = analysis.oracle_saturated_throughput(
        cfg.table, cfg.models, cfg.policy.split("-")[1], budget=cfg.budget
    )
    return [(sweep_value, cfg.policy, "throughput", v, 0.0, "oracle")]


def run_one_experiment(exp: Experiment, out_dir: str, overrides: dict) -> dict:
    rows = []
    problems = []
    for value in exp.sweep_values:
        doc = apply_sweep(exp, value)
        run = dict(doc.get("run", {}))
        run.update({k: v for k, v in overrides.items() if v is not None})
        doc = dict(doc, run=run)
        cfg = parse_sim_config(doc)
        sweep_value = "" if value is None else value
        for method in exp.methods:
            try:
                if method == "simulation":
                    rows.extend(_simulation_rows(sweep_value, cfg))
                elif method == "analytic":
                    rows.extend(_analytic_rows(sweep_value, cfg, doc))
                elif method == "oracle":
                    rows.extend(_oracle_rows(sweep_value, cfg))
                else:
                    raise ValueError(f"unknown method {method!r}")
            except BudgetExceeded as exc:
                problems.append(f"{exp.name}@{sweep_value}/{method}: {exc}")
    path = os.path.join(out_dir, f"{exp.name}.csv")

    def write(fh):
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)

    _atomic_write(path, write)
    return {"experiment": exp.name, "csv": path, "rows": len(rows), "problems": problems}


def run_experiment(spec: ExperimentSpec, out_dir=None, workers: int = 2, **overrides):
    """Run every experiment in the spec; one CSV each plus a JSON summary.

    Budget errors are reported per experiment without aborting the batch.
    """
    out = out_dir or spec.output
    os.makedirs(out, exist_ok=True)
    results = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [
            pool.submit(run_one_experiment, exp, out, overrides)
            for exp in spec.experiments
        ]
        for f in futures:
            results.append(f.result())
    summary = {
        "experiments": results,
        "overrides": {k: v for k, v in overrides.items() if v is not None},
    }
    _atomic_write(
        os.path.join(out, "summary.json"), lambda fh: json.dump(summary, fh, indent=2)
    )
    return results


# ---------------------------------------------------------------------------
# built-in experiment specs mirroring the headline figures


def _base(channel, delays, run, **extra):
    doc = {"channel": channel, "delays": delays, "run": run}
    doc.update(extra)
    return doc


def figure_spec(name: str, trials: int | None = None, seed: int = 0) -> dict:
    """Ready-to-run experiment documents for the standard comparisons."""
    if name == "fig1":
        t = trials or 2000
        exps = []
        for policy in ("DQIC1", "DQIC2", "LC-ELDR"):
            exps.append(
                dict(
                    name=f"fig1-{policy.lower()}",
                    sweep="delays.x",
                    values=list(range(1, 11)),
                    methods=["simulation"],
                    channel={"crossover": 0.1},
                    delays={"preset": "TABLE3"},
                    arrivals={"kind": "poisson", "rates": [0.25, 0.25]},
                    run={"policy": policy, "mode": "queued", "horizon": 512,
                         "trials": t, "seed": seed},
                )
            )
        for policy in ("R", "H"):
            exps.append(
                dict(
                    name=f"fig1-{policy.lower()}",
                    sweep="delays.x",
                    values=[1, 2, 3],
                    methods=["simulation"],
                    channel={"crossover": 0.1},
                    delays={"preset": "TABLE3"},
                    arrivals={"kind": "poisson", "rates": [0.25, 0.25]},
                    run={"policy": policy, "mode": "queued", "horizon": 512,
                         "trials": min(t, 500), "seed": seed, "budget": 1e9},
                )
            )
        return {"output": "out/fig1", "experiment": exps}
    if name == "fig2":
        t = trials or 100_000
        exps = []
        for policy in ("R", "H", "LC-ELDR", "LC-ERDMC", "O", "IC"):
            exps.append(
                dict(
                    name=f"fig2-{policy.lower()}",
                    sweep="channel.profile",
                    values=list(PROFILE_CROSSOVERS),
                    methods=["simulation"],
                    channel={"profile": "VSVC"},
                    delays={"preset": "VSD3"},
                    run={"policy": policy, "mode": "saturated", "trials": t,
                         "seed": seed, "budget": 1e13},
                )
            )
        return {"output": "out/fig2", "experiment": exps}
    if name == "fig3":
        t = trials or 1_000_000
        exps = []
        for policy in ("LC-ELDR", "LC-ERDMC", "O", "IC"):
            methods = ["simulation", "analytic"]
            exps.append(
                dict(
                    name=f"fig3-{policy.lower()}",
                    sweep="delays.preset",
                    values=["VSD3", "SD", "MD", "LD", "VLD"],
                    methods=methods,
                    channel={"profile": "VSVC"},
                    delays={"preset": "VSD3"},
                    run={"policy": policy, "mode": "saturated", "trials": t,
                         "seed": seed},
                )
            )
        return {"output": "out/fig3", "experiment": exps}
    if name == "fig6":
        t = trials or 20_000
        exps = []
        for policy in ("DQIC1", "DQIC2"):
            exps.append(
                dict(
                    name=f"fig6-{policy.lower()}",
                    sweep="delays.x",
                    values=list(range(1, 11)),
                    methods=["simulation", "analytic"],
                    channel={"crossover": 0.1},
                    delays={"preset": "TABLE3"},
                    arrivals={"kind": "poisson", "rates": [0.25, 0.25]},
                    run={"policy": policy, "mode": "queued", "horizon": 2000,
                         "trials": t, "seed": seed, "samples": 100},
                )
            )
        return {"output": "out/fig6", "experiment": exps}
    if name == "fig7c":
        t = trials or 20_000
        exps = []
        for policy, lags in (("DQIC1", list(range(2, 11))), ("DQIC2", [1])):
            exps.append(
                dict(
                    name=f"fig7c-{policy.lower()}",
                    methods=["simulation"],
                    channel={"crossover": 0.1},
                    delays={"preset": "TABLE3", "x": 2},
                    arrivals={"kind": "poisson", "rates": [0.25, 0.25]},
                    run={"policy": policy, "mode": "queued", "horizon": 2048,
                         "trials": t, "seed": seed, "corr_link": 0,
                         "corr_lags": lags},
                )
            )
        return {"output": "out/fig7c", "experiment": exps}
    raise ValueError(f"unknown figure spec {name!r}")


def bench_lc(num_links: int = 20, repeats: int = 50, seed: int = 1) -> float:
    """Seconds per elimination-policy invocation on a medium-delay table."""
    import numpy as np

    rng = np.random.default_rng(seed)
    if num_links <= 10:
        table = md(num_links)
    else:
        m = rng.integers(1, 13, size=(num_links, num_links))
        np.fill_diagonal(m, 0)
        from .topology import DelayTable

        table = DelayTable(tuple(tuple(int(x) for x in row) for row in m))
    from .channel import ChannelModel

    model = ChannelModel.two_state(0.1)
    rates = RateTable.uniform(model, num_links)
    delays = sorted({d for row in table.delays for d in row})
    channels = {}
    for l in range(num_links):
        for d in delays:
            channels[(l, d)] = int(rng.integers(0, 2))
    view = MappingView(channels, saturated=True)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        schedule_lc(view, table, rates, "ELDR")
        best = min(best, time.perf_counter() - t0)
    return best
