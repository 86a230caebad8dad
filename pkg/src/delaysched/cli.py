"""Command-line entry points."""

from __future__ import annotations

import csv
import sys

import click

from . import analysis, experiments
from .channel import RateTable
from .config import (
    load_experiment_spec,
    load_file,
    parse_sim_config,
    serialize,
)
from .errors import BudgetExceeded, ConfigError, UnknownPreset
from .policies import exact_saturated_throughput
from .presets import DELAY_PRESETS, PRESET_NAMES, preset
from .sim.engine import run_trials
from .topology import (
    complexity_sample_paths,
    complexity_threshold_vectors,
    tau_max,
)


@click.group(invoke_without_command=True)
@click.option("--list-presets", is_flag=True, help="List preset names and exit.")
@click.pass_context
def main(ctx, list_presets):
    """Scheduling experiments under heterogeneously delayed NSI."""
    if list_presets:
        for name in PRESET_NAMES:
            click.echo(name)
        ctx.exit(0)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@main.command()
@click.argument("spec_file", type=click.Path(exists=True))
@click.option("--out", default=None, help="Output directory.")
@click.option("--seed", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--budget", type=float, default=None)
@click.option("--workers", type=int, default=2)
def simulate(spec_file, out, seed, trials, budget, workers):
    """Run the experiments in SPEC_FILE; one CSV per experiment."""
    try:
        spec = load_experiment_spec(load_file(spec_file))
        results = experiments.run_experiment(
            spec, out_dir=out, workers=workers, seed=seed, trials=trials, budget=budget
        )
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    for r in results:
        click.echo(f"{r['experiment']}: {r['rows']} rows -> {r['csv']}")
        for p in r["problems"]:
            click.echo(f"  skipped: {p}", err=True)


@main.command()
@click.argument("config_file", type=click.Path(exists=True))
@click.option("--out", default="-", help="CSV path ('-' for stdout).")
@click.option("--oracle/--no-oracle", default=True, help="Also run the enumeration oracle.")
@click.option("--budget", type=float, default=None)
def analyze(config_file, out, oracle, budget):
    """Exact analytical metrics for one configuration."""
    try:
        doc = load_file(config_file)
        if budget is not None:
            doc.setdefault("run", {})["budget"] = budget
        cfg = parse_sim_config(doc)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    config_id = doc.get("name", config_file)
    rows = []
    try:
        rows.extend(
            (config_id, policy, metric, value, method)
            for (_, policy, metric, value, _, method) in experiments._analytic_rows(
                "", cfg, doc
            )
        )
        if oracle:
            rows.extend(
                (config_id, policy, metric, value, method)
                for (_, policy, metric, value, _, method) in experiments._oracle_rows(
                    "", cfg
                )
            )
    except BudgetExceeded as exc:
        raise click.ClickException(str(exc))
    fh = sys.stdout if out == "-" else open(out, "w", newline="")
    try:
        w = csv.writer(fh)
        w.writerow(("config_id", "policy", "metric", "value", "method"))
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


@main.command()
@click.option("--preset", "preset_name", default=None, help="Delay-table preset.")
@click.option("--x", type=int, default=None, help="Parameter for TABLE3.")
@click.option("--states", type=int, default=2, help="Number of channel states.")
@click.option("--policy", type=click.Choice(["R", "H"]), default="R")
def complexity(preset_name, x, states, policy):
    """Threshold-vector and sample-path counts for a delay table."""
    if preset_name is None:
        raise click.ClickException("--preset is required")
    try:
        table = preset(preset_name, x=x)
    except UnknownPreset as exc:
        raise click.ClickException(str(exc))
    vectors = complexity_threshold_vectors(table, states, policy)
    paths = complexity_sample_paths(table, states, policy)
    click.echo(f"policy {policy} on {preset_name}: tau_max={tau_max(table)}")
    click.echo(f"threshold vectors: {vectors} (~1e{float(vectors.log10()):.1f})")
    click.echo(f"sample paths: {paths} (~1e{float(paths.log10()):.1f})")


@main.command("presets")
@click.option("--show", default=None, help="Print one preset's definition.")
@click.option("--experiment", "figure", default=None,
              help="Emit a ready experiment spec (fig1, fig2, fig3, fig6, fig7c).")
@click.option("--out", default="-", help="Where to write the spec TOML.")
def presets_cmd(show, figure, out):
    """List presets, show one, or emit a figure experiment spec."""
    if figure is not None:
        try:
            doc = experiments.figure_spec(figure)
        except ValueError as exc:
            raise click.ClickException(str(exc))
        text = serialize(doc)
        if out == "-":
            click.echo(text, nl=False)
        else:
            with open(out, "w") as fh:
                fh.write(text)
        return
    if show is not None:
        try:
            got = preset(show, x=1 if show.startswith("TABLE3") else None)
        except UnknownPreset as exc:
            raise click.ClickException(str(exc))
        click.echo(repr(got))
        return
    for name in PRESET_NAMES:
        click.echo(name)


@main.command()
@click.option("--links", type=int, default=20)
@click.option("--repeats", type=int, default=50)
def bench(links, repeats):
    """Time one elimination-policy invocation (order-of-magnitude check)."""
    seconds = experiments.bench_lc(num_links=links, repeats=repeats)
    click.echo(f"schedule_lc on {links} links: {seconds * 1e6:.1f} us per call")


@main.command()
@click.argument("config_file", type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--trials", type=int, default=None)
def run(config_file, seed, trials):
    """Run one simulation config and print its metrics."""
    try:
        doc = load_file(config_file)
        run_section = doc.setdefault("run", {})
        if seed is not None:
            run_section["seed"] = seed
        if trials is not None:
            run_section["trials"] = trials
        cfg = parse_sim_config(doc)
    except ConfigError as exc:
        raise click.ClickException(str(exc))
    m = run_trials(cfg)
    click.echo(
        f"{m.policy} ({m.mode}, {m.trials} trials, seed {m.seed}): "
        f"throughput {m.mean_throughput:.6f} +- {m.throughput_stderr:.6f}"
    )
    if m.mean_packet_delay is not None:
        click.echo(
            f"mean packet delay {m.mean_packet_delay:.4f} slots"
            + (f" +- {m.delay_stderr:.4f}" if m.delay_stderr else "")
        )
    for (link, lag), v in sorted(m.correlations.items()):
        click.echo(f"corr(Q{link}[t], Q{link}[t-{lag}]) = {v:.4f}")


if __name__ == "__main__":
    main()
