"""Experiment configuration files: a TOML subset, diff-friendly.

Tables are nested arrays, scalars are key = value; `serialize` emits text
that `loads` parses back to an identical document, and the preset helpers
round-trip DelayTable / ChannelModel / ChannelProfile objects through it.
"""

from __future__ import annotations

from dataclasses import dataclass

try:
    import tomllib as _toml
except ModuleNotFoundError:  # py310
    import tomli as _toml

from .channel import ChannelModel, ChannelProfile, PROFILE_CROSSOVERS
from .errors import ConfigError
from .presets import DELAY_PRESETS, preset
from .state import ArrivalProcess
from .topology import DelayTable, InterferenceSpec
from .sim.engine import SimConfig

# ---------------------------------------------------------------------------
# writer for the subset we emit


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        escaped = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {type(v).__name__} value")


def serialize(doc: dict) -> str:
    """Emit a dict as TOML; nested dicts become sections, lists of dicts
    become repeated [[section]] blocks."""
    lines = []
    sections = []
    for key, value in doc.items():
        if isinstance(value, dict):
            sections.append((key, value))
        elif isinstance(value, (list, tuple)) and value and isinstance(value[0], dict):
            sections.append((key, value))
        else:
            lines.append(f"{key} = {_fmt_value(value)}")
    for key, value in sections:
        if isinstance(value, dict):
            lines.append("")
            lines.append(f"[{key}]")
            lines.extend(serialize(value).splitlines())
        else:
            for item in value:
                lines.append("")
                lines.append(f"[[{key}]]")
                lines.extend(serialize(item).splitlines())
    return "\n".join(line for line in lines if line is not None) + "\n"


def loads(text: str) -> dict:
    try:
        return _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc


def load_file(path) -> dict:
    with open(path, "rb") as fh:
        try:
            return _toml.load(fh)
        except _toml.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# section <-> object mapping


def table_to_section(table: DelayTable) -> dict:
    for name, rows in DELAY_PRESETS.items():
        if rows == table.delays:
            return {"preset": name}
    return {"matrix": [list(row) for row in table.delays]}


def parse_table(section: dict) -> DelayTable:
    if "preset" in section:
        x = section.get("x")
        got = preset(section["preset"], x=x)
        if not isinstance(got, DelayTable):
            raise ConfigError(f"preset {section['preset']} is not a delay table")
        return got
    if "matrix" in section:
        return DelayTable(tuple(tuple(row) for row in section["matrix"]))
    raise ConfigError("delays section needs 'preset' or 'matrix'")


def channel_to_section(channel) -> dict:
    if isinstance(channel, ChannelProfile):
        return {"profile": channel.name}
    if isinstance(channel, ChannelModel):
        if channel.num_states == 2 and channel.states == (1, 2):
            p = channel.transition
            if p[0][1] == p[1][0]:
                return {"states": [1, 2], "crossover": float(p[0][1])}
        return {
            "states": list(channel.states),
            "transition": [[float(x) for x in row] for row in channel.transition],
        }
    raise ConfigError("cannot serialize channel")


def parse_channel(section: dict) -> ChannelModel:
    if "profile" in section:
        return ChannelModel.from_profile(section["profile"])
    states = tuple(section.get("states", (1, 2)))
    if "crossover" in section:
        return ChannelModel.two_state(section["crossover"], states)
    if "transition" in section:
        return ChannelModel(states, section["transition"])
    raise ConfigError("channel section needs 'profile', 'crossover' or 'transition'")


def parse_interference(section: dict, num_links: int) -> InterferenceSpec:
    gamma = section.get("gamma", 0.0)
    if isinstance(gamma, (int, float)):
        gamma = [float(gamma)] * num_links
    if section.get("complete", True) and "interferers" not in section:
        return InterferenceSpec(
            tuple(frozenset(range(num_links)) - {l} for l in range(num_links)),
            tuple(gamma),
        )
    return InterferenceSpec(
        tuple(frozenset(s) for s in section["interferers"]), tuple(gamma)
    )


def parse_arrivals(section: dict) -> ArrivalProcess:
    return ArrivalProcess(
        kind=section.get("kind", "poisson"),
        rates=tuple(section["rates"]),
        a_max=section.get("a_max", 1),
    )


def parse_sim_config(doc: dict) -> SimConfig:
    try:
        table = parse_table(doc["delays"])
        model = parse_channel(doc.get("channel", {"profile": "VSVC"}))
        run = doc.get("run", {})
        interference = parse_interference(
            doc.get("interference", {}), table.num_links
        )
        arrivals = parse_arrivals(doc["arrivals"]) if "arrivals" in doc else None
        corr = run.get("corr_lags", ())
        corr_lags = tuple(
            (int(run.get("corr_link", 0)), int(lag)) for lag in corr
        )
        return SimConfig(
            table=table,
            models=(model,) * table.num_links,
            policy=run.get("policy", "LC-ELDR"),
            mode=run.get("mode", "saturated"),
            interference=interference,
            arrivals=arrivals,
            horizon=int(run.get("horizon", 512)),
            trials=int(run.get("trials", 100_000)),
            seed=int(run.get("seed", 0)),
            budget=float(run.get("budget", 1e9)),
            corr_lags=corr_lags,
            chunk=int(run.get("chunk", 16384)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from exc


# ---------------------------------------------------------------------------
# experiment specs


@dataclass(frozen=True)
class Experiment:
    name: str
    doc: dict  # config document, pre-sweep
    sweep_key: str | None  # dotted path, e.g. "delays.x"
    sweep_values: tuple
    methods: tuple[str, ...]  # simulation | analytic | oracle


@dataclass(frozen=True)
class ExperimentSpec:
    experiments: tuple[Experiment, ...]
    output: str


def _substitute(doc: dict, dotted: str, value) -> dict:
    out = dict(doc)
    head, _, rest = dotted.partition(".")
    if rest:
        out[head] = _substitute(dict(out.get(head, {})), rest, value)
    else:
        out[head] = value
    return out


def apply_sweep(exp: Experiment, value) -> dict:
    if exp.sweep_key is None:
        return exp.doc
    return _substitute(exp.doc, exp.sweep_key, value)


def load_experiment_spec(doc: dict) -> ExperimentSpec:
    raw = doc.get("experiment", [])
    if not raw:
        raise ConfigError("spec has no [[experiment]] blocks")
    experiments = []
    names = set()
    for item in raw:
        name = item.get("name")
        if not name:
            raise ConfigError("every experiment needs a name")
        if name in names:
            raise ConfigError(f"duplicate experiment name {name!r}")
        names.add(name)
        sweep = item.get("sweep")
        values = tuple(item.get("values", ()))
        if sweep is not None and not values:
            raise ConfigError(f"experiment {name!r}: sweep without values")
        methods = tuple(item.get("methods", ("simulation",)))
        body = {
            k: v
            for k, v in item.items()
            if k not in ("name", "sweep", "values", "methods")
        }
        experiments.append(Experiment(name, body, sweep, values or (None,), methods))
    return ExperimentSpec(tuple(experiments), doc.get("output", "out"))
