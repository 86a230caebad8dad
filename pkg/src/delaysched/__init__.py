"""Scheduling wireless links under heterogeneously delayed network-state
information: channel models, delay topologies, eight scheduling policies,
exact analytical evaluators, and a seeded Monte-Carlo simulator."""

from .channel import ChannelModel, ChannelProfile, RateTable
from .state import ArrivalProcess
from .topology import BigPower, DelayTable, InterferenceSpec
from .sim.engine import SimConfig, SimMetrics, run_trials, stability_probe

__all__ = [
    "ChannelModel",
    "ChannelProfile",
    "RateTable",
    "ArrivalProcess",
    "BigPower",
    "DelayTable",
    "InterferenceSpec",
    "SimConfig",
    "SimMetrics",
    "run_trials",
    "stability_probe",
]

__version__ = "0.1.0"
