from .base import HistoryView, MappingView, RoundRecord, ScheduleDecision
from .lc import run_elimination, schedule_lc, schedule_multi_interference
from .simple import (
    current_rate,
    schedule_dqic,
    schedule_ic,
    schedule_instantaneous,
    schedule_o,
)
from .threshold import (
    ThresholdProblem,
    ThresholdScheduler,
    ThresholdVector,
    check_budget,
    exact_saturated_throughput,
    schedule_threshold_optimal,
    threshold_representatives,
)

__all__ = [
    "HistoryView",
    "MappingView",
    "RoundRecord",
    "ScheduleDecision",
    "run_elimination",
    "schedule_lc",
    "schedule_multi_interference",
    "current_rate",
    "schedule_dqic",
    "schedule_ic",
    "schedule_instantaneous",
    "schedule_o",
    "ThresholdProblem",
    "ThresholdScheduler",
    "ThresholdVector",
    "check_budget",
    "exact_saturated_throughput",
    "schedule_threshold_optimal",
    "threshold_representatives",
]
