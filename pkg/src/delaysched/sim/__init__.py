from .engine import SimConfig, SimMetrics, run_trials, stability_probe

__all__ = ["SimConfig", "SimMetrics", "run_trials", "stability_probe"]
