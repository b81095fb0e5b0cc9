"""Simulator for distance-oblivious ("monoculus") robots converging under occlusion."""

from .algorithms import AlgorithmId, Decision
from .engine import RunResult, SimulationParams, Trace, converged_predicate, perturb, replay_steps, run
from .metrics import RunMetrics, aggregate, compute_metrics, lemma3_bound
from .scheduler import Schedule, SchedulerModel
from .world import AxisFrame, Configuration, RobotMemory

__all__ = [
    "AlgorithmId", "AxisFrame", "Configuration", "Decision", "RobotMemory", "RunMetrics", "RunResult",
    "Schedule", "SchedulerModel", "SimulationParams", "Trace", "aggregate", "compute_metrics",
    "converged_predicate", "lemma3_bound", "perturb", "replay_steps", "run",
]
