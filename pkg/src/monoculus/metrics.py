"""Performance ratios against the full-information centroid baseline.

``d_opt`` is the total distance the robots would have to walk to reach the
unit disc around the initial centroid and ``d_max`` the distance of the
farthest robot from it.  A run's work and round count are divided by them to
give ``rho`` and ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .algorithms import centroid_oracle_metrics
from .engine import RunResult, replay_steps
from .geometry import convex_hull, hull_perimeter

METRIC_FIELDS = ("d_opt", "d_max", "work", "rounds", "rho", "tau")


@dataclass(frozen=True)
class RunMetrics:
    d_opt: float
    d_max: float
    work: int
    rounds: int
    rho: float | None
    tau: float | None
    # hull perimeter at the start and after every round (epoch), planar runs only
    perimeters: tuple[float, ...] = ()


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def perimeter_series(run: RunResult) -> tuple[float, ...]:
    """Hull perimeter of the initial configuration and at the end of every round."""
    if run.initial.dim != 2:
        return ()
    out = [hull_perimeter(convex_hull(run.initial.positions))]
    last_round, last_pos = 0, run.initial.positions
    for step in replay_steps(run):
        # rounds whose configuration did not change still get an entry
        while last_round < step.round:
            out.append(hull_perimeter(convex_hull(last_pos)))
            last_round += 1
        last_pos = step.after
    if run.events:
        out.append(hull_perimeter(convex_hull(last_pos)))
    return tuple(out)


def compute_metrics(run: RunResult, initial=None, *, perimeters: bool = False) -> RunMetrics:
    """Metrics of one run; ``initial`` defaults to the run's own starting configuration."""
    init = run.initial if initial is None else initial
    d_opt, d_max = centroid_oracle_metrics(init)
    return RunMetrics(
        d_opt=d_opt, d_max=d_max, work=run.work, rounds=run.rounds,
        rho=_ratio(run.work, d_opt), tau=_ratio(run.rounds, d_max),
        perimeters=perimeter_series(run) if perimeters else ())


def lemma3_bound(n: int, b: float) -> float:
    """Guaranteed hull-perimeter decrease per epoch when a robot sits near the sharpest corner."""
    if n < 3:
        raise ValueError("the perimeter bound needs n >= 3")
    if b <= 0:
        raise ValueError("step size must be positive")
    return b * (1.0 - math.sqrt((1.0 + math.cos(2.0 * math.pi / n)) / 2.0))


@dataclass(frozen=True)
class FiveNumber:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    count: int

    def as_dict(self) -> dict:
        return {"min": self.minimum, "q1": self.q1, "median": self.median,
                "q3": self.q3, "max": self.maximum, "count": self.count}


def five_number(values: Iterable[float]) -> FiveNumber:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("cannot summarise an empty sample")
    q = np.percentile(v, [0, 25, 50, 75, 100])
    return FiveNumber(*(float(x) for x in q), count=int(v.size))


def aggregate(metrics: Sequence[RunMetrics]) -> dict[str, FiveNumber | None]:
    """Five-number summary per metric; undefined ratios are left out of their sample."""
    if not metrics:
        raise ValueError("need at least one run")
    out = {}
    for name in METRIC_FIELDS:
        vals = [getattr(m, name) for m in metrics if getattr(m, name) is not None]
        out[name] = five_number(vals) if vals else None
    return out
