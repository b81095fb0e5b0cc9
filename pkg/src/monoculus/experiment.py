"""Parameter sweeps over robot count and deployment side with CSV and SVG output."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algorithms import AlgorithmId
from .engine import SimulationParams, run
from .metrics import RunMetrics, compute_metrics, five_number
from .scheduler import SchedulerModel
from .svg import box_plot_svg

DEFAULT_NS = (10, 25, 50, 100)
DEFAULT_SIDES = (50.0, 100.0, 200.0)

RESULT_COLUMNS = ["algo", "scheduler", "n", "side", "trial", "seed", "converged",
                  "rounds", "work", "d_opt", "d_max", "rho", "tau"]
SUMMARY_STATS = ("min", "q1", "median", "q3", "max")


@dataclass(frozen=True)
class ExperimentSpec:
    ns: tuple[int, ...] = DEFAULT_NS
    sides: tuple[float, ...] = DEFAULT_SIDES
    trials: int = 100
    algorithms: tuple[AlgorithmId, ...] = (AlgorithmId.CONVERGE_LOCALITY,)
    scheduler: SchedulerModel = SchedulerModel.FSYNC
    seed: int = 0
    dim: int = 2
    b: float = 1.0
    c: float = 2.0
    corner_diag: bool = False
    fairness: int | None = None
    max_events: int = 10**7

    def __post_init__(self):
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))
        object.__setattr__(self, "algorithms", tuple(AlgorithmId(a) for a in self.algorithms))
        object.__setattr__(self, "scheduler", SchedulerModel(self.scheduler))
        if not self.ns or not self.sides or not self.algorithms:
            raise ValueError("an experiment needs at least one n, side and algorithm")
        if self.trials < 1:
            raise ValueError("trials must be positive")

    def cells(self):
        for algo in self.algorithms:
            for n in self.ns:
                for side in self.sides:
                    yield algo, n, side

    def params(self, algo, n: int, side: float, trial: int) -> SimulationParams:
        return SimulationParams(
            algorithm=algo, n=n, side=side, dim=self.dim, b=self.b, c=self.c,
            scheduler=self.scheduler, seed=trial_seed(self.seed, n, side, trial),
            fairness=self.fairness, corner_diag=self.corner_diag, max_events=self.max_events)


def trial_seed(base: int, n: int, side: float, trial: int) -> int:
    """Seed of one trial; independent of the algorithm so algorithms share deployments."""
    ss = np.random.SeedSequence([base & (2**64 - 1), n, int(round(side * 1000)), trial])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class TrialRow:
    algo: AlgorithmId
    scheduler: SchedulerModel
    n: int
    side: float
    trial: int
    seed: int
    converged: bool
    metrics: RunMetrics


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list[TrialRow] = field(default_factory=list)

    def cell(self, algo, n: int, side: float) -> list[TrialRow]:
        algo = AlgorithmId(algo)
        return [r for r in self.rows if r.algo is algo and r.n == n and r.side == side]

    def values(self, algo, n: int, side: float, name: str) -> list[float]:
        vals = (getattr(r.metrics, name) for r in self.cell(algo, n, side))
        return [v for v in vals if v is not None]

    def median(self, algo, n: int, side: float, name: str) -> float:
        return float(np.median(self.values(algo, n, side, name)))


def run_experiment(spec: ExperimentSpec, progress=None) -> ExperimentResult:
    """Run every (cell, trial) in a fixed order; rows come back in that order."""
    res = ExperimentResult(spec)
    for algo, n, side in spec.cells():
        for trial in range(spec.trials):
            p = spec.params(algo, n, side, trial)
            r = run(p, record_trace=False)
            res.rows.append(TrialRow(algo, spec.scheduler, n, side, trial, p.seed, r.converged,
                                     compute_metrics(r)))
        if progress is not None:
            progress(algo, n, side)
    return res


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def results_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in result.rows:
        m = r.metrics
        w.writerow([_fmt(v) for v in (r.algo.value, r.scheduler.value, r.n, r.side, r.trial, r.seed,
                                      int(r.converged), m.rounds, m.work, m.d_opt, m.d_max, m.rho, m.tau)])
    return buf.getvalue()


def summary_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["algo", "scheduler", "n", "side", "trials", "converged"]
    for name in ("rho", "tau", "rounds", "work"):
        header += [f"{name}_{s}" for s in SUMMARY_STATS]
    w.writerow(header)
    for algo, n, side in result.spec.cells():
        cell = result.cell(algo, n, side)
        row = [algo.value, result.spec.scheduler.value, n, side, len(cell), sum(r.converged for r in cell)]
        for name in ("rho", "tau", "rounds", "work"):
            vals = result.values(algo, n, side, name)
            if vals:
                s = five_number(vals).as_dict()
                row += [s[k] for k in SUMMARY_STATS]
            else:
                row += [None] * len(SUMMARY_STATS)
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def figures(result: ExperimentResult) -> dict[str, str]:
    """SVG box plots of rho and tau: one per fixed side (x = n), and per fixed n (x = side)."""
    spec = result.spec
    out = {}
    groups = []
    if len(spec.ns) > 1 or len(spec.sides) == 1:
        groups += [(f"side_{side:g}", f"side {side:g}", "robots n", [(n, side) for n in spec.ns], spec.ns)
                   for side in spec.sides]
    if len(spec.sides) > 1:
        groups += [(f"n_{n}", f"n = {n}", "side length", [(n, side) for side in spec.sides], spec.sides)
                   for n in spec.ns]
    for key, title, xlabel, cells, xs in groups:
        panels = []
        for metric in ("rho", "tau"):
            series = {algo.value: [result.values(algo, n, side, metric) for n, side in cells]
                      for algo in spec.algorithms}
            panels.append((metric, series))
        out[f"box_{key}.svg"] = box_plot_svg(
            title=f"{spec.scheduler.value.upper()}, {title}", xlabel=xlabel,
            categories=[f"{x:g}" for x in xs], panels=panels)
    return out


def write_outputs(result: ExperimentResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in [("results.csv", results_csv(result)), ("summary.csv", summary_csv(result)),
                       *sorted(figures(result).items())]:
        path = out / name
        path.write_text(text)
        written.append(path)
    return written
