"""Configurations on which a naive direction-only strategy grows the convex hull.

A fixture is a small, slightly perturbed square with a few robots inside.
Moving toward the median sighting, or along the bisector of the sightings,
makes hull corners overshoot past the old hull in one synchronous round.
LD on the same layout never does.  Fixtures are re-verified whenever they are
loaded; nothing about them is taken on trust.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .algorithms import AlgorithmId
from .engine import SimulationParams, run
from .geometry import convex_hull, hull_area
from .world import Configuration, read_config_csv, write_config_csv

STRATEGIES = (AlgorithmId.NAIVE_MEDIAN, AlgorithmId.NAIVE_ANGLE_BISECTOR)
AREA_MARGIN = 1e-9
DEFAULT_BUDGET = 10_000


class SearchExhausted(RuntimeError):
    pass


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class Counterexample:
    strategy: AlgorithmId
    before: Configuration
    after: Configuration
    area_before: float
    area_after: float

    @property
    def grows(self) -> bool:
        return self.area_after > self.area_before + AREA_MARGIN


def fsync_round(config: Configuration, algorithm, b: float = 1.0, c: float = 2.0) -> Configuration:
    """Configuration after one fully synchronous round of ``algorithm``."""
    params = SimulationParams(algorithm=algorithm, b=b, c=c, max_events=1)
    return run(params, config, record_trace=False).final


def evaluate(config: Configuration, strategy, b: float = 1.0, c: float = 2.0) -> Counterexample:
    after = fsync_round(config, strategy, b, c)
    return Counterexample(AlgorithmId(strategy), config, after,
                          hull_area(convex_hull(config.positions)), hull_area(convex_hull(after.positions)))


def candidate(rng: np.random.Generator, b: float = 1.0) -> Configuration:
    """A jittered square of side 0.3b..3b with one to three robots in its middle half."""
    s = rng.uniform(0.3, 3.0) * b
    corners = np.array([[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]]) + rng.uniform(-0.15, 0.15, (4, 2)) * s
    inner = rng.uniform(0.25 * s, 0.75 * s, (int(rng.integers(1, 4)), 2))
    return Configuration(np.vstack([corners, inner]))


def search(strategy, seed: int = 0, budget: int = DEFAULT_BUDGET, b: float = 1.0, c: float = 2.0) -> Counterexample:
    strategy = AlgorithmId(strategy)
    if strategy not in STRATEGIES:
        raise ValueError(f"no counterexample search for {strategy.value}")
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        ce = evaluate(candidate(rng, b), strategy, b, c)
        if ce.grows:
            return ce
    raise SearchExhausted(f"no hull-growing layout for {strategy.value} within {budget} candidates")


def fixture_name(strategy) -> str:
    return f"counterexample_{AlgorithmId(strategy).value}.csv"


def load_fixture(strategy) -> Counterexample:
    """Load the checked-in layout for ``strategy`` and re-check that the hull grows."""
    strategy = AlgorithmId(strategy)
    with resources.as_file(resources.files("monoculus") / "data" / fixture_name(strategy)) as path:
        config = read_config_csv(path)
    ce = evaluate(config, strategy)
    if not ce.grows:
        raise FixtureError(f"{fixture_name(strategy)} no longer grows the hull "
                           f"({ce.area_before!r} -> {ce.area_after!r})")
    return ce


def save(ce: Counterexample, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    before = out / f"{ce.strategy.value}_before.csv"
    after = out / f"{ce.strategy.value}_after.csv"
    write_config_csv(ce.before, before)
    write_config_csv(ce.after, after)
    return before, after
