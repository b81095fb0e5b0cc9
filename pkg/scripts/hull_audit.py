"""Count LD moves that leave the current convex hull, per scheduler.

Synchronous rounds never push a robot outside the hull of the round's start
configuration.  Under ASYNC a robot moves on a stale snapshot, so it can head
for a spot a neighbour has already left; this script measures how often and
how far.

    python scripts/hull_audit.py --n 10 --trials 20
"""

import argparse
import sys

import numpy as np

from monoculus.engine import SimulationParams, replay_steps, run
from monoculus.geometry import convex_hull, point_in_hull


def audit(result, tol=1e-9):
    outside = 0
    for step in replay_steps(result):
        hull = convex_hull(step.before)
        moved = np.flatnonzero(np.any(step.before != step.after, axis=1))
        outside += sum(not point_in_hull(hull, step.after[i], tol) for i in moved)
    return outside


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--side", type=float, default=100.0)
    ap.add_argument("--trials", type=int, default=20)
    args = ap.parse_args()
    for sched in ("fsync", "ssync", "async"):
        counts = [audit(run(SimulationParams(algorithm="ld", scheduler=sched, n=args.n, side=args.side, seed=s)))
                  for s in range(args.trials)]
        print(f"{sched}: {sum(c > 0 for c in counts)}/{args.trials} runs with outside moves, "
              f"{sum(counts)} moves in total")
    return 0


if __name__ == "__main__":
    sys.exit(main())
