"""Run the default n x side sweep for LD and OLA and write CSVs plus box plots.

    python scripts/reproduce_figures.py --out results/fsync
    python scripts/reproduce_figures.py --sched async --trials 20 --out results/async
"""

import argparse
import sys
import time

from monoculus.experiment import DEFAULT_NS, DEFAULT_SIDES, ExperimentSpec, run_experiment, write_outputs


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sched", default="fsync", choices=["fsync", "ssync", "async"])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    spec = ExperimentSpec(ns=DEFAULT_NS, sides=DEFAULT_SIDES, trials=args.trials, algorithms=("ld", "ola"),
                          scheduler=args.sched, seed=args.seed)
    t0 = time.time()
    res = run_experiment(spec, progress=lambda a, n, s: print(f"{a.value:>4} n={n:<3} side={s:g}", file=sys.stderr))
    for path in write_outputs(res, args.out):
        print(path)
    print(f"{len(res.rows)} runs in {time.time() - t0:.0f}s", file=sys.stderr)
    for _, n, side in spec.cells():
        if _.value != "ld":
            continue
        print(f"n={n:<3} side={side:<5g} median rho ld {res.median('ld', n, side, 'rho'):.3f} "
              f"ola {res.median('ola', n, side, 'rho'):.3f}   median tau ld {res.median('ld', n, side, 'tau'):.3f} "
              f"ola {res.median('ola', n, side, 'tau'):.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
