"""Search hull-growing layouts for the naive strategies and refresh the packaged fixtures.

    python scripts/search_counterexamples.py            # print what would be written
    python scripts/search_counterexamples.py --write    # overwrite src/monoculus/data/*.csv
"""

import argparse
import sys
from pathlib import Path

from monoculus import counterexample as cx
from monoculus.world import write_config_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "monoculus" / "data"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--budget", type=int, default=cx.DEFAULT_BUDGET)
    ap.add_argument("--write", action="store_true")
    args = ap.parse_args()

    for strategy in ("median", "bisector"):
        try:
            ce = cx.search(strategy, seed=args.seed, budget=args.budget)
        except cx.SearchExhausted as exc:
            print(exc, file=sys.stderr)
            return 2
        print(f"{strategy}: n={ce.before.n} area {ce.area_before:.4f} -> {ce.area_after:.4f}")
        if args.write:
            path = DATA / cx.fixture_name(strategy)
            write_config_csv(ce.before, path)
            print(f"  wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
