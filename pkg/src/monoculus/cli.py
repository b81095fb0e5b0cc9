"""Command line: ``run``, ``experiment``, ``counterexample`` and ``replay``.

Every flag can also come from a ``--config`` file of ``key = value`` lines
(keys are flag names without the leading dashes); flags given on the command
line win.  Exit codes: 0 success, 1 usage error, 2 search or verification
failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import counterexample as cx
from .algorithms import AlgorithmId
from .engine import SimulationParams, read_trace_meta, run, trace_csv, write_trace_csv
from .experiment import DEFAULT_NS, DEFAULT_SIDES, ExperimentSpec, run_experiment, write_outputs
from .geometry import convex_hull, hull_area
from .metrics import compute_metrics
from .scheduler import SchedulerModel
from .world import InvalidConfigError, read_config_csv

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_IO = 0, 1, 2, 3
ALGOS = [a.value for a in AlgorithmId]
SCHEDS = [s.value for s in SchedulerModel]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# flag name -> (converter, default); None defaults mean "not given"
COMMON = {
    "algo": (str, "ld"),
    "sched": (str, "fsync"),
    "seed": (int, 0),
    "fairness": (int, None),
    "dim": (int, 2),
    "b": (float, 1.0),
    "c": (float, 2.0),
    "corner-diag": (_bool, False),
    "max-events": (int, 10**7),
}
RUN = {
    "n": (int, 10),
    "side": (float, 100.0),
    "window": (int, None),
    "tie-break": (str, "lex"),
    "perturb-at": (int, None),
    "perturb-magnitude": (float, 0.0),
    "init": (str, None),
    "trace": (str, None),
}
EXPERIMENT = {
    "n": (_int_list, list(DEFAULT_NS)),
    "side": (_float_list, list(DEFAULT_SIDES)),
    "trials": (int, 100),
    "out": (str, "results"),
}
COUNTER = {
    "search": (_bool, False),
    "budget": (int, cx.DEFAULT_BUDGET),
    "out": (str, None),
}


HELP = {
    "algo": "one of " + ", ".join(ALGOS),
    "sched": "one of " + ", ".join(SCHEDS),
    "seed": "base seed for deployment, frames and schedule",
    "fairness": "fairness bound K (default 3n, or 6n for async)",
    "dim": "dimension of the space",
    "b": "OLA target half-width",
    "c": "LD target radius",
    "corner-diag": "corner robots move along the quadrant diagonal",
    "max-events": "event budget before a run is declared unconverged",
    "window": "stability window in rounds (default 5n)",
    "tie-break": "lex or random",
    "perturb-at": "event index at which to perturb once",
    "perturb-magnitude": "maximum per-robot perturbation",
    "init": "CSV of initial positions instead of a uniform deployment",
    "trace": "write the per-event trace CSV here",
    "trials": "trials per (n, side) cell",
    "search": "search for a fresh layout instead of loading the fixture",
    "budget": "number of random layouts to try when searching",
}
EXPERIMENT_HELP = {"n": "comma-separated robot counts", "side": "comma-separated deployment sides",
                   "out": "output directory"}
RUN_HELP = {"n": "number of robots", "side": "side of the deployment square"}
COUNTER_HELP = {"out": "write the layout CSV here"}


def read_config_file(path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("_", "-")] = value
    return values


def _add(p: argparse.ArgumentParser, table: dict, extra_help: dict | None = None) -> None:
    helps = {**HELP, **(extra_help or {})}
    for name, (conv, _) in table.items():
        if conv is _bool:
            p.add_argument(f"--{name}", nargs="?", const=True, default=None, type=_bool, help=helps.get(name))
        else:
            p.add_argument(f"--{name}", default=None, type=str, help=helps.get(name))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monoculus", description="Distance-oblivious robot convergence simulator.")
    parser.add_argument("--config", help="file of 'key = value' lines mirroring the flags")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    p = sub.add_parser("run", help="simulate one run and print its summary")
    _add(p, COMMON | RUN, RUN_HELP)
    p = sub.add_parser("experiment", help="sweep n and side, write results, summary and box plots")
    _add(p, COMMON | EXPERIMENT, EXPERIMENT_HELP)
    p = sub.add_parser("counterexample", help="hull-growing layout for a naive strategy")
    p.add_argument("strategy", nargs="?", default=None, help="median or bisector")
    _add(p, COMMON | COUNTER, COUNTER_HELP)
    p = sub.add_parser("replay", help="rerun a recorded trace and check it is reproduced exactly")
    p.add_argument("trace_path", metavar="trace")
    return parser


def _resolve(args, table: dict, file_values: dict) -> dict:
    out = {}
    for name, (conv, default) in table.items():
        given = getattr(args, name.replace("-", "_"), None)
        raw = given if given is not None else file_values.get(name)
        try:
            out[name] = conv(raw) if raw is not None else default
        except ValueError as exc:
            raise UsageError(f"--{name}: {exc}") from exc
    for key in file_values:
        if key not in table and key != "config":
            raise UsageError(f"unknown config key {key!r}")
    return out


def _check_choice(name, value, choices):
    if value not in choices:
        raise UsageError(f"--{name} must be one of {', '.join(choices)} (got {value!r})")


def _params(v: dict, **extra) -> SimulationParams:
    _check_choice("algo", v["algo"], ALGOS)
    _check_choice("sched", v["sched"], SCHEDS)
    try:
        return SimulationParams(
            algorithm=v["algo"], scheduler=v["sched"], seed=v["seed"], fairness=v["fairness"],
            dim=v["dim"], b=v["b"], c=v["c"], corner_diag=v["corner-diag"], max_events=v["max-events"],
            **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_run(v: dict, out) -> int:
    params = _params(v, n=v["n"], side=v["side"], window=v["window"], tie_break=v["tie-break"],
                     perturb_at=v["perturb-at"], perturb_magnitude=v["perturb-magnitude"])
    initial = read_config_csv(v["init"]) if v["init"] else None
    try:
        result = run(params, initial, record_trace=v["trace"] is not None)
    except InvalidConfigError as exc:
        raise UsageError(str(exc)) from exc
    summary = result.summary()
    m = compute_metrics(result)
    summary.update(d_opt=m.d_opt, d_max=m.d_max, rho=m.rho, tau=m.tau)
    if v["trace"]:
        write_trace_csv(result, v["trace"])
        summary["trace"] = v["trace"]
    print(json.dumps(summary, indent=2), file=out)
    return EXIT_OK


def cmd_experiment(v: dict, out) -> int:
    algos = v["algo"].split(",")
    for a in algos:
        _check_choice("algo", a, ALGOS)
    _check_choice("sched", v["sched"], SCHEDS)
    try:
        spec = ExperimentSpec(ns=tuple(v["n"]), sides=tuple(v["side"]), trials=v["trials"],
                              algorithms=tuple(algos), scheduler=v["sched"], seed=v["seed"], dim=v["dim"],
                              b=v["b"], c=v["c"], corner_diag=v["corner-diag"], fairness=v["fairness"],
                              max_events=v["max-events"])
        for algo, n, side in spec.cells():
            spec.params(algo, n, side, 0)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_experiment(spec, progress=lambda a, n, s: print(f"{a.value} n={n} side={s:g} done", file=sys.stderr))
    for path in write_outputs(result, v["out"]):
        print(path, file=out)
    return EXIT_OK


def cmd_counterexample(v: dict, strategy: str | None, out) -> int:
    strategy = strategy or (v["algo"] if v["algo"] in ("median", "bisector") else None)
    if strategy not in ("median", "bisector"):
        raise UsageError("counterexample needs a strategy: median or bisector")
    try:
        if v["search"]:
            ce = cx.search(strategy, seed=v["seed"], budget=v["budget"], b=v["b"], c=v["c"])
        else:
            ce = cx.load_fixture(strategy)
    except cx.SearchExhausted as exc:
        print(f"search failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except cx.FixtureError as exc:
        print(f"fixture check failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    ld_after = cx.fsync_round(ce.before, "ld", v["b"], max(v["c"], 2 * v["b"]))
    report = {
        "strategy": strategy,
        "n": ce.before.n,
        "area_before": ce.area_before,
        "area_after": ce.area_after,
        "grows": ce.grows,
        "ld_area_after": hull_area(convex_hull(ld_after.positions)),
        "before": ce.before.positions.tolist(),
        "after": ce.after.positions.tolist(),
    }
    if v["out"]:
        report["files"] = [str(p) for p in cx.save(ce, v["out"])]
    print(json.dumps(report, indent=2), file=out)
    return EXIT_OK


def cmd_replay(path: str, out) -> int:
    try:
        params, initial = read_trace_meta(path)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from exc
    result = run(params, initial)
    same = trace_csv(result) == Path(path).read_text()
    summary = result.summary()
    summary["reproduced"] = same
    print(json.dumps(summary, indent=2), file=out)
    if not same:
        print(f"{path}: replay differs from the recorded trace", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        file_values = read_config_file(args.config) if args.config else {}
        if args.command == "run":
            return cmd_run(_resolve(args, COMMON | RUN, file_values), out)
        if args.command == "experiment":
            return cmd_experiment(_resolve(args, COMMON | EXPERIMENT, file_values), out)
        if args.command == "counterexample":
            return cmd_counterexample(_resolve(args, COMMON | COUNTER, file_values), args.strategy, out)
        return cmd_replay(args.trace_path, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
