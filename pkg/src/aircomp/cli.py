"""Command-line front end: run, sweep, plot, verify.

Exit codes: 0 success, 1 validation problem, 2 runtime error.
"""

from __future__ import annotations

import argparse
import importlib.resources
import os
import sys

from . import runner, scenario as scn
from .policies import StdioHookAdapter
from .reporting import MissingColumn, verify


def resolve_scenario(name_or_path: str) -> scn.ScenarioSpec:
    """Accepts a file path or the name of a bundled scenario."""
    if os.path.exists(name_or_path):
        return scn.load_scenario_file(name_or_path)
    res = importlib.resources.files("aircomp") / "scenarios" / f"{name_or_path}.yaml"
    if res.is_file():
        return scn.load_scenario(res.read_text(encoding="utf-8"))
    raise scn.ScenarioError(
        f"scenario {name_or_path!r} is neither a file nor a bundled scenario")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aircomp",
        description="Discrete-event simulator for edge/UAV/cloud task offloading.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration for K seeded repeats")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the root seed")
    p_run.add_argument("--repeats", type=int, default=None, help="override repeat count")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--event-log", action="store_true",
                       help="write one dispatched-event log per repeat")
    p_run.add_argument("--tasks", action="store_true", help="dump per-task records")
    p_run.add_argument("--jobs", type=int, default=None)
    p_run.add_argument("--hook-cmd", default=None,
                       help="external policy agent command (line-JSON over stdio)")

    p_sweep = sub.add_parser("sweep", help="run the scenario's full sweep grid")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--tasks", action="store_true")
    p_sweep.add_argument("--jobs", type=int, default=None)

    p_plot = sub.add_parser("plot", help="render the figure set from a results CSV")
    p_plot.add_argument("--csv", required=True)
    p_plot.add_argument("--out", required=True)

    p_verify = sub.add_parser("verify", help="recompute aggregates and compare")
    p_verify.add_argument("--csv", required=True)
    p_verify.add_argument("--tasks", default=None,
                          help="per-task dump (defaults to tasks.csv next to the results)")
    return parser


def _cmd_run(args) -> int:
    spec = resolve_scenario(args.scenario)
    spec = runner.override_sim(spec, seed=args.seed, repeats=args.repeats,
                               drop_sweeps=True)
    hook = StdioHookAdapter(args.hook_cmd) if args.hook_cmd else None
    try:
        rows, results, paths = runner.run_experiment(
            spec, args.out, jobs=args.jobs, collect_tasks=args.tasks,
            event_log=args.event_log, hook=hook)
    finally:
        if hook is not None:
            hook.close()
    total = sum(r.tasks_total for r in results)
    ok = sum(r.tasks_ok for r in results)
    print(f"{len(results)} repeat(s), {total} tasks, "
          f"overall success {ok / total:.4f}" if total else "no tasks generated")
    print(f"results: {paths['results']}")
    return 0


def _cmd_sweep(args) -> int:
    spec = resolve_scenario(args.scenario)
    if args.seed is not None:
        spec = runner.override_sim(spec, seed=args.seed)
    rows, results, paths = runner.run_experiment(
        spec, args.out, jobs=args.jobs, collect_tasks=args.tasks)
    print(f"{len(rows)} configuration(s) x {spec.sim.repeats} repeats -> "
          f"{paths['results']}")
    return 0


def _cmd_plot(args) -> int:
    from .plots import render_plots
    for path in render_plots(args.csv, args.out):
        print(path)
    return 0


def _cmd_verify(args) -> int:
    tasks = args.tasks
    if tasks is None:
        sibling = os.path.join(os.path.dirname(os.path.abspath(args.csv)), "tasks.csv")
        tasks = sibling if os.path.exists(sibling) else None
    problems = verify(args.csv, tasks)
    if tasks is None:
        print("note: no per-task dump found; only internal consistency was checked")
    if problems:
        for p in problems:
            print(f"FAIL: {p}", file=sys.stderr)
        return 1
    print("verify: OK")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "plot":
            return _cmd_plot(args)
        return _cmd_verify(args)
    except (scn.ScenarioError, MissingColumn) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
