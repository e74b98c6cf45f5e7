"""Experiment execution: seeded repeats, optional process pool, output files."""

from __future__ import annotations

import json
import os
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor

from . import scenario as scn
from .reporting import aggregate, write_csv, write_tasks_csv
from .simulation import RunResult, run_single


def axis_values(cfg: scn.RunConfig) -> OrderedDict:
    """Canonical axis columns for a run: users and uavs always, extras after."""
    axes = dict(cfg.axes)
    out: OrderedDict = OrderedDict()
    out["users"] = axes.get("users", cfg.spec.users.count)
    out["uavs"] = axes.get("uavs", cfg.spec.uavs.fleet_size)
    for k, v in cfg.axes:
        if k not in ("users", "uavs"):
            out[k] = v
    return out


def _worker(args):
    cfg, collect_tasks, collect_events = args
    return run_single(cfg, collect_tasks=collect_tasks, collect_events=collect_events)


def execute(configs: list[scn.RunConfig], jobs: int | None = None,
            collect_tasks: bool = False, collect_events: bool = False,
            hook=None) -> list[RunResult]:
    """Run every config; results come back in config order regardless of jobs.

    A registered hook forces serial execution: it must see every decision
    point of every run, in order, from one process.
    """
    if hook is not None or jobs == 1 or len(configs) <= 1:
        return [run_single(c, hook=hook, collect_tasks=collect_tasks,
                           collect_events=collect_events) for c in configs]
    jobs = jobs or os.cpu_count() or 1
    work = [(c, collect_tasks, collect_events) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_worker, work, chunksize=2))


def override_sim(spec: scn.ScenarioSpec, seed: int | None = None,
                 repeats: int | None = None, drop_sweeps: bool = False) -> scn.ScenarioSpec:
    d = spec.to_dict()
    if seed is not None:
        d["sim"]["root_seed"] = int(seed)
    if repeats is not None:
        d["sim"]["repeats"] = int(repeats)
    if drop_sweeps:
        d.pop("sweeps", None)
    return scn.from_dict(d)


def run_experiment(spec: scn.ScenarioSpec, out_dir: str, jobs: int | None = None,
                   collect_tasks: bool = False, event_log: bool = False,
                   hook=None):
    """Expand, run, aggregate and write results.csv (plus optional extras).

    Returns (rows, results, paths) so library callers can keep working with
    the in-memory records.
    """
    os.makedirs(out_dir, exist_ok=True)
    configs = scn.expand_sweep(spec)
    results = execute(configs, jobs=jobs, collect_tasks=collect_tasks,
                      collect_events=event_log, hook=hook)

    grouped: OrderedDict = OrderedDict()
    for cfg, res in zip(configs, results):
        grouped.setdefault(cfg.axes, (axis_values(cfg), []))[1].append(res)

    app_names = [a.name for a in spec.apps]
    rows = [aggregate(vals, runs, app_names) for vals, runs in grouped.values()]

    meta = {
        "format": "results",
        "scenario_sha256": spec.scenario_hash(),
        "root_seed": spec.sim.root_seed,
        "repeats": spec.sim.repeats,
        "config": json.dumps(spec.to_dict(), sort_keys=True),
    }
    results_path = os.path.join(out_dir, "results.csv")
    write_csv(results_path, rows, meta)
    paths = {"results": results_path}

    if collect_tasks:
        blocks = [(axis_values(cfg), cfg.repeat, res.task_rows)
                  for cfg, res in zip(configs, results)]
        tasks_path = os.path.join(out_dir, "tasks.csv")
        write_tasks_csv(tasks_path, blocks)
        paths["tasks"] = tasks_path

    if event_log:
        log_paths = []
        for cfg, res in zip(configs, results):
            vals = axis_values(cfg)
            tag = "_".join(f"{k}{_short(v)}" for k, v in vals.items())
            p = os.path.join(out_dir, f"events_{tag}_r{cfg.repeat}.log")
            with open(p, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("\n".join(res.event_lines) + ("\n" if res.event_lines else ""))
            log_paths.append(p)
        paths["event_logs"] = log_paths

    return rows, results, paths


def _short(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)
