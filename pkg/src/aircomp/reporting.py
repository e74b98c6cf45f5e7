"""Metric aggregation across repeats, CSV emission, and recompute-based checks.

The results CSV has a fixed column order and fixed 6-decimal formatting so
that identical experiments produce byte-identical files. Header comment
lines carry the resolved configuration, which makes every file
self-describing and lets `verify` re-derive the aggregates from a raw
per-task dump.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict, defaultdict

from .simulation import RunResult


class MissingColumn(KeyError):
    """A figure or recompute step needs a column the CSV does not carry."""


BASE_COLUMNS = [
    "users", "uavs", "repeat_count",
    "success_rate", "success_ci", "svc_time_s", "svc_time_ci",
    "edge_util", "uav_util",
    "share_edge", "share_uav", "share_cloud",
]

TASK_FIELDS = [
    "repeat", "task_id", "app", "tier", "server",
    "created_at", "net_s", "queue_s", "proc_s", "max_delay_s", "success",
]


def _t_quantile(n: int) -> float:
    # two-sided 95% Student-t; scipy imported lazily to keep startup light
    from scipy.stats import t
    return float(t.ppf(0.975, n - 1))


def mean_and_halfwidth(values: list[float]) -> tuple[float | None, float | None]:
    """Mean and 95% confidence half-width over repeat-level values."""
    vals = [v for v in values if v is not None]
    if not vals:
        return None, None
    mean = sum(vals) / len(vals)
    if len(vals) == 1:
        return mean, None
    var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    return mean, _t_quantile(len(vals)) * math.sqrt(var / len(vals))


def record_counts(results: list[RunResult]) -> dict:
    """Raw pooled counters, mostly for sanity reporting."""
    return {
        "tasks": sum(r.tasks_total for r in results),
        "successes": sum(r.tasks_ok for r in results),
        "killed_by_failure": sum(r.killed_by_failure for r in results),
    }


def aggregate(axis_values: "OrderedDict[str, float]", results: list[RunResult],
              app_names: list[str]) -> OrderedDict:
    """One CSV row: per-metric mean over repeats plus CI half-widths."""
    if not results:
        raise ValueError("aggregate needs at least one repeat")
    row: OrderedDict = OrderedDict()
    row["users"] = axis_values["users"]
    row["uavs"] = axis_values["uavs"]
    row["repeat_count"] = len(results)
    row["success_rate"], row["success_ci"] = mean_and_halfwidth(
        [r.success_rate for r in results])
    row["svc_time_s"], row["svc_time_ci"] = mean_and_halfwidth(
        [r.mean_service_time for r in results])
    row["edge_util"], _ = mean_and_halfwidth([r.edge_util for r in results])
    row["uav_util"], _ = mean_and_halfwidth([r.uav_util for r in results])
    for tier in ("edge", "uav", "cloud"):
        row[f"share_{tier}"], _ = mean_and_halfwidth(
            [r.tier_share(tier) for r in results])
    for name in app_names:
        row[f"succ_{name}"], _ = mean_and_halfwidth(
            [r.app_success_rate(name) for r in results])
    for axis, value in axis_values.items():
        if axis not in ("users", "uavs"):
            row[axis] = value

    shares = [row["share_edge"], row["share_uav"], row["share_cloud"]]
    if all(s is not None for s in shares):
        assert abs(sum(shares) - 1.0) < 1e-9, f"offload shares do not sum to 1: {shares}"
    return row


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e15:
            return str(int(value))
        return f"{value:.6f}"
    return str(value)


def write_csv(path: str, rows: list[OrderedDict], meta: dict) -> None:
    """Header comment block, column header, then one line per configuration."""
    if rows:
        columns = list(rows[0].keys())
    else:
        columns = list(BASE_COLUMNS)
    lines = ["# aircomp-results-v1"]
    for key in sorted(meta):
        lines.append(f"# {key}={meta[key]}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_tasks_csv(path: str, blocks: list[tuple[dict, int, list[tuple]]]) -> None:
    """Per-task dump: one block per run, each row tagged with its axes/repeat."""
    axis_names = list(blocks[0][0].keys()) if blocks else ["users", "uavs"]
    lines = [",".join(axis_names + TASK_FIELDS)]
    for axis_values, repeat, task_rows in blocks:
        prefix = ",".join(_fmt(axis_values[a]) for a in axis_names) + f",{repeat}"
        for (task_id, app, tier, server, created, net, queue, proc,
             max_delay, success) in task_rows:
            lines.append(
                f"{prefix},{task_id},{app},{tier},{server},{_fmt(created)},"
                f"{_fmt(net)},{_fmt(queue)},{_fmt(proc)},{_fmt(max_delay)},"
                f"{1 if success else 0}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> tuple[dict, list[dict]]:
    """Parse a results or tasks file back into meta + typed rows."""
    meta: dict = {}
    rows: list[dict] = []
    columns: list[str] | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, value = body.split("=", 1)
                    meta[key.strip()] = value
                continue
            parts = line.split(",")
            if columns is None:
                columns = parts
                continue
            row = {}
            for col, cell in zip(columns, parts):
                if cell == "":
                    row[col] = None
                else:
                    try:
                        row[col] = float(cell)
                    except ValueError:
                        row[col] = cell
            rows.append(row)
    if columns is None:
        raise ValueError(f"{path}: no header row found")
    return meta, rows


# --------------------------------------------------------------------------
# recompute-and-compare
# --------------------------------------------------------------------------

def _recompute_run(task_rows: list[dict], app_names: list[str]) -> dict:
    total = len(task_rows)
    ok = 0
    svc_sum = 0.0
    svc_n = 0
    tiers = {"edge": 0, "uav": 0, "cloud": 0}
    app_total = defaultdict(int)
    app_ok = defaultdict(int)
    flag_errors = []
    for r in task_rows:
        tiers[r["tier"]] += 1
        app_total[r["app"]] += 1
        complete = r["net_s"] is not None
        if complete:
            tot = r["net_s"] + r["queue_s"] + r["proc_s"]
            svc_sum += tot
            svc_n += 1
            expect = tot <= r["max_delay_s"]
        else:
            expect = False
        if bool(r["success"]) != expect:
            flag_errors.append(int(r["task_id"]))
        if r["success"]:
            ok += 1
            app_ok[r["app"]] += 1
    out = {
        "success_rate": ok / total if total else None,
        "svc_time_s": svc_sum / svc_n if svc_n else None,
        "share_edge": tiers["edge"] / total if total else None,
        "share_uav": tiers["uav"] / total if total else None,
        "share_cloud": tiers["cloud"] / total if total else None,
        "_flag_errors": flag_errors,
    }
    for name in app_names:
        out[f"succ_{name}"] = (app_ok[name] / app_total[name]
                               if app_total[name] else None)
    return out


def verify(results_path: str, tasks_path: str | None = None) -> list[str]:
    """Re-derive every derivable aggregate and compare. Returns problems."""
    problems: list[str] = []
    meta, rows = read_csv(results_path)
    config = json.loads(meta["config"]) if "config" in meta else None
    app_names = ([a["name"] for a in config["apps"]] if config
                 else [c[5:] for c in rows[0] if c.startswith("succ_")] if rows else [])

    for row in rows:
        for col in ("success_rate", "edge_util", "uav_util",
                    "share_edge", "share_uav", "share_cloud"):
            v = row.get(col)
            if v is not None and not (0.0 <= v <= 1.0):
                problems.append(f"{col}={v} out of [0,1] at users={row['users']}, uavs={row['uavs']}")
        shares = [row.get("share_edge"), row.get("share_uav"), row.get("share_cloud")]
        # three independently rounded 6-decimal cells can be off by 1.5e-6
        if all(s is not None for s in shares) and abs(sum(shares) - 1.0) > 2e-6:
            problems.append(f"shares sum to {sum(shares)} at users={row['users']}, uavs={row['uavs']}")
        for col in ("success_ci", "svc_time_ci"):
            v = row.get(col)
            if v is not None and v < 0:
                problems.append(f"{col}={v} negative")

    if tasks_path is None:
        return problems

    _, task_rows = read_csv(tasks_path)
    if not task_rows:
        problems.append("tasks file has no rows")
        return problems
    columns = list(task_rows[0].keys())
    axis_names = columns[:columns.index("repeat")]
    by_config: dict = defaultdict(dict)
    for r in task_rows:
        key = tuple(r[a] for a in axis_names)
        by_config[key].setdefault(r["repeat"], []).append(r)

    checked = 0
    for row in rows:
        key = tuple(row.get(a) for a in axis_names)
        where = ", ".join(f"{a}={v}" for a, v in zip(axis_names, key))
        if key not in by_config:
            continue
        repeats = by_config[key]
        per_metric = defaultdict(list)
        flag_errors = []
        for repeat in sorted(repeats):
            rec = _recompute_run(repeats[repeat], app_names)
            flag_errors.extend(rec.pop("_flag_errors"))
            for k, v in rec.items():
                per_metric[k].append(v)
        if flag_errors:
            problems.append(
                f"{where}: {len(flag_errors)} task success flags disagree with "
                f"their delay triples (e.g. task {flag_errors[0]})")
        if int(row["repeat_count"]) != len(repeats):
            problems.append(f"{where}: repeat_count {row['repeat_count']} "
                            f"but {len(repeats)} repeats dumped")
            continue
        for col, values in per_metric.items():
            mean, _ = mean_and_halfwidth(values)
            have = row.get(col)
            if mean is None and have is None:
                continue
            tol = 2e-5 if col == "svc_time_s" else 1e-6
            if mean is None or have is None or abs(mean - have) > tol:
                problems.append(f"{where}: {col} recomputed {mean} vs reported {have}")
        checked += 1
    if checked == 0:
        problems.append("tasks file does not cover any configuration in the results file")
    return problems
