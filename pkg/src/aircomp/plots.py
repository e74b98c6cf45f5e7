"""Static result figures rendered from a results CSV."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .reporting import MissingColumn, read_csv

# fixed PNG metadata keeps repeated renders byte-identical
_META = {"Software": "aircomp"}


def _need(rows: list[dict], columns: list[str], figure: str):
    for col in columns:
        if not rows or col not in rows[0]:
            raise MissingColumn(f"{figure} needs column {col!r}")
        if all(r.get(col) is None for r in rows):
            raise MissingColumn(f"{figure} needs values in column {col!r}")


def _uniq(rows, col):
    return sorted({r[col] for r in rows if r.get(col) is not None})


def _series(rows, fixed: dict, x_col: str, y_col: str):
    pts = [(r[x_col], r[y_col]) for r in rows
           if all(r.get(k) == v for k, v in fixed.items()) and r.get(y_col) is not None]
    pts.sort()
    return [p[0] for p in pts], [p[1] for p in pts]


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.savefig(path, metadata=_META, dpi=110)
    plt.close(fig)
    return path


def _label(v) -> str:
    return str(int(v)) if isinstance(v, float) and v.is_integer() else str(v)


def fig_success(rows, out_dir):
    _need(rows, ["users", "uavs", "success_rate"], "success figure")
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for uav in _uniq(rows, "uavs"):
        xs, ys = _series(rows, {"uavs": uav}, "users", "success_rate")
        ax.plot(xs, ys, marker="o", label=f"{_label(uav)} UAVs")
    ax.set_xlabel("number of users")
    ax.set_ylabel("average task success rate")
    ax.set_ylim(0, 1)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "success_rate.png")


def fig_service_time(rows, out_dir):
    _need(rows, ["users", "uavs", "svc_time_s"], "service-time figure")
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for uav in _uniq(rows, "uavs"):
        xs, ys = _series(rows, {"uavs": uav}, "users", "svc_time_s")
        ax.plot(xs, ys, marker="o", label=f"{_label(uav)} UAVs")
    ax.set_xlabel("number of users")
    ax.set_ylabel("average service time (s)")
    ax.set_yscale("log")
    ax.grid(True, alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "service_time.png")


def fig_utilization(rows, out_dir):
    _need(rows, ["users", "uavs", "edge_util"], "utilization figure")
    fig, (ax_uav, ax_edge) = plt.subplots(1, 2, figsize=(9, 4))
    for users in _uniq(rows, "users"):
        xs, ys = _series(rows, {"users": users}, "uavs", "uav_util")
        ax_uav.plot(xs, ys, marker="o", label=f"{_label(users)} users")
        xs, ys = _series(rows, {"users": users}, "uavs", "edge_util")
        ax_edge.plot(xs, ys, marker="s", label=f"{_label(users)} users")
    ax_uav.set_title("UAV utilization")
    ax_edge.set_title("Edge utilization")
    for ax in (ax_uav, ax_edge):
        ax.set_xlabel("number of UAVs")
        ax.set_ylabel("mean utilization")
        ax.set_ylim(0, 1.05)
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "utilization.png")


def fig_offload_shares(rows, out_dir):
    _need(rows, ["users", "uavs", "share_edge", "share_uav", "share_cloud"],
          "offload-share figure")
    users_vals = _uniq(rows, "users")
    fig, axes = plt.subplots(1, len(users_vals), figsize=(4.5 * len(users_vals), 4),
                             squeeze=False)
    for ax, users in zip(axes[0], users_vals):
        uavs = _uniq([r for r in rows if r["users"] == users], "uavs")
        edge = [_series(rows, {"users": users, "uavs": u}, "uavs", "share_edge")[1][0] for u in uavs]
        uav = [_series(rows, {"users": users, "uavs": u}, "uavs", "share_uav")[1][0] for u in uavs]
        cloud = [_series(rows, {"users": users, "uavs": u}, "uavs", "share_cloud")[1][0] for u in uavs]
        x = range(len(uavs))
        ax.bar(x, edge, label="edge")
        ax.bar(x, uav, bottom=edge, label="UAV")
        ax.bar(x, cloud, bottom=[e + u for e, u in zip(edge, uav)], label="cloud")
        ax.set_xticks(list(x), [_label(u) for u in uavs])
        ax.set_xlabel("number of UAVs")
        ax.set_ylabel("offload share")
        ax.set_title(f"{_label(users)} users")
        ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, "offload_shares.png")


def fig_app_success(rows, out_dir):
    app_cols = [c for c in (rows[0].keys() if rows else []) if c.startswith("succ_")]
    if not app_cols:
        raise MissingColumn("per-app figure needs succ_* columns")
    _need(rows, ["users", "uavs"] + app_cols, "per-app figure")
    users_vals = _uniq(rows, "users")
    fig, axes = plt.subplots(1, len(users_vals), figsize=(5 * len(users_vals), 4),
                             squeeze=False)
    width = 0.8 / len(app_cols)
    for ax, users in zip(axes[0], users_vals):
        uavs = _uniq([r for r in rows if r["users"] == users], "uavs")
        for j, col in enumerate(app_cols):
            ys = [_series(rows, {"users": users, "uavs": u}, "uavs", col)[1][0] for u in uavs]
            xs = [i + (j - (len(app_cols) - 1) / 2) * width for i in range(len(uavs))]
            ax.bar(xs, ys, width=width, label=col[5:])
        ax.set_xticks(range(len(uavs)), [_label(u) for u in uavs])
        ax.set_xlabel("number of UAVs")
        ax.set_ylabel("task success rate")
        ax.set_ylim(0, 1)
        ax.set_title(f"{_label(users)} users")
        ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, "app_success.png")


def render_plots(csv_path: str, out_dir: str) -> list[str]:
    """Render the full figure set from a results CSV; returns written paths."""
    _, rows = read_csv(csv_path)
    os.makedirs(out_dir, exist_ok=True)
    return [
        fig_success(rows, out_dir),
        fig_service_time(rows, out_dir),
        fig_utilization(rows, out_dir),
        fig_offload_shares(rows, out_dir),
        fig_app_success(rows, out_dir),
    ]
