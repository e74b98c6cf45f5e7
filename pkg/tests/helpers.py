"""Shared test utilities: independent oracles and small scenario builders."""

from collections import defaultdict

from aircomp import scenario as scn


def replay_fifo(submissions):
    """Chronological brute-force recomputation of FIFO queues.

    `submissions` is a list of (arrival_time, proc_time, server_key) in
    submission order. Returns {submission_index: (queueing_delay, completion)}
    using the same max/add arithmetic as the live queue, so comparisons can
    be exact.
    """
    by_server = defaultdict(list)
    for i, (t, p, s) in enumerate(submissions):
        by_server[s].append((t, i, p))
    out = {}
    for items in by_server.values():
        items.sort(key=lambda x: (x[0], x[1]))   # time, then submission order
        busy_until = 0.0
        for t, i, p in items:
            start = busy_until if busy_until > t else t
            completion = start + p
            out[i] = (start - t, completion)
            busy_until = completion
    return out


PAPER_APPS = [
    {"name": "entertainment", "mean_interarrival_s": 10.0, "comp_load": 100.0,
     "max_delay_s": 0.3, "task_size_bits": 500000.0},
    {"name": "multimedia", "mean_interarrival_s": 10.0, "comp_load": 100.0,
     "max_delay_s": 3.0, "task_size_bits": 500000.0},
    {"name": "rendering", "mean_interarrival_s": 20.0, "comp_load": 200.0,
     "max_delay_s": 1.0, "task_size_bits": 500000.0},
    {"name": "imgclass", "mean_interarrival_s": 20.0, "comp_load": 600.0,
     "max_delay_s": 1.0, "task_size_bits": 500000.0},
]


def spec_dict(users=5, uavs=0, duration=50.0, repeats=1, seed=1, events=None,
              edge_capacity=950.0, uav_capacity=500.0, sweeps=None,
              instant_flight=True, **extra):
    d = {
        "world": {"x_max": 400.0, "y_max": 400.0, "grid_rows": 2, "grid_cols": 2},
        "network": {"data_rate_bps": 100000000.0, "edge_latency_s": 0.002,
                    "uav_latency_s": 0.00002, "cloud_wan_latency_s": 1.5},
        "servers": {
            "edges": [
                {"id": "edge_0", "x": 100.0, "y": 100.0, "radius": 100.0, "capacity": edge_capacity},
                {"id": "edge_1", "x": 300.0, "y": 100.0, "radius": 100.0, "capacity": edge_capacity},
                {"id": "edge_2", "x": 100.0, "y": 300.0, "radius": 100.0, "capacity": edge_capacity},
                {"id": "edge_3", "x": 300.0, "y": 300.0, "radius": 100.0, "capacity": edge_capacity},
            ],
            "cloud": {"capacity": 20000.0},
            "uavs": {"fleet_size": uavs, "capacity": uav_capacity, "radius": 100.0,
                     "altitude": 200.0, "speed_mps": 10.0,
                     "instant_flight": instant_flight, "relocation_period_s": 10.0},
        },
        "apps": [dict(a) for a in PAPER_APPS],
        "users": {"count": users, "nomadic_fraction": 0.0, "speed_min_mps": 1.0,
                  "speed_max_mps": 2.0, "pause_max_s": 0.0},
        "sim": {"duration_s": duration, "repeats": repeats, "root_seed": seed,
                "service_model": "deterministic"},
    }
    if events is not None:
        d["events"] = events
    if sweeps is not None:
        d["sweeps"] = sweeps
    for key, value in extra.items():
        section, field = key.split("__")
        d[section][field] = value
    return d


def make_spec(**kw) -> scn.ScenarioSpec:
    return scn.from_dict(spec_dict(**kw))


def run_of(spec: scn.ScenarioSpec, repeat=0, **kw):
    from aircomp.simulation import run_single
    return run_single(scn.single_config(spec, repeat), **kw)
