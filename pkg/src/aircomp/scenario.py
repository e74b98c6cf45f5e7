"""Declarative experiment description: parsing, validation, defaults, sweeps.

Scenario files are YAML with a fixed section set (world, network, servers,
apps, users, sim, events, sweeps). Unknown keys are rejected to catch typos.
Specs are immutable after loading and safe to share across processes.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
from dataclasses import dataclass, field

import yaml

from .sim_core import derive_seed
from .topology import LATENCY_BANDS, LATENCY_PRESETS, AreaGrid, DelayParams
from .workload import AppProfile

log = logging.getLogger("aircomp.scenario")


class ScenarioError(ValueError):
    pass


class ParseError(ScenarioError):
    pass


class ValidationError(ScenarioError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class WorldSpec:
    x_max: float = 400.0
    y_max: float = 400.0
    grid_rows: int = 2
    grid_cols: int = 2

    def grid(self) -> AreaGrid:
        return AreaGrid(self.grid_rows, self.grid_cols, self.x_max, self.y_max)


@dataclass(frozen=True)
class EdgeSpec:
    id: str
    x: float
    y: float
    radius: float = 100.0
    capacity: float = 1000.0


@dataclass(frozen=True)
class CloudSpec:
    capacity: float = 20000.0


@dataclass(frozen=True)
class UavFleetSpec:
    fleet_size: int = 0
    capacity: float = 500.0
    radius: float = 100.0
    altitude: float = 200.0
    speed_mps: float = 10.0
    instant_flight: bool = False
    relocation_period_s: float = 10.0


@dataclass(frozen=True)
class UsersSpec:
    count: int
    nomadic_fraction: float = 0.0
    speed_min_mps: float = 1.0
    speed_max_mps: float = 2.0
    pause_max_s: float = 0.0


@dataclass(frozen=True)
class SimSpec:
    duration_s: float = 1000.0
    repeats: int = 1
    root_seed: int = 42
    service_model: str = "deterministic"   # or "exponential"


@dataclass(frozen=True)
class DynamicEventSpec:
    time: float
    kind: str                  # server_failure | server_restore | capacity_surge | user_burst
    params: tuple              # sorted (key, value) pairs; see params_dict()

    def params_dict(self) -> dict:
        return dict(self.params)


@dataclass(frozen=True)
class ScenarioSpec:
    world: WorldSpec
    network: DelayParams
    edges: tuple[EdgeSpec, ...]
    cloud: CloudSpec
    uavs: UavFleetSpec
    apps: tuple[AppProfile, ...]
    users: UsersSpec
    sim: SimSpec
    events: tuple[DynamicEventSpec, ...] = ()
    sweeps: tuple = ()          # ((axis, (v1, v2, ...)), ...)
    network_preset: str | None = None

    def to_dict(self) -> dict:
        d = {
            "world": {
                "x_max": self.world.x_max, "y_max": self.world.y_max,
                "grid_rows": self.world.grid_rows, "grid_cols": self.world.grid_cols,
            },
            "network": {
                "data_rate_bps": self.network.data_rate_bps,
                "edge_latency_s": self.network.edge_latency_s,
                "uav_latency_s": self.network.uav_latency_s,
                "cloud_wan_latency_s": self.network.cloud_wan_latency_s,
            },
            "servers": {
                "edges": [
                    {"id": e.id, "x": e.x, "y": e.y, "radius": e.radius, "capacity": e.capacity}
                    for e in self.edges
                ],
                "cloud": {"capacity": self.cloud.capacity},
                "uavs": {
                    "fleet_size": self.uavs.fleet_size, "capacity": self.uavs.capacity,
                    "radius": self.uavs.radius, "altitude": self.uavs.altitude,
                    "speed_mps": self.uavs.speed_mps,
                    "instant_flight": self.uavs.instant_flight,
                    "relocation_period_s": self.uavs.relocation_period_s,
                },
            },
            "apps": [
                {"name": a.name, "mean_interarrival_s": a.mean_interarrival_s,
                 "comp_load": a.comp_load, "max_delay_s": a.max_delay_s,
                 "task_size_bits": a.task_size_bits}
                for a in self.apps
            ],
            "users": {
                "count": self.users.count,
                "nomadic_fraction": self.users.nomadic_fraction,
                "speed_min_mps": self.users.speed_min_mps,
                "speed_max_mps": self.users.speed_max_mps,
                "pause_max_s": self.users.pause_max_s,
            },
            "sim": {
                "duration_s": self.sim.duration_s, "repeats": self.sim.repeats,
                "root_seed": self.sim.root_seed, "service_model": self.sim.service_model,
            },
        }
        if self.events:
            d["events"] = [dict({"time": e.time, "kind": e.kind}, **e.params_dict())
                           for e in self.events]
        if self.sweeps:
            d["sweeps"] = {axis: list(values) for axis, values in self.sweeps}
        if self.network_preset:
            d["network"]["preset"] = self.network_preset
        return d

    def scenario_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------

def _expect_mapping(node, path):
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ValidationError(path, f"expected a mapping, got {type(node).__name__}")
    return node

def _check_keys(node: dict, allowed: set[str], path: str):
    unknown = sorted(set(node) - allowed)
    if unknown:
        raise ValidationError(path, f"unknown key(s): {', '.join(unknown)}")

def _num(node, key, path, default=None, minimum=None, strict_min=None, maximum=None):
    if key not in node or node[key] is None:
        if default is None:
            raise ValidationError(f"{path}.{key}", "required value missing")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{path}.{key}", f"expected a number, got {v!r}")
    v = float(v)
    if minimum is not None and v < minimum:
        raise ValidationError(f"{path}.{key}", f"must be >= {minimum}, got {v}")
    if strict_min is not None and v <= strict_min:
        raise ValidationError(f"{path}.{key}", f"must be > {strict_min}, got {v}")
    if maximum is not None and v > maximum:
        raise ValidationError(f"{path}.{key}", f"must be <= {maximum}, got {v}")
    return v

def _int(node, key, path, default=None, minimum=None):
    if key not in node or node[key] is None:
        if default is None:
            raise ValidationError(f"{path}.{key}", "required value missing")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"{path}.{key}", f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ValidationError(f"{path}.{key}", f"must be >= {minimum}, got {v}")
    return v

def _bool(node, key, path, default):
    if key not in node or node[key] is None:
        return default
    v = node[key]
    if not isinstance(v, bool):
        raise ValidationError(f"{path}.{key}", f"expected true/false, got {v!r}")
    return v

def _str(node, key, path, default=None, choices=None):
    if key not in node or node[key] is None:
        if default is None:
            raise ValidationError(f"{path}.{key}", "required value missing")
        return default
    v = node[key]
    if not isinstance(v, str):
        raise ValidationError(f"{path}.{key}", f"expected a string, got {v!r}")
    if choices and v not in choices:
        raise ValidationError(f"{path}.{key}", f"must be one of {sorted(choices)}, got {v!r}")
    return v


_EVENT_KINDS = {"server_failure", "server_restore", "capacity_surge", "user_burst"}

# sweep axis name -> path into the config dict
AXIS_PATHS = {
    "users": ("users", "count"),
    "uavs": ("servers", "uavs", "fleet_size"),
}


def load_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a scenario document; omitted fields get defaults."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError(f"top level must be a mapping, got {type(raw).__name__}")
    return _build(raw)


def load_scenario_file(path: str) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def from_dict(raw: dict) -> ScenarioSpec:
    """Build and validate a spec from an already-parsed mapping."""
    return _build(raw)


def dumps_scenario(spec: ScenarioSpec) -> str:
    return yaml.safe_dump(spec.to_dict(), sort_keys=True)


def _build(raw: dict) -> ScenarioSpec:
    _check_keys(raw, {"world", "network", "servers", "apps", "users", "sim", "events", "sweeps"}, "scenario")
    missing = [s for s in ("apps", "servers", "users") if s not in raw]
    if missing:
        raise ValidationError("scenario", f"missing required section(s): {', '.join(missing)}")

    w = _expect_mapping(raw.get("world"), "world")
    _check_keys(w, {"x_max", "y_max", "grid_rows", "grid_cols"}, "world")
    world = WorldSpec(
        x_max=_num(w, "x_max", "world", 400.0, strict_min=0),
        y_max=_num(w, "y_max", "world", 400.0, strict_min=0),
        grid_rows=_int(w, "grid_rows", "world", 2, minimum=1),
        grid_cols=_int(w, "grid_cols", "world", 2, minimum=1),
    )

    n = _expect_mapping(raw.get("network"), "network")
    _check_keys(n, {"preset", "data_rate_bps", "edge_latency_s", "uav_latency_s",
                    "cloud_wan_latency_s"}, "network")
    preset = _str(n, "preset", "network", default="", choices=set(LATENCY_PRESETS) | {""}) or None
    if preset and "uav_latency_s" in n:
        raise ValidationError("network.uav_latency_s", f"conflicts with preset {preset!r}")
    uav_latency = LATENCY_PRESETS[preset] if preset else _num(
        n, "uav_latency_s", "network", 20e-6, strict_min=0)
    if preset:
        lo, hi = LATENCY_BANDS[preset]
        assert lo <= uav_latency <= hi
    try:
        network = DelayParams(
            data_rate_bps=_num(n, "data_rate_bps", "network", 100e6, strict_min=0),
            edge_latency_s=_num(n, "edge_latency_s", "network", 0.002, strict_min=0),
            uav_latency_s=uav_latency,
            cloud_wan_latency_s=_num(n, "cloud_wan_latency_s", "network", 1.5, strict_min=0),
        )
    except ValueError as exc:
        raise ValidationError("network", str(exc)) from exc

    srv = _expect_mapping(raw.get("servers"), "servers")
    _check_keys(srv, {"edges", "cloud", "uavs"}, "servers")
    edges_raw = srv.get("edges")
    if not isinstance(edges_raw, list) or not edges_raw:
        raise ValidationError("servers.edges", "at least one edge server is required")
    edges = []
    seen_ids = set()
    for i, e in enumerate(edges_raw):
        p = f"servers.edges[{i}]"
        e = _expect_mapping(e, p)
        _check_keys(e, {"id", "x", "y", "radius", "capacity"}, p)
        eid = _str(e, "id", p, default=f"edge_{i}")
        if eid in seen_ids:
            raise ValidationError(f"{p}.id", f"duplicate server id {eid!r}")
        seen_ids.add(eid)
        x = _num(e, "x", p)
        y = _num(e, "y", p)
        if not (0.0 <= x <= world.x_max and 0.0 <= y <= world.y_max):
            raise ValidationError(p, f"position ({x}, {y}) outside the world bounds")
        edges.append(EdgeSpec(
            id=eid, x=x, y=y,
            radius=_num(e, "radius", p, 100.0, strict_min=0),
            capacity=_num(e, "capacity", p, 1000.0, strict_min=0),
        ))

    c = _expect_mapping(srv.get("cloud"), "servers.cloud")
    _check_keys(c, {"capacity"}, "servers.cloud")
    cloud = CloudSpec(capacity=_num(c, "capacity", "servers.cloud", 20000.0, strict_min=0))

    u = _expect_mapping(srv.get("uavs"), "servers.uavs")
    _check_keys(u, {"fleet_size", "capacity", "radius", "altitude", "speed_mps",
                    "instant_flight", "relocation_period_s"}, "servers.uavs")
    uavs = UavFleetSpec(
        fleet_size=_int(u, "fleet_size", "servers.uavs", 0, minimum=0),
        capacity=_num(u, "capacity", "servers.uavs", 500.0, strict_min=0),
        radius=_num(u, "radius", "servers.uavs", 100.0, strict_min=0),
        altitude=_num(u, "altitude", "servers.uavs", 200.0, strict_min=0),
        speed_mps=_num(u, "speed_mps", "servers.uavs", 10.0, strict_min=0),
        instant_flight=_bool(u, "instant_flight", "servers.uavs", False),
        relocation_period_s=_num(u, "relocation_period_s", "servers.uavs", 10.0, strict_min=0),
    )

    apps_raw = raw.get("apps")
    if not isinstance(apps_raw, list) or not apps_raw:
        raise ValidationError("apps", "at least one application profile is required")
    apps = []
    seen_apps = set()
    for i, a in enumerate(apps_raw):
        p = f"apps[{i}]"
        a = _expect_mapping(a, p)
        _check_keys(a, {"name", "mean_interarrival_s", "comp_load", "max_delay_s",
                        "task_size_bits"}, p)
        name = _str(a, "name", p)
        if name in seen_apps:
            raise ValidationError(f"{p}.name", f"duplicate app name {name!r}")
        seen_apps.add(name)
        try:
            apps.append(AppProfile(
                name=name,
                mean_interarrival_s=_num(a, "mean_interarrival_s", p, strict_min=0),
                comp_load=_num(a, "comp_load", p, strict_min=0),
                max_delay_s=_num(a, "max_delay_s", p, strict_min=0),
                task_size_bits=_num(a, "task_size_bits", p, strict_min=0),
            ))
        except ValueError as exc:
            raise ValidationError(p, str(exc)) from exc

    us = _expect_mapping(raw.get("users"), "users")
    _check_keys(us, {"count", "nomadic_fraction", "speed_min_mps", "speed_max_mps",
                     "pause_max_s"}, "users")
    users = UsersSpec(
        count=_int(us, "count", "users", minimum=0),
        nomadic_fraction=_num(us, "nomadic_fraction", "users", 0.0, minimum=0.0, maximum=1.0),
        speed_min_mps=_num(us, "speed_min_mps", "users", 1.0, strict_min=0),
        speed_max_mps=_num(us, "speed_max_mps", "users", 2.0, strict_min=0),
        pause_max_s=_num(us, "pause_max_s", "users", 0.0, minimum=0.0),
    )
    if users.speed_max_mps < users.speed_min_mps:
        raise ValidationError("users.speed_max_mps", "must be >= users.speed_min_mps")

    sm = _expect_mapping(raw.get("sim"), "sim")
    _check_keys(sm, {"duration_s", "repeats", "root_seed", "service_model"}, "sim")
    sim = SimSpec(
        duration_s=_num(sm, "duration_s", "sim", 1000.0, strict_min=0),
        repeats=_int(sm, "repeats", "sim", 1, minimum=1),
        root_seed=_int(sm, "root_seed", "sim", 42),
        service_model=_str(sm, "service_model", "sim", "deterministic",
                           choices={"deterministic", "exponential"}),
    )

    events = _parse_events(raw.get("events"), world, sim, edges, uavs)
    sweeps = _parse_sweeps(raw.get("sweeps"))

    return ScenarioSpec(world=world, network=network, edges=tuple(edges), cloud=cloud,
                        uavs=uavs, apps=tuple(apps), users=users, sim=sim,
                        events=tuple(events), sweeps=sweeps, network_preset=preset)


def _parse_events(node, world, sim, edges, uavs) -> list[DynamicEventSpec]:
    if node is None:
        return []
    if not isinstance(node, list):
        raise ValidationError("events", "expected a list")
    edge_ids = {e.id for e in edges}
    out = []
    for i, ev in enumerate(node):
        p = f"events[{i}]"
        ev = _expect_mapping(ev, p)
        kind = _str(ev, "kind", p, choices=_EVENT_KINDS)
        time = _num(ev, "time", p, minimum=0.0)
        if time > sim.duration_s:
            raise ValidationError(f"{p}.time", f"beyond the run duration {sim.duration_s}")
        if kind in ("server_failure", "server_restore"):
            _check_keys(ev, {"kind", "time", "server"}, p)
            server = _str(ev, "server", p)
            if server not in edge_ids and not _is_uav_id(server, uavs.fleet_size):
                raise ValidationError(f"{p}.server", f"unknown server id {server!r}")
            params = (("server", server),)
        elif kind == "capacity_surge":
            _check_keys(ev, {"kind", "time", "multiplier"}, p)
            params = (("multiplier", _num(ev, "multiplier", p, strict_min=0)),)
        else:  # user_burst
            _check_keys(ev, {"kind", "time", "count", "x", "y", "mobile"}, p)
            x = _num(ev, "x", p)
            y = _num(ev, "y", p)
            if not (0.0 <= x <= world.x_max and 0.0 <= y <= world.y_max):
                raise ValidationError(p, f"burst position ({x}, {y}) outside the world bounds")
            params = (("count", _int(ev, "count", p, minimum=0)),
                      ("mobile", _bool(ev, "mobile", p, True)),
                      ("x", x), ("y", y))
        out.append(DynamicEventSpec(time=time, kind=kind, params=params))
    return out


def _is_uav_id(server_id: str, fleet_size: int) -> bool:
    if not server_id.startswith("uav_"):
        return False
    try:
        return 0 <= int(server_id[4:]) < fleet_size
    except ValueError:
        return False


def _parse_sweeps(node) -> tuple:
    if node is None:
        return ()
    if not isinstance(node, dict):
        raise ValidationError("sweeps", "expected a mapping of axis -> value list")
    out = []
    head = [a for a in ("users", "uavs") if a in node]
    tail = sorted(a for a in node if a not in ("users", "uavs"))
    for axis in head + tail:     # canonical axis order, independent of file order
        values = node[axis]
        p = f"sweeps.{axis}"
        if axis not in AXIS_PATHS and not _dotted_path_ok(axis):
            raise ValidationError(p, "unknown sweep axis")
        if not isinstance(values, list) or not values:
            raise ValidationError(p, "expected a non-empty list of values")
        uniq = []
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValidationError(p, f"axis values must be numbers, got {v!r}")
            if v in uniq:
                log.warning("sweeps.%s: duplicate value %r dropped", axis, v)
            else:
                uniq.append(v)
        out.append((axis, tuple(uniq)))
    return tuple(out)


def _dotted_path_ok(axis: str) -> bool:
    return all(part.isidentifier() for part in axis.split(".")) and "." in axis


# --------------------------------------------------------------------------
# sweep expansion
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """One concrete simulation run: a resolved spec, its sweep coordinates,
    the repeat index and the derived seed."""

    spec: ScenarioSpec
    axes: tuple            # ((axis, value), ...) in canonical order
    repeat: int
    seed: int


def _axis_path(axis: str) -> tuple:
    return AXIS_PATHS.get(axis, tuple(axis.split(".")))


def _dict_get(d: dict, path: tuple):
    for part in path:
        if not isinstance(d, dict) or part not in d:
            raise ValidationError(".".join(path), "sweep axis path not found in scenario")
        d = d[part]
    return d


def _dict_set(d: dict, path: tuple, value):
    for part in path[:-1]:
        d = d.setdefault(part, {})
    last = path[-1]
    # preserve integer-typed fields such as counts
    if isinstance(d.get(last), int) and not isinstance(d.get(last), bool):
        value = int(value)
    d[last] = value


def run_seed(root_seed: int, material: tuple, repeat: int) -> int:
    return derive_seed(root_seed, "run", repr(material), repeat)


def expand_sweep(spec: ScenarioSpec) -> list[RunConfig]:
    """Cartesian product of sweep axes times repeat indices.

    Per-run seeds derive from (root seed, the run's non-default axis values,
    repeat index), so runs keep their seeds when unrelated axis values are
    added or removed.
    """
    base = spec.to_dict()
    ordered = list(spec.sweeps)   # already in canonical axis order
    configs: list[RunConfig] = []
    value_lists = [vals for _, vals in ordered] or [()]
    combos = itertools.product(*value_lists) if ordered else [()]
    for combo in combos:
        pairs = tuple(zip((a for a, _ in ordered), combo))
        over = json.loads(json.dumps(base))
        over.pop("sweeps", None)
        material = []
        for axis, value in pairs:
            path = _axis_path(axis)
            if _dict_get(base, path) != value:
                material.append((axis, value))
            _dict_set(over, path, value)
        run_spec = _build(over)
        for r in range(spec.sim.repeats):
            configs.append(RunConfig(
                spec=run_spec, axes=pairs, repeat=r,
                seed=run_seed(spec.sim.root_seed, tuple(material), r),
            ))
    return configs


def single_config(spec: ScenarioSpec, repeat: int) -> RunConfig:
    """The no-sweep run for a given repeat index."""
    return RunConfig(spec=spec, axes=(), repeat=repeat,
                     seed=run_seed(spec.sim.root_seed, (), repeat))


def apply_dynamic_event(event: DynamicEventSpec, world) -> None:
    """Dispatch a scheduled scenario mutation onto live world state.

    `world` is any object exposing fail_server/restore_server/surge_rates/
    add_users; in practice the running simulation.
    """
    params = event.params_dict()
    if event.kind == "server_failure":
        world.fail_server(params["server"])
    elif event.kind == "server_restore":
        world.restore_server(params["server"])
    elif event.kind == "capacity_surge":
        world.surge_rates(params["multiplier"])
    elif event.kind == "user_burst":
        world.add_users(params["count"], params["x"], params["y"], params["mobile"])
    else:
        raise ValueError(f"unknown dynamic event kind {event.kind!r}")
