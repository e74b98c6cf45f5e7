"""One seeded simulation run: entities wired to the event engine, metrics out."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import scenario as scn
from .policies import (InvalidAction, OffloadDecision, allocate_uavs, area_demand,
                       plan_relocation, select_target, validate_offload_action,
                       validate_relocation_action)
from .servers import Server, Tier, enqueue_task
from .sim_core import Engine, EventKind, derive_stream
from .topology import network_delay
from .workload import Task, User, per_user_demand, position_at, rwp_next_leg

log = logging.getLogger("aircomp.simulation")

CLOUD_ID = "cloud"


@dataclass
class RunResult:
    """Aggregated outcome of a single repeat; cheap to pickle across processes."""

    axes: tuple
    repeat: int
    seed: int
    duration: float
    tasks_total: int = 0
    tasks_ok: int = 0
    app_total: dict = field(default_factory=dict)
    app_ok: dict = field(default_factory=dict)
    tier_counts: dict = field(default_factory=dict)
    svc_sum: float = 0.0
    svc_n: int = 0
    edge_util: float | None = None
    uav_util: float | None = None
    killed_by_failure: int = 0
    pos_min: tuple = (0.0, 0.0)
    pos_max: tuple = (0.0, 0.0)
    events_dispatched: int = 0
    events_cancelled: int = 0
    events_remaining: int = 0
    final_clock: float = 0.0
    task_rows: list | None = None
    event_lines: list | None = None

    @property
    def success_rate(self) -> float | None:
        return self.tasks_ok / self.tasks_total if self.tasks_total else None

    @property
    def mean_service_time(self) -> float | None:
        return self.svc_sum / self.svc_n if self.svc_n else None

    def app_success_rate(self, name: str) -> float | None:
        total = self.app_total.get(name, 0)
        return self.app_ok.get(name, 0) / total if total else None

    def tier_share(self, tier: str) -> float | None:
        return self.tier_counts.get(tier, 0) / self.tasks_total if self.tasks_total else None


class Simulation:
    """Builds the world from a run config and drives it to the horizon."""

    def __init__(self, cfg: scn.RunConfig, hook=None,
                 collect_tasks: bool = False, collect_events: bool = False):
        self.cfg = cfg
        self.spec = cfg.spec
        self.seed = cfg.seed
        self.hook = hook
        self.collect_tasks = collect_tasks
        self.event_lines = [] if collect_events else None

        spec = self.spec
        self.grid = spec.world.grid()
        self.x_max = spec.world.x_max
        self.y_max = spec.world.y_max
        self.duration = spec.sim.duration_s
        self.net = spec.network
        self.apps = spec.apps
        self.demand_per_user = per_user_demand(self.apps)
        self.exp_service = spec.sim.service_model == "exponential"

        self.engine = Engine(log_sink=self._log_event if collect_events else None)
        self.engine.register(EventKind.TASK_ARRIVAL, self._on_task_arrival)
        self.engine.register(EventKind.TASK_COMPLETION, self._on_task_completion)
        self.engine.register(EventKind.USER_WAYPOINT_REACHED, self._on_waypoint)
        self.engine.register(EventKind.UAV_RELOCATION_TICK, self._on_relocation_tick)
        self.engine.register(EventKind.UAV_ARRIVED, self._on_uav_arrived)
        self.engine.register(EventKind.SCENARIO_EVENT, self._on_scenario_event)
        self.engine.register(EventKind.SIMULATION_END, lambda ev: None)

        # servers: edges first, then the UAV fleet, cloud last
        self.edges = [
            Server(e.id, i, Tier.EDGE, e.capacity, e.x, e.y, e.radius)
            for i, e in enumerate(spec.edges)
        ]
        cx, cy = self.x_max / 2.0, self.y_max / 2.0
        uv = spec.uavs
        self.uavs = [
            Server(f"uav_{k}", len(self.edges) + k, Tier.UAV, uv.capacity,
                   cx, cy, uv.radius, uv.altitude)
            for k in range(uv.fleet_size)
        ]
        for u in self.uavs:
            u.in_transit = True    # grounded until the first placement decision
        self.cloud = Server(CLOUD_ID, len(self.edges) + len(self.uavs), Tier.CLOUD,
                            spec.cloud.capacity)
        self.servers = self.edges + self.uavs + [self.cloud]
        self.server_by_id = {s.id: s for s in self.servers}
        self.coverage_servers = self.edges + self.uavs
        self.area_centers = [self.grid.cell_center(a) for a in range(self.grid.n_areas)]

        if self.exp_service:
            self._service_rng = {s.index: derive_stream(self.seed, "service", s.id)
                                 for s in self.servers}

        # per-app network delay is position independent
        self._net_delay = [
            {t: network_delay(a.task_size_bits, t, self.net) for t in Tier}
            for a in self.apps
        ]

        self.rate_mult = 1.0
        self.pending_tasks: dict[int, Task] = {}
        self.next_arrival_seq: dict[tuple, int] = {}
        self._task_counter = 0
        self._interval_tasks = 0
        self._interval_ok = 0
        self._minx = self._maxx = None
        self._miny = self._maxy = None

        self.result = RunResult(axes=cfg.axes, repeat=cfg.repeat, seed=cfg.seed,
                                duration=self.duration)
        self.result.app_total = {a.name: 0 for a in self.apps}
        self.result.app_ok = {a.name: 0 for a in self.apps}
        self.result.tier_counts = {"edge": 0, "uav": 0, "cloud": 0}
        if collect_tasks:
            self.result.task_rows = []

        self.users: list[User] = []
        self._wp_rng = {}
        self._arr_rng = {}
        n_nomadic = int(round(spec.users.nomadic_fraction * spec.users.count))
        for i in range(spec.users.count):
            rng = derive_stream(self.seed, "placement", i)
            self._make_user(i, rng.uniform(0.0, self.x_max), rng.uniform(0.0, self.y_max),
                            mobile=i >= n_nomadic, start=0.0)

    # -- construction helpers ------------------------------------------------

    def _make_user(self, index: int, x: float, y: float, mobile: bool, start: float):
        user = User(index, x, y, mobile=mobile)
        self.users.append(user)
        self._audit(x, y)
        if mobile:
            self._wp_rng[index] = derive_stream(self.seed, "waypoint", index)
            leg = rwp_next_leg(user, self.x_max, self.y_max, self._wp_rng[index], start,
                               self.spec.users.speed_min_mps, self.spec.users.speed_max_mps,
                               self.spec.users.pause_max_s)
            self._audit(leg.x1, leg.y1)
            self.engine.schedule(leg.arrive, EventKind.USER_WAYPOINT_REACHED, (index,))
        for ai, app in enumerate(self.apps):
            rng = derive_stream(self.seed, "arrival", index, app.name)
            self._arr_rng[(index, ai)] = rng
            t = start + rng.exponential(app.mean_interarrival_s / self.rate_mult)
            seq = self.engine.schedule(t, EventKind.TASK_ARRIVAL, (index, ai))
            self.next_arrival_seq[(index, ai)] = seq

    def _audit(self, x: float, y: float):
        if self._minx is None or x < self._minx:
            self._minx = x
        if self._maxx is None or x > self._maxx:
            self._maxx = x
        if self._miny is None or y < self._miny:
            self._miny = y
        if self._maxy is None or y > self._maxy:
            self._maxy = y

    # -- event handlers ------------------------------------------------------

    def _on_task_arrival(self, ev):
        ui, ai = ev.payload
        now = ev.time
        user = self.users[ui]
        app = self.apps[ai]

        x, y = position_at(user, now)
        self._audit(x, y)
        candidates = []
        for s in self.coverage_servers:
            if not s.alive or s.in_transit:
                continue
            dx = x - s.x
            dy = y - s.y
            if dx * dx + dy * dy <= s.radius * s.radius:
                candidates.append(s)
        target = select_target(candidates, now) or self.cloud

        task_id = self._task_counter
        self._task_counter += 1
        if self.hook is not None:
            target = self._hook_offload(task_id, now, user, app, candidates, target)

        task = Task(task_id, app, ui, now)
        task.target = target.id
        task.tier = target.tier
        task.net_s = self._net_delay[ai][target.tier]
        proc = (self._service_rng[target.index].exponential(app.comp_load / target.capacity)
                if self.exp_service else None)
        task.queue_s, task.proc_s, _ = enqueue_task(
            target, task_id, app.comp_load, now + task.net_s, self.engine, proc)
        self.pending_tasks[task_id] = task

        res = self.result
        res.tasks_total += 1
        res.app_total[app.name] += 1
        res.tier_counts[target.tier.name.lower()] += 1
        self._interval_tasks += 1

        nxt = now + self._arr_rng[(ui, ai)].exponential(
            app.mean_interarrival_s / self.rate_mult)
        self.next_arrival_seq[(ui, ai)] = self.engine.schedule(
            nxt, EventKind.TASK_ARRIVAL, (ui, ai))

    def _hook_offload(self, task_id, now, user, app, candidates, default):
        decision = OffloadDecision(
            task_id=task_id, chosen=default.id,
            candidates=tuple((s.id, s.queueing_delay(now)) for s in candidates))
        obs = {
            "now": now, "task": task_id, "user": user.id, "app": app.name,
            "candidates": [
                {"id": s.id, "tier": s.tier.name.lower(),
                 "queueing_delay": s.queueing_delay(now)}
                for s in candidates
            ],
            "default": decision.chosen,
        }
        action = self.hook.on_offload(obs)
        if action is None:
            return default
        try:
            chosen = validate_offload_action(action, [sid for sid, _ in decision.candidates])
        except InvalidAction as exc:
            log.warning("hook offload action rejected: %s", exc)
            return default
        return self.cloud if chosen == CLOUD_ID else self.server_by_id[chosen]

    def _on_task_completion(self, ev):
        task_id, si = ev.payload
        task = self.pending_tasks.pop(task_id)
        srv = self.servers[si]
        srv.pending.pop(task_id, None)
        srv.credit(task.proc_s)
        total = task.net_s + task.queue_s + task.proc_s
        ok = total <= task.app.max_delay_s
        task.done = True
        task.success = ok
        res = self.result
        res.svc_sum += total
        res.svc_n += 1
        if ok:
            res.tasks_ok += 1
            res.app_ok[task.app.name] += 1
            self._interval_ok += 1
        if self.hook is not None:
            self.hook.on_task_reward({
                "now": ev.time, "task": task_id, "app": task.app.name,
                "success": bool(ok), "total_delay": total,
            })
        if self.collect_tasks:
            self._record(task)

    def _record(self, task):
        self.result.task_rows.append((
            task.id, task.app.name, task.tier.name.lower(), task.target,
            task.created_at, task.net_s if task.done else None,
            task.queue_s if task.done else None, task.proc_s if task.done else None,
            task.app.max_delay_s, task.done and task.success,
        ))

    def _on_waypoint(self, ev):
        ui = ev.payload[0]
        user = self.users[ui]
        leg = rwp_next_leg(user, self.x_max, self.y_max, self._wp_rng[ui], ev.time,
                           self.spec.users.speed_min_mps, self.spec.users.speed_max_mps,
                           self.spec.users.pause_max_s)
        self._audit(leg.x1, leg.y1)
        self.engine.schedule(leg.arrive, EventKind.USER_WAYPOINT_REACHED, (ui,))

    def _on_relocation_tick(self, ev):
        now = ev.time
        areas = []
        for user in self.users:
            x, y = position_at(user, now)
            self._audit(x, y)
            areas.append(self.grid.area_of(x, y))
        demands = area_demand(areas, self.demand_per_user * self.rate_mult,
                              self.grid, self.edges)
        fleet_alive = sum(1 for u in self.uavs if u.alive)
        counts = allocate_uavs(demands, self.spec.uavs.capacity, fleet_alive)
        if self.hook is not None:
            counts = self._hook_relocation(now, demands, counts, fleet_alive)
        moves = plan_relocation(self.uavs, counts, self.area_centers,
                                self.spec.uavs.speed_mps, now,
                                self.spec.uavs.instant_flight)
        for u, a, arrive in moves:
            u.area = a
            if arrive <= now:
                u.x, u.y = self.area_centers[a]
                u.in_transit = False
                u.flight = None
            else:
                u.flight = (u.x, u.y, *self.area_centers[a], now, arrive)
                u.in_transit = True
                self.engine.schedule(arrive, EventKind.UAV_ARRIVED, (u.index, a))
        if self.hook is not None:
            self.hook.on_interval({
                "now": now, "tasks": self._interval_tasks, "successes": self._interval_ok,
                "uav_counts": counts,
            })
            self._interval_tasks = 0
            self._interval_ok = 0
        self.engine.schedule(now + self.spec.uavs.relocation_period_s,
                             EventKind.UAV_RELOCATION_TICK, ())

    def _hook_relocation(self, now, demands, default_counts, fleet_alive):
        obs = {
            "now": now,
            "area_loads": [d.offered_load for d in demands],
            "edge_caps": [d.edge_capacity for d in demands],
            "deficits": [d.deficit for d in demands],
            "fleet": fleet_alive,
            "default_counts": list(default_counts),
            "uav_positions": [[u.x, u.y] for u in self.uavs],
        }
        action = self.hook.on_relocation(obs)
        if action is None:
            return default_counts
        try:
            return validate_relocation_action(action, self.grid.n_areas, fleet_alive)
        except InvalidAction as exc:
            log.warning("hook relocation action rejected: %s", exc)
            return default_counts

    def _on_uav_arrived(self, ev):
        idx, area = ev.payload
        u = self.servers[idx]
        u.x, u.y = self.area_centers[area]
        u.in_transit = False
        u.flight = None

    def _on_scenario_event(self, ev):
        scn.apply_dynamic_event(self.spec.events[ev.payload[0]], self)

    # -- dynamic world mutations (scenario event targets) ----------------------

    def fail_server(self, server_id: str):
        srv = self.server_by_id[server_id]
        for task_id, seq in srv.fail(self.engine.now):
            self.engine.cancel(seq)
            task = self.pending_tasks.pop(task_id)
            self.result.killed_by_failure += 1
            if self.collect_tasks:
                self._record(task)

    def restore_server(self, server_id: str):
        self.server_by_id[server_id].restore(self.engine.now)

    def surge_rates(self, multiplier: float):
        self.rate_mult = multiplier
        now = self.engine.now
        for (ui, ai), seq in list(self.next_arrival_seq.items()):
            if not self.engine.cancel(seq):
                continue
            app = self.apps[ai]
            nxt = now + self._arr_rng[(ui, ai)].exponential(
                app.mean_interarrival_s / multiplier)
            self.next_arrival_seq[(ui, ai)] = self.engine.schedule(
                nxt, EventKind.TASK_ARRIVAL, (ui, ai))

    def add_users(self, count: int, x: float, y: float, mobile: bool = True):
        for _ in range(count):
            self._make_user(len(self.users), x, y, mobile, self.engine.now)

    # -- run -------------------------------------------------------------------

    def _log_event(self, ev):
        entity, detail = _describe(ev, self)
        self.event_lines.append(f"{ev.time:.6f},{ev.seq},{ev.kind.name},{entity},{detail}")

    def run(self) -> RunResult:
        if self.uavs:
            self.engine.schedule(0.0, EventKind.UAV_RELOCATION_TICK, ())
        for i, event in enumerate(self.spec.events):
            self.engine.schedule(event.time, EventKind.SCENARIO_EVENT, (i,))
        self.engine.schedule(self.duration, EventKind.SIMULATION_END, ())
        summary = self.engine.run(until=self.duration)

        res = self.result
        # credit the horizon-clipped slice of work still queued or in service,
        # so utilization reflects busy time inside the horizon exactly
        for task in self.pending_tasks.values():
            self.servers[self.server_by_id[task.target].index].busy_accum += task.proc_s
        for s in self.servers:
            overhang = s.busy_until - self.duration
            if overhang > 0.0:
                s.busy_accum -= overhang
        if self.collect_tasks:
            for task in self.pending_tasks.values():
                self._record(task)    # still queued or in service at the horizon
        res.edge_util = (sum(s.utilization(self.duration) for s in self.edges)
                         / len(self.edges)) if self.edges else None
        res.uav_util = (sum(s.utilization(self.duration) for s in self.uavs)
                        / len(self.uavs)) if self.uavs else None
        res.events_dispatched = summary.dispatched
        res.events_cancelled = summary.cancelled
        res.events_remaining = summary.remaining
        res.final_clock = summary.final_clock
        res.pos_min = (self._minx, self._miny)
        res.pos_max = (self._maxx, self._maxy)
        if self.event_lines is not None:
            res.event_lines = self.event_lines
        return res


def _describe(ev, sim) -> tuple[str, str]:
    k = ev.kind
    if k == EventKind.TASK_ARRIVAL:
        ui, ai = ev.payload
        return f"u{ui}", sim.apps[ai].name
    if k == EventKind.TASK_COMPLETION:
        task_id, si = ev.payload
        return sim.servers[si].id, f"task{task_id}"
    if k == EventKind.USER_WAYPOINT_REACHED:
        return f"u{ev.payload[0]}", ""
    if k == EventKind.UAV_RELOCATION_TICK:
        return "fleet", ""
    if k == EventKind.UAV_ARRIVED:
        idx, area = ev.payload
        return sim.servers[idx].id, f"area{area}"
    if k == EventKind.SCENARIO_EVENT:
        event = sim.spec.events[ev.payload[0]]
        return event.kind, ";".join(f"{key}={value}" for key, value in event.params)
    return "sim", ""


def run_single(cfg: scn.RunConfig, hook=None, collect_tasks: bool = False,
               collect_events: bool = False) -> RunResult:
    """Build and run one repeat; the module-level entry used by the runner."""
    return Simulation(cfg, hook=hook, collect_tasks=collect_tasks,
                      collect_events=collect_events).run()
