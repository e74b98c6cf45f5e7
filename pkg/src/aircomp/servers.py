"""Compute entities (edge, UAV, cloud) with one FIFO queue each.

A server tracks its earliest idle time (`busy_until`), credits busy seconds
when tasks actually complete, and can be failed/restored by scenario events.
"""

from __future__ import annotations

from enum import IntEnum

from .sim_core import EventKind


class Tier(IntEnum):
    # rank doubles as offload tie-break order: edge preferred, then UAV
    EDGE = 0
    UAV = 1
    CLOUD = 2


class ServerDown(RuntimeError):
    pass


class InvalidTransition(RuntimeError):
    pass


def processing_time(load: float, capacity: float) -> float:
    """Deterministic service: computational units over units/second."""
    if load <= 0:
        raise ValueError("task load must be positive")
    if capacity <= 0:
        raise ValueError("server capacity must be positive")
    return load / capacity


class Server:
    __slots__ = (
        "id", "index", "tier", "x", "y", "altitude", "radius", "capacity",
        "alive", "busy_until", "busy_accum", "tasks_done",
        "dead_since", "dead_accum", "pending",
        "in_transit", "area", "flight",
    )

    def __init__(self, id: str, index: int, tier: Tier, capacity: float,
                 x: float | None = None, y: float | None = None,
                 radius: float | None = None, altitude: float | None = None):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        if tier != Tier.CLOUD and (radius is None or radius <= 0):
            raise ValueError(f"{tier.name} server needs a positive coverage radius")
        self.id = id
        self.index = index
        self.tier = tier
        self.x = x
        self.y = y
        self.altitude = altitude
        self.radius = radius
        self.capacity = capacity
        self.alive = True
        self.busy_until = 0.0
        self.busy_accum = 0.0          # service seconds credited at completion
        self.tasks_done = 0
        self.dead_since = None
        self.dead_accum = 0.0
        self.pending = {}              # task id -> completion event seq
        self.in_transit = False        # UAV flying; not a candidate while True
        self.area = None               # UAV: area currently served / flown to
        self.flight = None             # UAV: (x0, y0, x1, y1, depart, arrive)

    def queueing_delay(self, now: float) -> float:
        d = self.busy_until - now
        return d if d > 0.0 else 0.0

    def accept(self, arrival: float, proc: float) -> tuple[float, float]:
        """FIFO admission. Returns (queueing_delay, completion_time)."""
        if not self.alive:
            raise ServerDown(self.id)
        start = self.busy_until if self.busy_until > arrival else arrival
        completion = start + proc
        self.busy_until = completion
        return start - arrival, completion

    def credit(self, proc: float) -> None:
        self.busy_accum += proc
        self.tasks_done += 1

    def utilization(self, horizon: float) -> float:
        """Fraction of in-service time spent processing, in [0, 1].

        Intervals spent failed are excluded from the denominator.
        """
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        dead = self.dead_accum
        if self.dead_since is not None:
            dead += horizon - self.dead_since
        alive_time = horizon - dead
        if alive_time <= 0:
            return 0.0
        u = self.busy_accum / alive_time
        return 1.0 if u > 1.0 else u

    def fail(self, t: float) -> list[tuple]:
        """Mark dead; drops the queue. Returns the (task_id, event_seq) pairs
        that were pending so the caller can tombstone and record them."""
        if not self.alive:
            raise InvalidTransition(f"{self.id} is already down")
        self.alive = False
        self.dead_since = t
        self.busy_until = t
        killed = list(self.pending.items())
        self.pending.clear()
        return killed

    def restore(self, t: float) -> None:
        if self.alive:
            raise InvalidTransition(f"{self.id} is already up")
        self.alive = True
        self.dead_accum += t - self.dead_since
        self.dead_since = None
        self.busy_until = t


def enqueue_task(server: Server, task_id: int, load: float, arrival: float,
                 engine, proc: float | None = None) -> tuple[float, float, float]:
    """Admit a task and schedule its completion event.

    Returns (queueing_delay, processing_delay, completion_time). `proc`
    overrides the deterministic service time (used by the exponential
    service model).
    """
    if proc is None:
        proc = processing_time(load, server.capacity)
    qd, completion = server.accept(arrival, proc)
    seq = engine.schedule(completion, EventKind.TASK_COMPLETION,
                          (task_id, server.index))
    server.pending[task_id] = seq
    return qd, proc, completion
