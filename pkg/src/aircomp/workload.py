"""Users, application profiles, task generation and random-waypoint mobility."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class AppProfile:
    """SLA tuple of one application type.

    A task of this profile succeeds when network + queueing + processing
    delay is at most `max_delay_s` (inclusive).
    """

    name: str
    mean_interarrival_s: float
    comp_load: float
    max_delay_s: float
    task_size_bits: float

    def __post_init__(self):
        for field in ("mean_interarrival_s", "comp_load", "max_delay_s", "task_size_bits"):
            if getattr(self, field) <= 0:
                raise ValueError(f"app {self.name!r}: {field} must be strictly positive")

    @property
    def demand(self) -> float:
        """Long-run offered load of one user running this app, units/second."""
        return self.comp_load / self.mean_interarrival_s


class Task:
    __slots__ = ("id", "app", "owner", "created_at", "target", "tier",
                 "net_s", "queue_s", "proc_s", "done", "success")

    def __init__(self, id: int, app: AppProfile, owner: int, created_at: float):
        self.id = id
        self.app = app
        self.owner = owner
        self.created_at = created_at
        self.target = None
        self.tier = None
        self.net_s = None
        self.queue_s = None
        self.proc_s = None
        self.done = False
        self.success = False


def judge_task(net_s: float, queue_s: float, proc_s: float, max_delay_s: float) -> bool:
    """Inclusive deadline check on the summed delay components."""
    return net_s + queue_s + proc_s <= max_delay_s


def next_task_time(app: AppProfile, rng, now: float, rate_multiplier: float = 1.0) -> float:
    """Next Poisson arrival for this user/app stream."""
    return now + rng.exponential(app.mean_interarrival_s / rate_multiplier)


@dataclass
class Leg:
    """One movement segment: pause at the origin until `depart`, then travel
    straight to the destination, arriving at `arrive`."""

    x0: float
    y0: float
    x1: float
    y1: float
    speed: float
    depart: float
    arrive: float


class User:
    __slots__ = ("id", "index", "mobile", "leg", "x", "y")

    def __init__(self, index: int, x: float, y: float, mobile: bool = True):
        self.id = f"u{index}"
        self.index = index
        self.mobile = mobile
        self.x = x
        self.y = y
        self.leg = None  # nomadic users keep a fixed position


def rwp_next_leg(user: User, x_max: float, y_max: float, rng, now: float,
                 speed_min: float, speed_max: float, pause_max: float = 0.0) -> Leg:
    """Draw the next random-waypoint leg starting from the user's current spot."""
    x0, y0 = position_at(user, now)
    x1 = rng.uniform(0.0, x_max)
    y1 = rng.uniform(0.0, y_max)
    speed = rng.uniform(speed_min, speed_max)
    pause = rng.uniform(0.0, pause_max) if pause_max > 0.0 else 0.0
    depart = now + pause
    dist = math.hypot(x1 - x0, y1 - y0)
    leg = Leg(x0, y0, x1, y1, speed, depart, depart + dist / speed)
    user.leg = leg
    return leg


def position_at(user: User, t: float) -> tuple[float, float]:
    """Linear interpolation along the current leg, clamped at both ends."""
    leg = user.leg
    if leg is None:
        return user.x, user.y
    if t <= leg.depart:
        return leg.x0, leg.y0
    if t >= leg.arrive:
        return leg.x1, leg.y1
    f = (t - leg.depart) / (leg.arrive - leg.depart)
    return leg.x0 + (leg.x1 - leg.x0) * f, leg.y0 + (leg.y1 - leg.y0) * f


def per_user_demand(apps) -> float:
    """Offered load of one user running every profile once, units/second."""
    return sum(a.demand for a in apps)
