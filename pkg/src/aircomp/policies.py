"""Decision logic: offload target selection, demand-driven UAV placement,
fleet relocation, and the external policy hook boundary."""

from __future__ import annotations

import json
import logging
import math
import subprocess
from dataclasses import dataclass

from .servers import Server, Tier

log = logging.getLogger("aircomp.policies")


# --------------------------------------------------------------------------
# offload target selection
# --------------------------------------------------------------------------

@dataclass
class OffloadDecision:
    task_id: int
    chosen: str                      # server id, or "cloud" fallback
    candidates: tuple                # ((server_id, queueing_delay), ...)


def select_target(candidates: list[Server], now: float) -> Server | None:
    """Pick the connected server with the lowest queueing delay.

    Ties go to edges before UAVs, then to the lower server index. Returns
    None when there is no candidate, which means fall back to the cloud.
    """
    best = None
    best_key = None
    for s in candidates:
        d = s.busy_until - now
        if d < 0.0:
            d = 0.0
        key = (d, s.tier, s.index)
        if best_key is None or key < best_key:
            best_key = key
            best = s
    return best


# --------------------------------------------------------------------------
# capacity planning
# --------------------------------------------------------------------------

@dataclass
class AreaDemand:
    area: int
    offered_load: float       # units/second from users currently in the area
    edge_capacity: float      # summed capacity of alive edges centred there
    deficit: float            # max(0, offered_load - edge_capacity)


def area_demand(user_areas, per_user_load: float, grid, edges) -> list[AreaDemand]:
    """Capacity gap per area.

    `user_areas` is an iterable of area indices, one entry per user at their
    current position; `per_user_load` is the offered units/second of one user.
    """
    load = [0.0] * grid.n_areas
    for a in user_areas:
        load[a] += per_user_load
    cap = [0.0] * grid.n_areas
    for e in edges:
        if e.alive:
            cap[grid.area_of(e.x, e.y)] += e.capacity
    return [
        AreaDemand(a, load[a], cap[a], max(0.0, load[a] - cap[a]))
        for a in range(grid.n_areas)
    ]


def allocate_uavs(demands: list[AreaDemand], uav_capacity: float, fleet_size: int) -> list[int]:
    """Greedy fleet split: serve areas in descending deficit order, then cycle
    leftover UAVs over areas in descending offered-load order."""
    if fleet_size < 0:
        raise ValueError("fleet_size must be >= 0")
    n = len(demands)
    counts = [0] * n
    left = fleet_size
    by_deficit = sorted(demands, key=lambda d: (-d.deficit, d.area))
    for d in by_deficit:
        if left == 0:
            break
        if d.deficit <= 0.0:
            continue
        need = math.ceil(d.deficit / uav_capacity)
        take = min(need, left)
        counts[d.area] += take
        left -= take
    if left > 0 and n > 0:
        by_load = sorted(demands, key=lambda d: (-d.offered_load, d.area))
        i = 0
        while left > 0:
            counts[by_load[i % n].area] += 1
            left -= 1
            i += 1
    return counts


def plan_relocation(uavs: list[Server], target_counts: list[int],
                    area_centers: list[tuple[float, float]],
                    speed: float, now: float, instant: bool) -> list[tuple]:
    """Minimal reassignment toward the target per-area counts.

    UAVs already committed to a satisfied area stay put; UAVs in transit are
    never diverted mid-flight. Returns (uav, dest_area, arrive_time) moves.
    """
    n = len(target_counts)
    committed = [0] * n
    movable: list[list[Server]] = [[] for _ in range(n)]
    pool: list[Server] = []
    for u in uavs:
        if not u.alive:
            continue
        if u.area is None:
            pool.append(u)
        else:
            committed[u.area] += 1
            if not u.in_transit:
                movable[u.area].append(u)
    for a in range(n):
        surplus = committed[a] - target_counts[a]
        # highest-index serving UAVs leave first; in-transit ones keep flying
        movable[a].sort(key=lambda u: u.index, reverse=True)
        for u in movable[a][:max(0, surplus)]:
            committed[a] -= 1
            pool.append(u)
    pool.sort(key=lambda u: u.index)
    moves = []
    for a in range(n):
        want = target_counts[a] - committed[a]
        for _ in range(min(want, len(pool)) if want > 0 else 0):
            u = pool.pop(0)
            cx, cy = area_centers[a]
            if instant or (u.x == cx and u.y == cy):
                moves.append((u, a, now))
            else:
                dist = math.hypot(cx - u.x, cy - u.y)
                moves.append((u, a, now + dist / speed))
    return moves


# --------------------------------------------------------------------------
# external policy hook
# --------------------------------------------------------------------------

class InvalidAction(ValueError):
    pass


class PolicyHook:
    """Override points for external decision logic.

    Returning None (the default) keeps the built-in policy for that step, so a
    registered no-op hook reproduces the hook-free run exactly. Invalid
    actions are rejected and the default policy applies for that step.
    """

    def on_offload(self, obs: dict) -> dict | None:
        return None

    def on_relocation(self, obs: dict) -> dict | None:
        return None

    def on_task_reward(self, info: dict) -> None:
        pass

    def on_interval(self, info: dict) -> None:
        pass

    def close(self) -> None:
        pass


def validate_offload_action(action: dict, candidate_ids: list[str]) -> str:
    """Returns the chosen target id ('cloud' allowed). Raises InvalidAction."""
    if not isinstance(action, dict):
        raise InvalidAction(f"offload action must be a mapping, got {type(action).__name__}")
    target = action.get("target")
    if target == "cloud" or target in candidate_ids:
        return target
    raise InvalidAction(f"target {target!r} not among {candidate_ids + ['cloud']}")


def validate_relocation_action(action: dict, n_areas: int, fleet_size: int) -> list[int]:
    if not isinstance(action, dict):
        raise InvalidAction(f"relocation action must be a mapping, got {type(action).__name__}")
    counts = action.get("counts")
    if (not isinstance(counts, list) or len(counts) != n_areas
            or any((not isinstance(c, int)) or isinstance(c, bool) or c < 0 for c in counts)):
        raise InvalidAction(f"counts must be {n_areas} non-negative integers")
    if sum(counts) > fleet_size:
        raise InvalidAction(f"counts sum {sum(counts)} exceeds fleet size {fleet_size}")
    return counts


class StdioHookAdapter(PolicyHook):
    """Drive an external agent over its stdin/stdout, one JSON object per line.

    Decision points send one observation line and read back one action line;
    reward and interval records are sent without expecting a reply. An empty
    object (or `null`) keeps the default policy for that step.
    """

    def __init__(self, cmd: str):
        self.proc = subprocess.Popen(
            cmd, shell=True, text=True, bufsize=1,
            stdin=subprocess.PIPE, stdout=subprocess.PIPE,
        )

    def _exchange(self, obs: dict) -> dict | None:
        self.proc.stdin.write(json.dumps(obs, sort_keys=True) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if not line:
            raise RuntimeError("hook agent closed its stdout")
        reply = json.loads(line)
        if reply is None or reply == {}:
            return None
        return reply

    def _notify(self, obs: dict) -> None:
        self.proc.stdin.write(json.dumps(obs, sort_keys=True) + "\n")
        self.proc.stdin.flush()

    def on_offload(self, obs: dict) -> dict | None:
        return self._exchange(dict(obs, type="offload"))

    def on_relocation(self, obs: dict) -> dict | None:
        return self._exchange(dict(obs, type="relocation"))

    def on_task_reward(self, info: dict) -> None:
        self._notify(dict(info, type="reward"))

    def on_interval(self, info: dict) -> None:
        self._notify(dict(info, type="interval"))

    def close(self) -> None:
        if self.proc.stdin:
            self.proc.stdin.close()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
