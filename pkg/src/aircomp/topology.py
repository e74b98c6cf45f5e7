"""Ground-plane geometry (area grid, coverage disks) and the network delay model."""

from __future__ import annotations

import math
from dataclasses import dataclass


class OutOfBounds(ValueError):
    pass


# One-way access latency presets by flying-platform class, seconds.
# Values are midpoints of the propagation bands: low-altitude platforms
# 10-30 us, high-altitude platforms 50-85 us, low-earth-orbit 1.5-3 ms.
LATENCY_PRESETS = {
    "lap": 20e-6,
    "hap": 67.5e-6,
    "leo": 2.25e-3,
}
LATENCY_BANDS = {
    "lap": (10e-6, 30e-6),
    "hap": (50e-6, 85e-6),
    "leo": (1.5e-3, 3e-3),
}


@dataclass(frozen=True)
class AreaGrid:
    """rows x cols rectangular partition of the world. Cell edges belong to the
    lower-index cell so every in-bounds point maps to exactly one area."""

    rows: int
    cols: int
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and column")
        if self.x_max <= 0 or self.y_max <= 0:
            raise ValueError("world bounds must be positive")

    @property
    def n_areas(self) -> int:
        return self.rows * self.cols

    def area_of(self, x: float, y: float) -> int:
        if not (0.0 <= x <= self.x_max and 0.0 <= y <= self.y_max):
            raise OutOfBounds(f"position ({x}, {y}) outside [0, {self.x_max}] x [0, {self.y_max}]")
        # ceil assigns cell edges to the lower-index cell; the clamps absorb
        # float rounding at both world borders (x/cw can underflow to 0 or
        # land a hair above self.cols)
        col = min(max(math.ceil(x / (self.x_max / self.cols)) - 1, 0), self.cols - 1)
        row = min(max(math.ceil(y / (self.y_max / self.rows)) - 1, 0), self.rows - 1)
        return row * self.cols + col

    def cell_center(self, area: int) -> tuple[float, float]:
        row, col = divmod(area, self.cols)
        cw = self.x_max / self.cols
        ch = self.y_max / self.rows
        return ((col + 0.5) * cw, (row + 0.5) * ch)


def covered_by(x: float, y: float, server) -> bool:
    """Inclusive disk test against the server's ground projection.

    Flying servers use their horizontal position only; altitude does not
    shrink the disk. Cloud servers have no disk and are always reachable,
    so asking about one is a caller bug.
    """
    if server.radius is None:
        raise ValueError(f"server {server.id} has no coverage disk")
    dx = x - server.x
    dy = y - server.y
    return dx * dx + dy * dy <= server.radius * server.radius


@dataclass(frozen=True)
class DelayParams:
    data_rate_bps: float
    edge_latency_s: float
    uav_latency_s: float
    cloud_wan_latency_s: float

    def __post_init__(self):
        for name in ("data_rate_bps", "edge_latency_s", "uav_latency_s", "cloud_wan_latency_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


def network_delay(size_bits: float, tier, params: DelayParams) -> float:
    """Upload transmission plus per-tier access latency, seconds.

    Result download is not modelled; totals count upload, queueing and
    processing only.
    """
    if size_bits <= 0:
        raise ValueError("task size must be positive")
    base = size_bits / params.data_rate_bps
    name = getattr(tier, "name", str(tier)).upper()
    if name == "EDGE":
        return base + params.edge_latency_s
    if name == "UAV":
        return base + params.uav_latency_s
    if name == "CLOUD":
        return base + params.cloud_wan_latency_s
    raise ValueError(f"unknown tier {tier!r}")
