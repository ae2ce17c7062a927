"""Local frame conversion, terrain elevation and obstacle geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

EARTH_RADIUS = 6378137.0
_DEG = math.pi / 180.0
# small-area bound on |lat - lat0| and |lon - lon0|, degrees
MAX_OFFSET_DEG = 1.0


class GeoPoint(NamedTuple):
    lat: float
    lon: float


class LocalPoint(NamedTuple):
    """East/north/up offsets in meters from the workspace origin."""

    x: float
    y: float
    z: float = 0.0


def _check_geo(p: GeoPoint) -> None:
    if not (math.isfinite(p.lat) and math.isfinite(p.lon)):
        raise ValueError(f"non-finite coordinate {p}")
    if not -90.0 <= p.lat <= 90.0 or not -180.0 <= p.lon <= 180.0:
        raise ValueError(f"coordinate out of range {p}")


def gps_to_local(p: GeoPoint, origin: GeoPoint) -> LocalPoint:
    """Equirectangular projection of ``p`` about ``origin``.

    Only meant for sub-kilometer areas; points more than one degree away
    from the origin are rejected.
    """
    p, origin = GeoPoint(*p), GeoPoint(*origin)
    _check_geo(p)
    _check_geo(origin)
    dlat = p.lat - origin.lat
    dlon = p.lon - origin.lon
    if abs(dlat) >= MAX_OFFSET_DEG or abs(dlon) >= MAX_OFFSET_DEG:
        raise ValueError(f"{p} is too far from origin {origin} for a local projection")
    x = dlon * math.cos(origin.lat * _DEG) * EARTH_RADIUS * _DEG
    y = dlat * EARTH_RADIUS * _DEG
    return LocalPoint(x, y, 0.0)


def local_to_gps(p, origin: GeoPoint) -> GeoPoint:
    """Inverse of :func:`gps_to_local`; the z component is ignored."""
    origin = GeoPoint(*origin)
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("non-finite local point")
    lat = origin.lat + y / (EARTH_RADIUS * _DEG)
    lon = origin.lon + x / (math.cos(origin.lat * _DEG) * EARTH_RADIUS * _DEG)
    return GeoPoint(lat, lon)


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned box anchored at its south-west corner."""

    origin: GeoPoint
    extent_x: float
    extent_y: float
    h_max: float
    ne: GeoPoint | None = None

    def __post_init__(self):
        object.__setattr__(self, "origin", GeoPoint(*self.origin))
        if self.ne is not None:
            object.__setattr__(self, "ne", GeoPoint(*self.ne))
        _check_geo(self.origin)
        for name in ("extent_x", "extent_y", "h_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.ne is None:
            # the GPS corners define the box; snap extents to what they imply
            ne = local_to_gps((self.extent_x, self.extent_y), self.origin)
            back = gps_to_local(ne, self.origin)
            object.__setattr__(self, "ne", ne)
            object.__setattr__(self, "extent_x", back.x)
            object.__setattr__(self, "extent_y", back.y)

    @classmethod
    def from_corners(cls, sw: GeoPoint, ne: GeoPoint, h_max: float) -> "Workspace":
        ne_local = gps_to_local(ne, sw)
        if not (ne_local.x > 0 and ne_local.y > 0):
            raise ValueError("corner_ne must lie north-east of corner_sw")
        return cls(GeoPoint(*sw), ne_local.x, ne_local.y, h_max, GeoPoint(*ne))

    @property
    def corner_ne(self) -> GeoPoint:
        return self.ne

    def contains(self, p, tol: float = 1e-9) -> bool:
        x, y = float(p[0]), float(p[1])
        ok = -tol <= x <= self.extent_x + tol and -tol <= y <= self.extent_y + tol
        if len(p) > 2:
            ok = ok and -tol <= float(p[2]) <= self.h_max + tol
        return ok


@dataclass(frozen=True, eq=False)
class TerrainGrid:
    """Regular elevation grid; ``heights[iy, ix]`` sits at ``(x0 + ix*cell, y0 + iy*cell)``."""

    nx: int
    ny: int
    x0: float
    y0: float
    cell: float
    heights: np.ndarray = field(repr=False)

    def __post_init__(self):
        h = np.array(self.heights, dtype=float).reshape(self.ny, self.nx)
        if self.nx < 2 or self.ny < 2:
            raise ValueError("terrain grid needs at least 2x2 nodes")
        if not self.cell > 0:
            raise ValueError("terrain cell size must be positive")
        if not np.all(np.isfinite(h)):
            raise ValueError("terrain heights must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @classmethod
    def constant(cls, height: float) -> "TerrainGrid":
        # boundary clamping makes a single cell cover the whole plane
        return cls(2, 2, 0.0, 0.0, 1.0, np.full((2, 2), float(height)))

    def __eq__(self, other):
        if not isinstance(other, TerrainGrid):
            return NotImplemented
        return (
            (self.nx, self.ny, self.x0, self.y0, self.cell)
            == (other.nx, other.ny, other.x0, other.y0, other.cell)
            and np.array_equal(self.heights, other.heights)
        )

    def elevation(self, x, y):
        """Bilinear interpolation, clamped to the grid boundary. Vectorized."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = self.heights
        if h.min() == h.max():
            out = np.full(np.broadcast(x, y).shape, h[0, 0])
            return out if out.ndim else float(out)
        gx = np.clip((x - self.x0) / self.cell, 0.0, self.nx - 1.0)
        gy = np.clip((y - self.y0) / self.cell, 0.0, self.ny - 1.0)
        # snap round-off so queries at nodes return the stored height exactly
        gx = np.where(np.abs(gx - np.round(gx)) < 1e-9, np.round(gx), gx)
        gy = np.where(np.abs(gy - np.round(gy)) < 1e-9, np.round(gy), gy)
        ix = np.minimum(np.floor(gx).astype(np.intp), self.nx - 2)
        iy = np.minimum(np.floor(gy).astype(np.intp), self.ny - 2)
        fx = gx - ix
        fy = gy - iy
        h00 = h[iy, ix]
        h10 = h[iy, ix + 1]
        h01 = h[iy + 1, ix]
        h11 = h[iy + 1, ix + 1]
        gx_, gy_ = 1.0 - fx, 1.0 - fy
        out = (h00 * gx_ + h10 * fx) * gy_ + (h01 * gx_ + h11 * fx) * fy
        return out if out.ndim else float(out)


def terrain_elevation(grid: TerrainGrid, x, y):
    return grid.elevation(x, y)


def load_terrain_grid(path) -> TerrainGrid:
    """Read a plain-text grid: header ``nx ny x0 y0 cell`` then ny rows, north first."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty terrain file")
    head = lines[0].split()
    if len(head) != 5:
        raise ValueError(f"{path}: header must be 'nx ny x0 y0 cell'")
    nx, ny = int(head[0]), int(head[1])
    x0, y0, cell = (float(v) for v in head[2:])
    rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    if len(rows) != ny or any(len(r) != nx for r in rows):
        raise ValueError(f"{path}: expected {ny} rows of {nx} heights")
    heights = np.array(rows[::-1])
    return TerrainGrid(nx, ny, x0, y0, cell, heights)


def save_terrain_grid(grid: TerrainGrid, path) -> None:
    lines = [f"{grid.nx} {grid.ny} {grid.x0!r} {grid.y0!r} {grid.cell!r}"]
    for row in grid.heights[::-1]:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class Obstacle:
    """Vertical cylinder. Only the ground disk enters the safety cost."""

    center: LocalPoint
    radius: float
    height: float
    danger: float = 1.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        object.__setattr__(self, "center", LocalPoint(*c))
        if not self.radius > 0:
            raise ValueError(f"obstacle radius must be positive, got {self.radius}")
        if not self.height > 0:
            raise ValueError(f"obstacle height must be positive, got {self.height}")
        if not self.danger >= 0:
            raise ValueError(f"obstacle danger must be >= 0, got {self.danger}")


def chord_metrics(ax, ay, bx, by, cx, cy, r):
    """Broadcasting kernel for :func:`segment_obstacle_metrics`.

    Returns ``(d, l)``: distance from the segment midpoint to the disk center
    and length of the segment inside the open disk.
    """
    dx = bx - ax
    dy = by - ay
    fx = ax - cx
    fy = ay - cy
    d = np.hypot(fx + 0.5 * dx, fy + 0.5 * dy)
    a = dx * dx + dy * dy
    b = dx * fx + dy * fy
    c = fx * fx + fy * fy - r * r
    disc = b * b - a * c
    hit = (disc > 0) & (a > 0)
    safe_a = np.where(hit, a, 1.0)
    root = np.sqrt(np.where(hit, disc, 0.0))
    t0 = np.maximum((-b - root) / safe_a, 0.0)
    t1 = np.minimum((-b + root) / safe_a, 1.0)
    length = np.where(hit, np.maximum(t1 - t0, 0.0) * np.sqrt(a), 0.0)
    return d, length


def segment_obstacle_metrics(a, b, obs: Obstacle) -> tuple[float, float]:
    """Midpoint distance and covered length of segment ``ab`` against ``obs``, in the xy plane."""
    d, length = chord_metrics(
        float(a[0]), float(a[1]), float(b[0]), float(b[1]),
        obs.center.x, obs.center.y, obs.radius,
    )
    return float(d), float(length)
