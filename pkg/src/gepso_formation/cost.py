"""Penalized path cost: length, obstacle, altitude and mission terms.

All functions accept paths as waypoint arrays of shape ``(..., W, 3)`` (or
``(..., N, W, 3)`` for a set of UAV paths) so that a whole swarm can be
scored in one call. Reductions always run over contiguous trailing axes,
which makes each row's result independent of how many rows are evaluated
together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .formation import UavPath, expand_points
from .geo import Obstacle, TerrainGrid, chord_metrics

if TYPE_CHECKING:
    from .scenario import Scenario

#: Stand-in for an infinite altitude penalty (waypoint at or below terrain).
INFEASIBLE = 1e18


@dataclass(frozen=True, eq=False)
class CentroidPath:
    """Formation centroid path ``W_0 .. W_{n+1}`` with fixed endpoints."""

    start: np.ndarray
    end: np.ndarray
    interior: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float).reshape(3))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float).reshape(3))
        inner = np.asarray(self.interior, dtype=float).reshape(-1, 3)
        if len(inner) < 1:
            raise ValueError("a centroid path needs at least one interior waypoint")
        object.__setattr__(self, "interior", inner)

    @property
    def n(self) -> int:
        return len(self.interior)

    @property
    def points(self) -> np.ndarray:
        return np.vstack([self.start, self.interior, self.end])

    @classmethod
    def from_points(cls, points) -> "CentroidPath":
        pts = np.asarray(points, dtype=float)
        return cls(pts[0], pts[-1], pts[1:-1])

    def __eq__(self, other):
        if not isinstance(other, CentroidPath):
            return NotImplemented
        return np.array_equal(self.points, other.points)


@dataclass(frozen=True)
class AltitudeBand:
    z_min: float
    z_max: float

    def __post_init__(self):
        if not 0 <= self.z_min < self.z_max:
            raise ValueError(f"need 0 <= z_min < z_max, got {self.z_min}, {self.z_max}")


@dataclass(frozen=True)
class MissionBand:
    d_min: float
    d_max: float

    def __post_init__(self):
        if not 0 <= self.d_min < self.d_max:
            raise ValueError(f"need 0 <= d_min < d_max, got {self.d_min}, {self.d_max}")


@dataclass(frozen=True)
class Penalties:
    range: float = 1.0
    safe: float = 1.0
    alt: float = 1.0
    mission: float = 1.0

    def __post_init__(self):
        for name in ("range", "safe", "alt", "mission"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"penalty {name} must be positive, got {v}")


@dataclass(frozen=True)
class CostBreakdown:
    range: float
    safe: float
    alt: float
    mission: float
    total: float = field(default=None)

    def __post_init__(self):
        if self.total is None:
            object.__setattr__(self, "total", self.range + self.safe + self.alt + self.mission)

    @property
    def feasible(self) -> bool:
        return self.alt < INFEASIBLE

    def as_dict(self) -> dict:
        return {
            "range": self.range,
            "safe": self.safe,
            "alt": self.alt,
            "mission": self.mission,
            "total": self.total,
            "feasible": self.feasible,
        }

    def __str__(self):
        def fmt(v):
            return "inf" if v >= INFEASIBLE else f"{v:.6g}"

        return "  ".join(
            f"{k}={fmt(getattr(self, k))}" for k in ("range", "safe", "alt", "mission", "total")
        )


def _points(path) -> np.ndarray:
    if isinstance(path, (CentroidPath,)):
        return path.points
    if isinstance(path, UavPath):
        return path.waypoints
    return np.asarray(path, dtype=float)


def _stack_paths(paths) -> np.ndarray:
    """Normalize a list of paths (or an array) to shape ``(..., N, W, 3)``."""
    if isinstance(paths, np.ndarray):
        return paths if paths.ndim >= 3 else paths[None]
    return np.stack([_points(p) for p in paths])


def _rowsum(a: np.ndarray, axes: int) -> np.ndarray:
    """Sum the trailing ``axes`` axes, row by row."""
    a = np.ascontiguousarray(a)
    return a.reshape(a.shape[: a.ndim - axes] + (-1,)).sum(axis=-1)


def path_length(points) -> np.ndarray:
    seg = np.diff(_points(points), axis=-2)
    return _rowsum(np.sqrt(_rowsum(seg * seg, 1)), 1)


def range_cost(path, p_range: float):
    return p_range * path_length(path)


def _obstacle_arrays(obstacles: Sequence[Obstacle]):
    cx = np.array([o.center.x for o in obstacles], dtype=float)
    cy = np.array([o.center.y for o in obstacles], dtype=float)
    r = np.array([o.radius for o in obstacles], dtype=float)
    s = np.array([o.danger for o in obstacles], dtype=float)
    return cx, cy, r, s


def _segment_safe(d, length, r):
    inside = d < r
    near = d <= length
    ratio = np.divide(length, d, out=np.zeros_like(length), where=~near)
    return np.where(inside, np.where(near, r * length, r * ratio), 0.0)


def segment_safe_cost(a, b, obs: Obstacle) -> float:
    """Obstacle penalty of one segment against one cylinder."""
    d, length = chord_metrics(
        float(a[0]), float(a[1]), float(b[0]), float(b[1]),
        obs.center.x, obs.center.y, obs.radius,
    )
    return float(_segment_safe(d, length, obs.radius))


def _safe_sum(stack: np.ndarray, obstacles) -> np.ndarray:
    # stack: (..., N, W, 3)
    if len(obstacles) == 0:
        return np.zeros(stack.shape[:-3])
    cx, cy, r, s = obstacles if isinstance(obstacles, tuple) else _obstacle_arrays(obstacles)
    a = stack[..., :-1, None, :]
    b = stack[..., 1:, None, :]
    d, length = chord_metrics(a[..., 0], a[..., 1], b[..., 0], b[..., 1], cx, cy, r)
    per = s * _segment_safe(d, length, r)
    return _rowsum(per, 3)


def safe_cost(paths, obstacles: Sequence[Obstacle], p_safe: float):
    """Danger-weighted obstacle penalty summed over every segment of every path."""
    return p_safe * _safe_sum(_stack_paths(paths), obstacles)


def _alt_parts(points: np.ndarray, terrain: TerrainGrid, band: AltitudeBand):
    h = points[..., 2] - terrain.elevation(points[..., 0], points[..., 1])
    dh = np.where(h > band.z_max, h - band.z_max, np.where(h < band.z_min, band.z_min - h, 0.0))
    dead = h <= 0
    return np.where(dead, 0.0, dh), dead


def alt_cost(path, terrain: TerrainGrid, band: AltitudeBand, p_alt: float):
    """Altitude-band penalty over all waypoints including both endpoints.

    A waypoint at or below terrain adds :data:`INFEASIBLE` (unscaled) so the
    result is never below the sentinel once any waypoint is infeasible.
    """
    pts = _points(path)
    dh, dead = _alt_parts(pts, terrain, band)
    return p_alt * _rowsum(dh, 1) + INFEASIBLE * _rowsum(dead.astype(float), 1)


def _alt_stack(stack, terrain, band, p_alt):
    dh, dead = _alt_parts(stack, terrain, band)
    return p_alt * _rowsum(dh, 2) + INFEASIBLE * _rowsum(dead.astype(float), 2)


def _mission_sum(stack: np.ndarray, targets: np.ndarray, band: MissionBand) -> np.ndarray:
    diff = stack[..., :, :, None, :] - targets
    dist = np.sqrt(_rowsum(diff * diff, 1)).min(axis=-1)
    deficit = np.where(
        dist < band.d_min, band.d_min - dist, np.where(dist > band.d_max, dist - band.d_max, 0.0)
    )
    return _rowsum(deficit, 2)


def mission_cost(paths, targets, band: MissionBand, p_mission: float):
    """Stand-off penalty: each UAV waypoint should stay within the band of the nearest target."""
    tg = np.asarray(targets, dtype=float).reshape(-1, 3)
    if len(tg) == 0:
        raise ValueError("mission cost needs at least one target")
    return p_mission * _mission_sum(_stack_paths(paths), tg, band)


def evaluate_points(points: np.ndarray, scenario: "Scenario") -> np.ndarray:
    """Score centroid waypoint arrays ``(P, W, 3)``.

    Returns a ``(P, 5)`` array of ``range, safe, alt, mission, total``.
    """
    pts = np.asarray(points, dtype=float)
    pen = scenario.penalties
    if scenario.evaluate_expansion:
        stack = expand_points(pts, scenario.formation)
    else:
        stack = pts[:, None]
    out = np.empty((len(pts), 5))
    out[:, 0] = pen.range * path_length(pts)
    out[:, 1] = pen.safe * _safe_sum(stack, scenario.obstacle_arrays)
    out[:, 2] = _alt_stack(stack, scenario.terrain, scenario.altitude_band, pen.alt)
    if scenario.mission_band is not None:
        out[:, 3] = pen.mission * _mission_sum(stack, scenario.targets, scenario.mission_band)
    else:
        out[:, 3] = 0.0
    out[:, 4] = ((out[:, 0] + out[:, 1]) + out[:, 2]) + out[:, 3]
    return out


def total_cost(path: CentroidPath, scenario: "Scenario") -> CostBreakdown:
    if path.n != scenario.n_waypoints:
        raise ValueError(f"path has {path.n} interior waypoints, scenario expects {scenario.n_waypoints}")
    row = evaluate_points(path.points[None], scenario)[0]
    return CostBreakdown(*(float(v) for v in row))
