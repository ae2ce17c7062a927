"""Rigid formation: centroid paths to per-UAV paths and back."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FormationSpec:
    """Constant offsets of each UAV from the formation centroid (inertial frame).

    Offsets that do not average to zero are recentered with a warning.
    With ``heading_aligned`` the offsets are treated as the layout for a
    northbound formation and rotated about z with the path heading.
    """

    offsets: np.ndarray
    heading_aligned: bool = False

    def __post_init__(self):
        off = np.array(self.offsets, dtype=float).reshape(-1, 3)
        if len(off) < 1:
            raise ValueError("formation needs at least one UAV")
        if not np.all(np.isfinite(off)):
            raise ValueError("formation offsets must be finite")
        if len({tuple(o) for o in off}) != len(off):
            raise ValueError("formation offsets must be distinct")
        mean = off.mean(axis=0)
        if np.any(np.abs(mean) > 1e-12):
            log.warning("formation offsets have nonzero mean %s; recentering", mean)
            off = off - mean
        off.setflags(write=False)
        object.__setattr__(self, "offsets", off)

    @property
    def size(self) -> int:
        return len(self.offsets)

    def __eq__(self, other):
        if not isinstance(other, FormationSpec):
            return NotImplemented
        return self.heading_aligned == other.heading_aligned and np.array_equal(
            self.offsets, other.offsets
        )

    def nominal_distances(self) -> np.ndarray:
        return _pairwise(self.offsets[:, None, :])[:, 0]


@dataclass(frozen=True)
class UavPath:
    uav_index: int
    waypoints: np.ndarray


def centroid(positions) -> np.ndarray:
    pts = np.asarray(positions, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("centroid needs a nonempty list of points")
    return pts.mean(axis=0)


def _headings(points: np.ndarray) -> np.ndarray:
    seg = np.diff(points, axis=-2)
    ang = np.arctan2(seg[..., 1], seg[..., 0])
    # last waypoint keeps the heading of the final segment
    return np.concatenate([ang, ang[..., -1:]], axis=-1)


def expand_points(points, spec: FormationSpec) -> np.ndarray:
    """Per-UAV waypoints for centroid waypoints of shape ``(..., W, 3)``.

    Returns shape ``(..., N, W, 3)``.
    """
    pts = np.asarray(points, dtype=float)
    off = spec.offsets
    if not spec.heading_aligned:
        return pts[..., None, :, :] + off[:, None, :]
    rot = _headings(pts) - np.pi / 2
    c, s = np.cos(rot)[..., None, :], np.sin(rot)[..., None, :]
    ox, oy = off[:, 0, None], off[:, 1, None]
    ex = c * ox - s * oy
    shifted = np.stack([ex, s * ox + c * oy, np.broadcast_to(off[:, 2, None], ex.shape)], axis=-1)
    return pts[..., None, :, :] + shifted


def expand_path(path, spec: FormationSpec) -> list[UavPath]:
    pts = path.points if hasattr(path, "points") else np.asarray(path, dtype=float)
    expanded = expand_points(pts, spec)
    return [UavPath(n + 1, expanded[n]) for n in range(spec.size)]


def _pairwise(stack: np.ndarray) -> np.ndarray:
    # stack: (N, W, 3) -> (pairs, W)
    pairs = list(itertools.combinations(range(stack.shape[0]), 2))
    return np.array([np.linalg.norm(stack[i] - stack[j], axis=-1) for i, j in pairs]).reshape(
        len(pairs), stack.shape[1]
    )


def shape_error(paths, nominal=None) -> float:
    """Largest deviation of any inter-UAV distance from its nominal value.

    ``nominal`` may be a :class:`FormationSpec` or an array of pairwise
    distances; by default the distances at the first waypoint are used.
    """
    stack = [p.waypoints if isinstance(p, UavPath) else np.asarray(p, dtype=float) for p in paths]
    if len(stack) < 2:
        raise ValueError("shape error needs at least two UAVs")
    if len({len(p) for p in stack}) != 1:
        raise ValueError("UAV paths must have equal waypoint counts")
    dist = _pairwise(np.stack(stack))
    if nominal is None:
        ref = dist[:, :1]
    elif isinstance(nominal, FormationSpec):
        ref = nominal.nominal_distances()[:, None]
    else:
        ref = np.asarray(nominal, dtype=float).reshape(-1, 1)
    return float(np.max(np.abs(dist - ref)))
