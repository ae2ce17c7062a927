"""Scenario files: JSON problem description, validation and serialization."""

from __future__ import annotations

import contextlib
import json
import math
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .cost import AltitudeBand, MissionBand, Penalties
from .formation import FormationSpec
from .geo import (
    GeoPoint,
    Obstacle,
    TerrainGrid,
    Workspace,
    gps_to_local,
    load_terrain_grid,
    local_to_gps,
    save_terrain_grid,
)
from .optimizer import BoxBounds, GepsoParams

REPLICA = "replica_scenario.json"


class ScenarioError(ValueError):
    """Invalid scenario; ``field`` names the offending entry, e.g. ``altitude_band``."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@contextlib.contextmanager
def _field(name: str):
    try:
        yield
    except ScenarioError as e:
        if e.field.startswith(name):
            raise
        raise ScenarioError(f"{name}.{e.field}", str(e).split(": ", 1)[-1]) from e
    except (ValueError, TypeError, KeyError, IndexError) as e:
        msg = f"missing key {e}" if isinstance(e, KeyError) else str(e)
        raise ScenarioError(name, msg) from e


@dataclass(frozen=True, eq=False)
class Scenario:
    """Complete planning problem in the local east/north/up frame."""

    workspace: Workspace
    terrain: TerrainGrid
    obstacles: tuple
    targets: np.ndarray
    start: np.ndarray
    end: np.ndarray
    formation: FormationSpec
    altitude_band: AltitudeBand
    mission_band: MissionBand | None
    penalties: Penalties
    optimizer: GepsoParams
    n_waypoints: int
    seed: int = 0
    evaluate_expansion: bool = True
    terrain_source: dict = field(default_factory=lambda: {"constant": 0.0})

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=float).reshape(-1, 3))
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float).reshape(3))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float).reshape(3))
        if int(self.n_waypoints) < 1:
            raise ScenarioError("optimizer.waypoints_n", "need at least one interior waypoint")
        object.__setattr__(self, "n_waypoints", int(self.n_waypoints))
        for name in ("start", "end"):
            if not self.workspace.contains(getattr(self, name)):
                raise ScenarioError(name, f"{getattr(self, name).tolist()} lies outside the workspace")
        if self.mission_band is not None and len(self.targets) == 0:
            raise ScenarioError("targets", "mission cost is enabled but no targets are given")
        for arr in (self.targets, self.start, self.end):
            arr.setflags(write=False)

    @cached_property
    def obstacle_arrays(self):
        obs = self.obstacles
        return (
            np.array([o.center.x for o in obs], dtype=float),
            np.array([o.center.y for o in obs], dtype=float),
            np.array([o.radius for o in obs], dtype=float),
            np.array([o.danger for o in obs], dtype=float),
        )

    @cached_property
    def bounds(self) -> BoxBounds:
        ws = self.workspace
        return BoxBounds.for_waypoints(self.n_waypoints, ws.extent_x, ws.extent_y, ws.h_max)

    def with_optimizer(self, **changes) -> "Scenario":
        return replace(self, optimizer=replace(self.optimizer, **changes))

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        # terrain is compared by value, so where it was loaded from does not matter
        a, b = scenario_to_dict(self), scenario_to_dict(other)
        a.pop("terrain"), b.pop("terrain")
        return a == b and self.terrain == other.terrain


def _local_point(entry: dict, origin: GeoPoint, zkey: str = "z") -> np.ndarray:
    if "lat" in entry or "lon" in entry:
        p = gps_to_local(GeoPoint(float(entry["lat"]), float(entry["lon"])), origin)
        z = float(entry.get("alt", 0.0))
        return np.array([p.x, p.y, z])
    return np.array([float(entry["x"]), float(entry["y"]), float(entry.get(zkey, 0.0))])


def _geo(entry: dict) -> GeoPoint:
    return GeoPoint(float(entry["lat"]), float(entry["lon"]))


def _finite(value, name):
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite")
    return v


def scenario_from_dict(data: dict, base_dir: Path | str | None = None) -> Scenario:
    """Build and validate a :class:`Scenario` from its JSON structure."""
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    with _field("workspace"):
        ws_d = data["workspace"]
        workspace = Workspace.from_corners(
            _geo(ws_d["corner_sw"]), _geo(ws_d["corner_ne"]), _finite(ws_d["h_max"], "h_max")
        )
    origin = workspace.origin

    with _field("terrain"):
        t = data.get("terrain", {"constant": 0.0})
        if "grid_file" in t:
            grid_path = Path(t["grid_file"])
            if not grid_path.is_absolute():
                grid_path = base_dir / grid_path
            terrain = load_terrain_grid(grid_path)
            source = {"grid_file": str(t["grid_file"])}
        elif "constant" in t:
            terrain = TerrainGrid.constant(_finite(t["constant"], "constant"))
            source = {"constant": float(t["constant"])}
        else:
            raise ValueError("expected 'grid_file' or 'constant'")

    obstacles = []
    for k, o in enumerate(data.get("obstacles", [])):
        with _field(f"obstacles[{k}]"):
            c = _local_point(o, origin)
            obstacles.append(
                Obstacle((c[0], c[1], 0.0), float(o["radius"]), float(o["height"]), float(o.get("danger", 1.0)))
            )

    targets = []
    for k, tg in enumerate(data.get("targets", [])):
        with _field(f"targets[{k}]"):
            targets.append(_local_point(tg, origin))

    with _field("start"):
        start = _local_point(data["start"], origin)
    with _field("end"):
        end = _local_point(data["end"], origin)

    with _field("formation"):
        f = data.get("formation", {"offsets": [[0.0, 0.0, 0.0]]})
        formation = FormationSpec(f["offsets"], bool(f.get("heading_aligned", False)))

    with _field("altitude_band"):
        b = data["altitude_band"]
        altitude_band = AltitudeBand(_finite(b["z_min"], "z_min"), _finite(b["z_max"], "z_max"))

    mission_band = None
    if data.get("mission_band") is not None:
        with _field("mission_band"):
            m = data["mission_band"]
            mission_band = MissionBand(_finite(m["d_min"], "d_min"), _finite(m["d_max"], "d_max"))

    with _field("penalties"):
        p = data.get("penalties", {})
        penalties = Penalties(**{k: float(p[k]) for k in ("range", "safe", "alt", "mission") if k in p})

    with _field("optimizer"):
        o = dict(data.get("optimizer", {}))
        n = int(o.pop("waypoints_n"))
        known = {f.name for f in fields(GepsoParams)}
        unknown = set(o) - known
        if unknown:
            raise ValueError(f"unknown optimizer keys {sorted(unknown)}")
        optimizer = GepsoParams(**o)

    with _field("seed"):
        seed = int(data.get("seed", 0))
        if seed < 0:
            raise ValueError("seed must be nonnegative")

    return Scenario(
        workspace=workspace,
        terrain=terrain,
        obstacles=obstacles,
        targets=np.array(targets).reshape(-1, 3),
        start=start,
        end=end,
        formation=formation,
        altitude_band=altitude_band,
        mission_band=mission_band,
        penalties=penalties,
        optimizer=optimizer,
        n_waypoints=n,
        seed=seed,
        evaluate_expansion=bool(data.get("evaluate_expansion", True)),
        terrain_source=source,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError("<file>", f"{path}: malformed JSON ({e})") from e
    return scenario_from_dict(data, path.parent)


def load_replica() -> Scenario:
    """The bundled three-UAV orchard survey scenario."""
    text = resources.files("gepso_formation.data").joinpath(REPLICA).read_text()
    return scenario_from_dict(json.loads(text))


def scenario_to_dict(scenario: Scenario, terrain_file: str | None = None) -> dict:
    """JSON structure for ``scenario``; local geometry is written as ``x, y, z``."""
    ws = scenario.workspace
    ne = ws.corner_ne
    if terrain_file is not None:
        terrain = {"grid_file": terrain_file}
    else:
        terrain = dict(scenario.terrain_source)
    opt = scenario.optimizer
    optimizer = {"waypoints_n": scenario.n_waypoints}
    for f in fields(GepsoParams):
        v = getattr(opt, f.name)
        optimizer[f.name] = list(v) if isinstance(v, tuple) else v
    out = {
        "workspace": {
            "corner_sw": {"lat": ws.origin.lat, "lon": ws.origin.lon},
            "corner_ne": {"lat": ne.lat, "lon": ne.lon},
            "h_max": ws.h_max,
        },
        "terrain": terrain,
        "obstacles": [
            {"x": o.center.x, "y": o.center.y, "radius": o.radius, "height": o.height, "danger": o.danger}
            for o in scenario.obstacles
        ],
        "targets": [{"x": t[0], "y": t[1], "z": t[2]} for t in scenario.targets.tolist()],
        "start": dict(zip("xyz", scenario.start.tolist())),
        "end": dict(zip("xyz", scenario.end.tolist())),
        "formation": {
            "offsets": scenario.formation.offsets.tolist(),
            "heading_aligned": scenario.formation.heading_aligned,
        },
        "altitude_band": {"z_min": scenario.altitude_band.z_min, "z_max": scenario.altitude_band.z_max},
        "mission_band": None
        if scenario.mission_band is None
        else {"d_min": scenario.mission_band.d_min, "d_max": scenario.mission_band.d_max},
        "penalties": {
            "range": scenario.penalties.range,
            "safe": scenario.penalties.safe,
            "alt": scenario.penalties.alt,
            "mission": scenario.penalties.mission,
        },
        "optimizer": optimizer,
        "evaluate_expansion": scenario.evaluate_expansion,
        "seed": scenario.seed,
    }
    return out


def save_scenario(scenario: Scenario, path) -> Path:
    """Write ``scenario`` as JSON; a grid terrain is written next to it."""
    path = Path(path)
    terrain_file = None
    src = scenario.terrain_source
    # an in-memory grid may still carry the default constant source
    flat = "constant" in src and scenario.terrain == TerrainGrid.constant(src["constant"])
    if not flat:
        terrain_file = path.stem + ".terrain.txt"
        save_terrain_grid(scenario.terrain, path.parent / terrain_file)
    path.write_text(json.dumps(scenario_to_dict(scenario, terrain_file), indent=2) + "\n")
    return path


def geo_of(point, scenario: Scenario) -> GeoPoint:
    return local_to_gps(point, scenario.workspace.origin)
