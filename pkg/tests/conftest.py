import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gepso_formation import (  # noqa: E402
    AltitudeBand,
    FormationSpec,
    GepsoParams,
    MissionBand,
    Obstacle,
    Penalties,
    Scenario,
    TerrainGrid,
    Workspace,
    load_replica,
)

ORIGIN = (12.233106, 109.114506)


def make_scenario(
    n=3,
    obstacles=(),
    targets=((50.0, 50.0, 2.0),),
    start=(10.0, 10.0, 4.5),
    end=(90.0, 90.0, 4.5),
    offsets=((0.0, 0.0, 0.0),),
    terrain=None,
    band=(4.0, 5.0),
    mission=(0.5, 4.0),
    penalties=(1.0, 1.0, 1.0, 1.0),
    extent=(100.0, 100.0, 30.0),
    **opt,
):
    opt.setdefault("swarm_size", 10)
    opt.setdefault("iterations", 5)
    return Scenario(
        workspace=Workspace(ORIGIN, *extent),
        terrain=terrain or TerrainGrid.constant(0.0),
        obstacles=[Obstacle(*o) for o in obstacles],
        targets=np.array(targets, dtype=float).reshape(-1, 3),
        start=start,
        end=end,
        formation=FormationSpec(offsets),
        altitude_band=AltitudeBand(*band),
        mission_band=None if mission is None else MissionBand(*mission),
        penalties=Penalties(*penalties),
        optimizer=GepsoParams(**opt),
        n_waypoints=n,
    )


def random_instance(rng: np.random.Generator):
    """Small random scenario, a random centroid path and the matching oracle description."""
    n = int(rng.integers(1, 9))
    nx, ny = int(rng.integers(2, 6)), int(rng.integers(2, 6))
    cell = float(rng.uniform(5, 30))
    heights = rng.uniform(0, 4, (ny, nx))
    grid = TerrainGrid(nx, ny, float(rng.uniform(-10, 10)), float(rng.uniform(-10, 10)), cell, heights)
    k = int(rng.integers(0, 6))
    obstacles = [
        ((float(rng.uniform(0, 60)), float(rng.uniform(0, 60)), 0.0), float(rng.uniform(1, 8)), 10.0,
         float(rng.uniform(0, 3)))
        for _ in range(k)
    ]
    targets = rng.uniform([0, 0, 0], [60, 60, 5], (int(rng.integers(1, 4)), 3))
    n_uav = int(rng.integers(1, 4))
    offsets = rng.uniform(-3, 3, (n_uav, 3))
    offsets -= offsets.mean(axis=0)
    z_min = float(rng.uniform(0, 4))
    z_max = z_min + float(rng.uniform(0.5, 4))
    d_min = float(rng.uniform(0, 3))
    d_max = d_min + float(rng.uniform(0.5, 6))
    pen = rng.uniform(0.1, 10, 4)
    pts = rng.uniform([0, 0, -1], [60, 60, 12], (n + 2, 3))
    # endpoints must lie inside the workspace box, z >= 0
    pts[[0, -1], 2] = np.abs(pts[[0, -1], 2])
    sc = make_scenario(
        n=n, obstacles=obstacles, targets=targets, start=pts[0], end=pts[-1], offsets=offsets,
        terrain=grid, band=(z_min, z_max), mission=(d_min, d_max), penalties=tuple(pen),
        extent=(60.0, 60.0, 30.0),
    )
    inst = {
        "offsets": sc.formation.offsets.tolist(),
        "obstacles": [(o[0][0], o[0][1], o[1], o[3]) for o in obstacles],
        "targets": targets.tolist(),
        "grid": {"nx": nx, "ny": ny, "x0": grid.x0, "y0": grid.y0, "cell": cell, "rows": heights.tolist()},
        "z_min": z_min, "z_max": z_max, "d_min": d_min, "d_max": d_max,
        "p_range": pen[0], "p_safe": pen[1], "p_alt": pen[2], "p_mission": pen[3],
    }
    return sc, pts, inst


_criteria: dict = {}


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    ok = _criteria.get(crit, True)
    if report.when == "call" or report.failed:
        _criteria[crit] = ok and report.passed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), ok in sorted(_criteria.items()):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def replica():
    return load_replica()


@pytest.fixture
def small():
    return make_scenario()
