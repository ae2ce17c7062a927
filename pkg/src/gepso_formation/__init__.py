"""Formation path planning with generalized particle swarm optimization.

Modules
-------
geo         local frame, terrain grid, cylinder obstacle geometry
cost        length / obstacle / altitude / mission penalty terms
formation   rigid-offset expansion of a centroid path to each UAV
optimizer   PSO and GEPSO engines over particle-encoded paths
scenario    JSON scenario files and validation
workflow    runs, comparisons, result files and QGC WPL export
"""

from .cost import (
    INFEASIBLE,
    AltitudeBand,
    CentroidPath,
    CostBreakdown,
    MissionBand,
    Penalties,
    alt_cost,
    mission_cost,
    range_cost,
    safe_cost,
    segment_safe_cost,
    total_cost,
)
from .formation import FormationSpec, UavPath, centroid, expand_path, shape_error
from .geo import (
    GeoPoint,
    LocalPoint,
    Obstacle,
    TerrainGrid,
    Workspace,
    gps_to_local,
    local_to_gps,
    segment_obstacle_metrics,
    terrain_elevation,
)
from .optimizer import BoxBounds, GepsoParams, RunResult, decode, encode, run
from .scenario import Scenario, ScenarioError, load_replica, load_scenario, save_scenario
from .workflow import CompareReport, eval_path, export_wpl, run_compare, run_plan

__version__ = "0.1.0"
