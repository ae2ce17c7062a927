"""How the four cost terms react to a hand-built path on the bundled scenario.

Run: python3 demos/01_cost_terms.py
"""

import numpy as np

from gepso_formation import CentroidPath, expand_path, load_replica, total_cost

sc = load_replica()
print(f"workspace {sc.workspace.extent_x:.2f} m x {sc.workspace.extent_y:.2f} m, "
      f"{len(sc.obstacles)} obstacles, {len(sc.targets)} targets, n={sc.n_waypoints}")

# straight line from take-off to landing, evenly spaced interior waypoints
t = np.linspace(0, 1, sc.n_waypoints + 2)[1:-1, None]
straight = CentroidPath(sc.start, sc.end, sc.start + t * (sc.end - sc.start))
print("\nstraight line:      ", total_cost(straight, sc))

# same line lifted above the altitude band: alt cost grows linearly with the excess
lifted = CentroidPath(sc.start, sc.end, straight.interior + [0, 0, 3.0])
print("lifted 3 m:         ", total_cost(lifted, sc))

# one waypoint pushed into the ground makes the whole plan infeasible
sunk = straight.interior.copy()
sunk[2, 2] = 0.0
b = total_cost(CentroidPath(sc.start, sc.end, sunk), sc)
print("one waypoint at 0 m:", b, "feasible:", b.feasible)

# the obstacle term is charged per UAV, so look at where each UAV goes
for u in expand_path(straight, sc.formation):
    print(f"UAV{u.uav_index} first waypoints", np.round(u.waypoints[:3], 2).tolist())
