"""Plan the three-UAV survey with GEPSO and PSO from the same seed.

Run: python3 demos/02_plan_replica.py [seed]
"""

import sys

import numpy as np

from gepso_formation import load_replica, run, shape_error
from gepso_formation.formation import expand_path

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
sc = load_replica()

for algo in ("gepso", "pso"):
    res = run(sc, algo=algo, seed=seed)
    h = res.history_cost
    print(f"\n{algo}: {res.breakdown}")
    print(f"  cost at iterations 0/10/50/100: {h[0]:.1f} / {h[10]:.1f} / {h[50]:.1f} / {h[-1]:.1f}")
    print(f"  within 1% of final from iteration {res.convergence_iteration()}, {res.wall_time:.2f} s")
    uavs = expand_path(res.path, sc.formation)
    print(f"  formation shape error {shape_error(uavs, sc.formation):.1e} m")
    print("  centroid path:", np.round(res.path.points, 1).tolist())
