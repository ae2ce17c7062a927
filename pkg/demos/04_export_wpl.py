"""From scenario to flight-controller missions: plan, save, export and check the round trip.

Run: python3 demos/04_export_wpl.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from gepso_formation import load_replica
from gepso_formation.workflow import export_wpl, load_result, run_plan, wpl_to_local

out = Path(sys.argv[1] if len(sys.argv) > 1 else "wpl_out")
sc = load_replica()

res = run_plan(sc, "gepso", seed=3, out_dir=out)
print("planned:", res.breakdown)

files = export_wpl(out / "result.json", out / "missions")
print(files[0].read_text())

stored = load_result(out / "result.json")
for f, uav in zip(files, stored["uav_paths"]):
    err = np.linalg.norm(wpl_to_local(f, sc.workspace.origin) - np.array(uav["waypoints"]), axis=1)
    print(f"{f.name}: {len(err)} mission rows, worst round-trip error {err.max() * 1000:.2f} mm")
