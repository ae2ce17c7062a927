"""Repeated-seed comparison with a convergence plot.

Run: python3 demos/03_compare.py [seeds] [out_dir]
Writes report.json, per-run results and mean_curve_<algo>.csv under out_dir,
plus convergence.png when matplotlib is installed.
"""

import sys
from pathlib import Path

from gepso_formation import load_replica, run_compare

seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 10
out = Path(sys.argv[2] if len(sys.argv) > 2 else "compare_out")

report = run_compare(load_replica(), ["gepso", "pso"], seeds, out)
for algo, st in report.stats.items():
    print(f"{algo:5s} mean {st['mean']:.2f}  min {st['min']:.2f}  max {st['max']:.2f}  "
          f"std {st['std']:.2f}  converged at {st['mean_convergence_iteration']:.1f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

fig, ax = plt.subplots(figsize=(6, 4))
for algo, st in report.stats.items():
    ax.plot(st["mean_curve"], label=algo)
ax.set_xlabel("iteration")
ax.set_ylabel(f"mean best cost over {seeds} seeds")
ax.set_yscale("log")
ax.legend()
fig.tight_layout()
fig.savefig(out / "convergence.png", dpi=120)
print("wrote", out / "convergence.png")
