"""Run orchestration and file formats: results, history CSVs, comparisons, QGC WPL."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cost import CentroidPath, CostBreakdown, total_cost
from .formation import UavPath, expand_path
from .geo import GeoPoint, chord_metrics, gps_to_local, local_to_gps
from .optimizer import RunResult, convergence_iteration, run
from .scenario import Scenario

log = logging.getLogger(__name__)

HISTORY_HEADER = ("iteration", "gbest_cost", "safe_cost")
WPL_HEADER = "QGC WPL 110"
NAV_WAYPOINT = 16
FRAME_GLOBAL = 0
FRAME_RELATIVE_ALT = 3


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def history_csv(costs, safes) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_HEADER)
    for i, (c, s) in enumerate(zip(costs, safes)):
        w.writerow((i, repr(float(c)), repr(float(s))))
    return buf.getvalue()


def read_history_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != HISTORY_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    return np.array([[float(v) for v in r] for r in rows[1:]])


# -- result files -----------------------------------------------------------


def result_to_dict(result: RunResult, scenario: Scenario) -> dict:
    ws = scenario.workspace
    return {
        "algorithm": result.algorithm,
        "seed": result.seed,
        "workspace": {
            "corner_sw": {"lat": ws.origin.lat, "lon": ws.origin.lon},
            "h_max": ws.h_max,
        },
        "centroid_path": result.path.points.tolist(),
        "uav_paths": [{"uav": p.uav_index, "waypoints": p.waypoints.tolist()} for p in result.uav_paths],
        "breakdown": result.breakdown.as_dict(),
        "convergence_iteration": result.convergence_iteration(),
        "history": {
            "gbest_cost": [float(v) for v in result.history_cost],
            "safe_cost": [float(v) for v in result.history_safe],
        },
        "wall_time": result.wall_time,
    }


def result_from_dict(data: dict) -> RunResult:
    b = data["breakdown"]
    return RunResult(
        algorithm=data["algorithm"],
        seed=int(data["seed"]),
        path=CentroidPath.from_points(data["centroid_path"]),
        breakdown=CostBreakdown(b["range"], b["safe"], b["alt"], b["mission"], b["total"]),
        history_cost=np.array(data["history"]["gbest_cost"], dtype=float),
        history_safe=np.array(data["history"]["safe_cost"], dtype=float),
        wall_time=float(data.get("wall_time", 0.0)),
        uav_paths=[UavPath(int(p["uav"]), np.array(p["waypoints"], dtype=float)) for p in data["uav_paths"]],
    )


def save_result(result: RunResult, scenario: Scenario, out_dir) -> Path:
    out_dir = Path(out_dir)
    path = atomic_write(out_dir / "result.json", json.dumps(result_to_dict(result, scenario), indent=1) + "\n")
    atomic_write(out_dir / "history.csv", history_csv(result.history_cost, result.history_safe))
    return path


def load_result(path) -> dict:
    return json.loads(Path(path).read_text())


def run_plan(scenario: Scenario, algo: str = "gepso", seed: int | None = None, out_dir=None, workers: int = 1) -> RunResult:
    """Optimize, expand to per-UAV paths and (optionally) persist ``result.json`` + ``history.csv``."""
    result = run(scenario, algo=algo, seed=seed, workers=workers)
    result.uav_paths = expand_path(result.path, scenario.formation)
    if out_dir is not None:
        save_result(result, scenario, out_dir)
    log.info("%s seed %d: %s", algo, result.seed, result.breakdown)
    return result


# -- comparisons ------------------------------------------------------------


@dataclass
class CompareReport:
    """Per-algorithm statistics of the final best cost over a seed ladder."""

    stats: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"algorithms": self.stats, "failures": self.failures}


def summarize(runs_by_algo: dict) -> dict:
    """Aggregate ``{algo: [(seed, history_cost, history_safe), ...]}``."""
    stats = {}
    for algo, runs in runs_by_algo.items():
        if not runs:
            continue
        runs = sorted(runs, key=lambda r: r[0])
        costs = np.array([r[1] for r in runs], dtype=float)
        safes = np.array([r[2] for r in runs], dtype=float)
        finals = costs[:, -1]
        conv = [convergence_iteration(h) for h in costs]
        stats[algo] = {
            "seeds": [int(r[0]) for r in runs],
            "final_costs": finals.tolist(),
            "mean": float(np.mean(finals)),
            "min": float(np.min(finals)),
            "max": float(np.max(finals)),
            "std": float(np.std(finals)),
            "convergence_iterations": conv,
            "mean_convergence_iteration": float(np.mean(conv)),
            "mean_curve": costs.mean(axis=0).tolist(),
            "mean_safe_curve": safes.mean(axis=0).tolist(),
        }
    return stats


def _compare_job(args):
    scenario, algo, seed, out_dir = args
    try:
        res = run_plan(scenario, algo, seed, out_dir)
        return algo, seed, res.history_cost, res.history_safe, None
    except Exception as e:  # noqa: BLE001 - recorded per run, batch continues
        return algo, seed, None, None, f"{type(e).__name__}: {e}"


def run_compare(scenario: Scenario, algos=("gepso", "pso"), seeds: int = 30, out=None, parallel: int = 1) -> CompareReport:
    """Run every algorithm on seeds ``0 .. seeds-1`` and aggregate.

    With ``out`` set, per-run results go to ``out/runs/<algo>_seed<k>/``,
    the report to ``out/report.json`` and mean curves to
    ``out/mean_curve_<algo>.csv``.
    """
    if not algos or seeds < 1:
        raise ValueError("need at least one algorithm and one seed")
    out = Path(out) if out is not None else None
    jobs = [
        (scenario, algo, k, None if out is None else out / "runs" / f"{algo}_seed{k}")
        for algo in algos
        for k in range(seeds)
    ]
    if parallel > 1:
        with ProcessPoolExecutor(parallel) as pool:
            done = list(pool.map(_compare_job, jobs))
    else:
        done = [_compare_job(j) for j in jobs]

    grouped = {a: [] for a in algos}
    report = CompareReport()
    for algo, seed, hc, hs, err in done:
        if err is not None:
            log.error("%s seed %d failed: %s", algo, seed, err)
            report.failures.append({"algorithm": algo, "seed": seed, "error": err})
        else:
            grouped[algo].append((seed, hc, hs))
    report.stats = summarize(grouped)
    if out is not None:
        atomic_write(out / "report.json", json.dumps(report.as_dict(), indent=1) + "\n")
        for algo, st in report.stats.items():
            atomic_write(out / f"mean_curve_{algo}.csv", history_csv(st["mean_curve"], st["mean_safe_curve"]))
    return report


def report_from_results(run_dir) -> dict:
    """Recompute comparison statistics from stored per-run result files."""
    grouped = {}
    for path in sorted(Path(run_dir).glob("*/result.json")):
        d = load_result(path)
        grouped.setdefault(d["algorithm"], []).append(
            (d["seed"], d["history"]["gbest_cost"], d["history"]["safe_cost"])
        )
    return summarize(grouped)


# -- path evaluation --------------------------------------------------------


def read_path_file(path, scenario: Scenario) -> CentroidPath:
    """Centroid path from a JSON file holding ``centroid_path`` (all n+2 waypoints).

    Result files qualify. Endpoints must match the scenario's.
    """
    data = json.loads(Path(path).read_text())
    pts = np.asarray(data["centroid_path"] if isinstance(data, dict) else data, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"{path}: centroid_path must be a list of [x, y, z] points")
    if len(pts) != scenario.n_waypoints + 2:
        raise ValueError(
            f"{path}: {len(pts)} waypoints, scenario expects {scenario.n_waypoints + 2} including endpoints"
        )
    if not (np.allclose(pts[0], scenario.start, atol=1e-6) and np.allclose(pts[-1], scenario.end, atol=1e-6)):
        raise ValueError(f"{path}: path endpoints differ from the scenario start/end")
    return CentroidPath(scenario.start, scenario.end, pts[1:-1])


def eval_path(scenario: Scenario, path_file, out=None) -> CostBreakdown:
    breakdown = total_cost(read_path_file(path_file, scenario), scenario)
    if out is not None:
        atomic_write(out, json.dumps(breakdown.as_dict(), indent=1) + "\n")
    return breakdown


# -- QGC WPL ----------------------------------------------------------------


def _wpl_row(index, current, frame, lat, lon, alt) -> str:
    return "\t".join(
        [str(index), str(current), str(frame), str(NAV_WAYPOINT), "0", "0", "0", "0",
         f"{lat:.7f}", f"{lon:.7f}", f"{alt:.2f}", "1"]
    )


def wpl_text(waypoints, origin: GeoPoint) -> str:
    """Mission for one UAV: home row at the first waypoint, then every waypoint at relative altitude."""
    pts = np.asarray(waypoints, dtype=float)
    home_alt = round(float(pts[0, 2]), 2)
    home = local_to_gps(pts[0], origin)
    lines = [WPL_HEADER, _wpl_row(0, 1, FRAME_GLOBAL, home.lat, home.lon, home_alt)]
    for k, p in enumerate(pts, start=1):
        g = local_to_gps(p, origin)
        lines.append(_wpl_row(k, 0, FRAME_RELATIVE_ALT, g.lat, g.lon, p[2] - home_alt))
    return "\n".join(lines) + "\n"


def export_wpl(result, out_dir, origin: GeoPoint | None = None) -> list[Path]:
    """Write ``uav<n>.waypoints`` for each UAV of a result (dict, file or :class:`RunResult`)."""
    if isinstance(result, (str, Path)):
        result = load_result(result)
    if isinstance(result, dict):
        sw = result["workspace"]["corner_sw"]
        origin = origin or GeoPoint(sw["lat"], sw["lon"])
        result = result_from_dict(result)
    if origin is None:
        raise ValueError("an origin is required to export a RunResult")
    out_dir = Path(out_dir)
    return [
        atomic_write(out_dir / f"uav{p.uav_index}.waypoints", wpl_text(p.waypoints, origin))
        for p in result.uav_paths
    ]


def clearance_report(uav_paths, obstacles) -> list[dict]:
    """Segments whose ground track cuts an obstacle disk, with their lowest altitude.

    The cost model treats obstacles as 2D disks; this report is the only
    place obstacle heights are used. ``clear`` is true when the segment stays
    above the obstacle top.
    """
    rows = []
    for u in uav_paths:
        wp = u.waypoints if isinstance(u, UavPath) else np.asarray(u["waypoints"], dtype=float)
        idx = u.uav_index if isinstance(u, UavPath) else int(u["uav"])
        a, b = wp[:-1], wp[1:]
        for k, o in enumerate(obstacles):
            _, l = chord_metrics(a[:, 0], a[:, 1], b[:, 0], b[:, 1], o.center.x, o.center.y, o.radius)
            for j in np.flatnonzero(l > 0):
                low = float(min(a[j, 2], b[j, 2]))
                rows.append({"uav": idx, "segment": int(j), "obstacle": k, "overlap": float(l[j]),
                             "min_alt": low, "height": o.height, "clear": low > o.height})
    return rows


def read_wpl(path) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != WPL_HEADER:
        raise ValueError(f"{path}: not a {WPL_HEADER} file")
    rows = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        f = ln.split("\t")
        if len(f) != 12:
            raise ValueError(f"{path}: expected 12 tab-separated fields, got {len(f)}")
        rows.append(
            {
                "index": int(f[0]),
                "current": int(f[1]),
                "frame": int(f[2]),
                "command": int(f[3]),
                "params": [float(v) for v in f[4:8]],
                "lat": float(f[8]),
                "lon": float(f[9]),
                "alt": float(f[10]),
                "autocontinue": int(f[11]),
            }
        )
    return rows


def wpl_to_local(path, origin: GeoPoint) -> np.ndarray:
    """Mission waypoints of a WPL file back in the local frame, ``(rows, 3)``."""
    rows = read_wpl(path)
    home_alt = rows[0]["alt"]
    pts = []
    for r in rows[1:]:
        p = gps_to_local(GeoPoint(r["lat"], r["lon"]), origin)
        alt = r["alt"] + home_alt if r["frame"] == FRAME_RELATIVE_ALT else r["alt"]
        pts.append((p.x, p.y, alt))
    return np.array(pts)
