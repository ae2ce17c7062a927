"""Command line: ``plan``, ``compare``, ``eval`` and ``export``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .workflow import clearance_report, eval_path, export_wpl, load_result, run_compare, run_plan
from .optimizer import ALGORITHMS
from .scenario import ScenarioError, load_scenario


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gepso-formation", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="optimize one path and save result.json + history.csv")
    p.add_argument("--scenario", required=True, type=Path)
    p.add_argument("--algo", choices=ALGORITHMS, default="gepso")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--workers", type=int, default=1, help="threads for cost evaluation")

    c = sub.add_parser("compare", help="repeated-seed comparison of algorithms")
    c.add_argument("--scenario", required=True, type=Path)
    c.add_argument("--algos", default="gepso,pso", help="comma-separated list")
    c.add_argument("--seeds", type=int, default=30)
    c.add_argument("--out", required=True, type=Path)
    c.add_argument("--parallel", type=int, default=1)

    e = sub.add_parser("eval", help="score a centroid path; exit status 1 if it hits an obstacle")
    e.add_argument("--scenario", required=True, type=Path)
    e.add_argument("--path", required=True, type=Path)

    x = sub.add_parser("export", help="write QGC WPL 110 files, one per UAV")
    x.add_argument("--result", required=True, type=Path)
    x.add_argument("--out", required=True, type=Path)
    x.add_argument("--scenario", type=Path, help="also report segments crossing obstacle footprints")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "plan":
            sc = load_scenario(args.scenario)
            res = run_plan(sc, args.algo, args.seed, args.out, workers=args.workers)
            print(f"{res.algorithm} seed={res.seed} {res.breakdown}")
            print(f"final safe cost: {res.breakdown.safe:.6g}")
        elif args.command == "compare":
            sc = load_scenario(args.scenario)
            algos = [a.strip() for a in args.algos.split(",") if a.strip()]
            bad = set(algos) - set(ALGORITHMS)
            if bad:
                raise ValueError(f"unknown algorithms {sorted(bad)}")
            rep = run_compare(sc, algos, args.seeds, args.out, args.parallel)
            for algo, st in rep.stats.items():
                print(
                    f"{algo:6s} mean={st['mean']:.4g} min={st['min']:.4g} max={st['max']:.4g} "
                    f"std={st['std']:.4g} conv_iter={st['mean_convergence_iteration']:.1f}"
                )
            for f in rep.failures:
                print(f"FAILED {f['algorithm']} seed {f['seed']}: {f['error']}", file=sys.stderr)
        elif args.command == "eval":
            sc = load_scenario(args.scenario)
            out = args.path.with_name(args.path.stem + "_eval.json")
            b = eval_path(sc, args.path, out)
            print(b)
            return 1 if b.safe > 0 else 0
        elif args.command == "export":
            for p in export_wpl(args.result, args.out):
                print(p)
            if args.scenario is not None:
                sc = load_scenario(args.scenario)
                for r in clearance_report(load_result(args.result)["uav_paths"], sc.obstacles):
                    status = "clear" if r["clear"] else "BELOW TOP"
                    print(
                        f"uav{r['uav']} segment {r['segment']} crosses obstacle {r['obstacle']} "
                        f"({r['overlap']:.2f} m) lowest {r['min_alt']:.2f} m, top {r['height']:.2f} m: {status}"
                    )
    except (ScenarioError, ValueError, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
