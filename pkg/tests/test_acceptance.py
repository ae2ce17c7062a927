"""Acceptance suite. A summary line per criterion is printed at the end of the pytest run."""

import numpy as np
import pytest
from conftest import make_scenario, random_instance

import oracles
from gepso_formation.cost import INFEASIBLE, CentroidPath, total_cost
from gepso_formation.formation import expand_path, shape_error
from gepso_formation.geo import Obstacle, segment_obstacle_metrics
from gepso_formation.optimizer import GepsoParams, run, update_inertia
from gepso_formation.scenario import load_scenario, save_scenario
from gepso_formation.workflow import eval_path, export_wpl, load_result, run_plan, wpl_to_local

SEEDS = 30


def crit(num, title):
    return pytest.mark.criterion(num, title)


@pytest.fixture(scope="module")
def replica_runs(replica):
    """Paired seeds 0..29 for both algorithms at the full 100 x 100 budget."""
    return {algo: [run(replica, algo=algo, seed=k) for k in range(SEEDS)] for algo in ("gepso", "pso")}


def rel_close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(abs(a), abs(b)) or abs(a - b) < 1e-12


# -- 1 ----------------------------------------------------------------------------------


@pytest.mark.slow
@crit(1, "replica scenario, 30 paired seeds: GEPSO beats PSO on mean final cost and mean convergence iteration")
def test_ordering_on_replica(replica_runs):
    g, p = replica_runs["gepso"], replica_runs["pso"]
    g_cost = np.mean([r.final_cost for r in g])
    p_cost = np.mean([r.final_cost for r in p])
    g_conv = np.mean([r.convergence_iteration() for r in g])
    p_conv = np.mean([r.convergence_iteration() for r in p])
    print(f"\nmean final cost gepso={g_cost:.3f} pso={p_cost:.3f}")
    print(f"mean convergence iteration gepso={g_conv:.1f} pso={p_conv:.1f}")
    assert g_cost < p_cost
    assert g_conv < p_conv


# -- 2 ----------------------------------------------------------------------------------


@crit(2, "cost breakdown matches loop oracle to 1e-12 relative on 1000 random instances")
def test_cost_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(1000):
        sc, pts, inst = random_instance(rng)
        assert sc.n_waypoints <= 8 and len(sc.obstacles) <= 5 and len(sc.targets) <= 3
        got = total_cost(CentroidPath.from_points(pts), sc)
        want = oracles.breakdown(pts.tolist(), inst)
        for key in ("range", "safe", "alt", "mission", "total"):
            a, b = getattr(got, key), want[key]
            assert rel_close(a, b), (key, a, b)
            if max(abs(a), abs(b)) > 0:
                worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    print(f"\nworst relative difference {worst:.2e}")


# -- 3 ----------------------------------------------------------------------------------


@crit(3, "chord length matches 10^4-point sampling within 1e-3 R on 1000 segment/cylinder pairs")
def test_chord_vs_sampling():
    rng = np.random.default_rng(77)
    hits = 0
    for _ in range(1000):
        r = rng.uniform(0.5, 6)
        c = rng.uniform(-50, 50, 2)
        a = np.append(c + rng.uniform(-2.5 * r, 2.5 * r, 2), rng.uniform(0, 10))
        b = np.append(c + rng.uniform(-2.5 * r, 2.5 * r, 2), rng.uniform(0, 10))
        _, l = segment_obstacle_metrics(a, b, Obstacle(c, r, 10.0))
        want = oracles.sampled_chord(a[:2], b[:2], c, r)
        assert abs(l - want) <= 1e-3 * r
        hits += want > 0
    print(f"\n{hits} of 1000 segments cut their disk")
    assert hits > 300


# -- 4 ----------------------------------------------------------------------------------


@crit(4, "optimizer invariants hold over 100 random runs")
def test_optimizer_invariants():
    rng = np.random.default_rng(4)
    for k in range(100):
        sc, _, _ = random_instance(rng)
        algo = "gepso" if k % 2 == 0 else "pso"
        params = GepsoParams(swarm_size=int(rng.integers(2, 16)), iterations=int(rng.integers(1, 25)))
        sc = sc.replace(optimizer=params)
        prev = [np.inf]

        def check(state, sc=sc, prev=prev):
            assert state.gbest_cost <= prev[0]
            prev[0] = state.gbest_cost
            assert sc.bounds.contains(state.positions)
            assert np.all(state.pbest_costs <= state.costs)
            assert params.omega_min <= state.omega1 <= params.omega_max

        res = run(sc, algo=algo, seed=k, callback=check)
        assert np.all(np.diff(res.history_cost) <= 0)
    for _ in range(10000):
        w = update_inertia(rng.uniform(-5, 5), rng.normal(0, 1e3), rng.normal(0, 1e3), int(rng.integers(1, 200)),
                           GepsoParams())
        assert 0.4 <= w <= 0.9


# -- 5 ----------------------------------------------------------------------------------


@crit(5, "same seed gives bitwise identical history and path at 1 and 4 threads")
@pytest.mark.parametrize("algo", ["gepso", "pso"])
def test_determinism(replica, algo):
    sc = replica.with_optimizer(iterations=40)
    ref = run(sc, algo=algo, seed=123, workers=1)
    for workers in (1, 4):
        again = run(sc, algo=algo, seed=123, workers=workers)
        assert np.array_equal(again.history_cost, ref.history_cost)
        assert np.array_equal(again.history_safe, ref.history_safe)
        assert np.array_equal(again.path.points, ref.path.points)


# -- 6 ----------------------------------------------------------------------------------


@crit(6, "expanded plans are rigid and their centroid reproduces the centroid path to 1e-12 m")
def test_formation_rigidity(replica, replica_runs):
    rng = np.random.default_rng(6)
    plans = [r.path for runs in replica_runs.values() for r in runs]
    plans += [CentroidPath(replica.start, replica.end, rng.uniform(0, 50, (5, 3))) for _ in range(200)]
    worst_shape = worst_centroid = 0.0
    for path in plans:
        uavs = expand_path(path, replica.formation)
        worst_shape = max(worst_shape, shape_error(uavs, replica.formation))
        mean = np.mean([u.waypoints for u in uavs], axis=0)
        worst_centroid = max(worst_centroid, float(np.max(np.abs(mean - path.points))))
    print(f"\nworst shape error {worst_shape:.1e} m, worst centroid error {worst_centroid:.1e} m")
    assert worst_shape < 1e-12
    assert worst_centroid < 1e-12


# -- 7 ----------------------------------------------------------------------------------


def best_gepso(replica, replica_runs):
    best = min(replica_runs["gepso"], key=lambda r: r.final_cost)
    return best, expand_path(best.path, replica.formation)


@pytest.mark.slow
@crit(7, "lowest-cost GEPSO run on the replica scenario has zero obstacle cost")
def test_best_run_is_safe(replica, replica_runs):
    best, _ = best_gepso(replica, replica_runs)
    print(f"\nbest seed {best.seed}: {best.breakdown}")
    assert best.breakdown.safe == 0.0
    assert total_cost(best.path, replica).safe == 0.0


@pytest.mark.slow
@crit(7, "lowest-cost GEPSO run: no UAV segment intersects any obstacle disk")
def test_best_run_avoids_disks(replica, replica_runs):
    best, uavs = best_gepso(replica, replica_runs)
    # the cost only charges segments whose midpoint lies inside a disk, so check raw overlap
    crossings = []
    for u in uavs:
        for j, (a, b) in enumerate(zip(u.waypoints[:-1], u.waypoints[1:])):
            for k, o in enumerate(replica.obstacles):
                l = segment_obstacle_metrics(a, b, o)[1]
                if l > 0:
                    crossings.append((u.uav_index, j, k, round(l, 3)))
    print(f"\nbest seed {best.seed}: {len(crossings)} (uav, segment, obstacle, overlap m) crossings {crossings}")
    assert not crossings


# -- 8 ----------------------------------------------------------------------------------


@crit(8, "scenario JSON and WPL round trips; stored results re-evaluate to 1e-9")
def test_interop_round_trips(replica, tmp_path):
    path = save_scenario(replica, tmp_path / "scenario.json")
    assert load_scenario(path) == replica

    sc = replica.with_optimizer(iterations=30)
    run_plan(sc, "gepso", 5, tmp_path / "run")
    stored = load_result(tmp_path / "run/result.json")
    b = eval_path(sc, tmp_path / "run/result.json")
    for key in ("range", "safe", "alt", "mission", "total"):
        assert b.as_dict()[key] == pytest.approx(stored["breakdown"][key], rel=1e-9, abs=1e-12)

    worst = 0.0
    files = export_wpl(tmp_path / "run/result.json", tmp_path / "wpl")
    assert len(files) == 3
    for f, uav in zip(files, stored["uav_paths"]):
        back = wpl_to_local(f, sc.workspace.origin)
        worst = max(worst, float(np.max(np.linalg.norm(back - np.array(uav["waypoints"]), axis=1))))
    print(f"\nworst WPL round-trip error {worst * 1000:.2f} mm")
    assert worst < 0.01


# -- 9 ----------------------------------------------------------------------------------


@crit(9, "below-terrain waypoints give the sentinel; swarms seeded infeasible still find finite paths")
def test_degenerate_inputs():
    sc = make_scenario(n=3, obstacles=[((50, 50, 0), 8.0, 10.0, 1.0)], swarm_size=30, iterations=60)
    b = total_cost(CentroidPath(sc.start, sc.end, [[20, 20, 4.5], [50, 50, -1.0], [70, 70, 0.0]]), sc)
    assert b.alt >= INFEASIBLE and not b.feasible

    rng = np.random.default_rng(9)
    for seed in range(5):
        x0 = np.column_stack([rng.uniform(0, 100, (30, 6)), np.zeros((30, 3))])
        for algo in ("gepso", "pso"):
            res = run(sc, algo=algo, seed=seed, initial_positions=x0)
            assert res.history_cost[0] >= INFEASIBLE
            assert res.breakdown.feasible, (algo, seed)
            assert res.final_cost < INFEASIBLE
