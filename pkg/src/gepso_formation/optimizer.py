"""Particle swarm engine: canonical PSO and generalized PSO (GEPSO).

A particle encodes the ``n`` interior waypoints of a centroid path as one
flat vector laid out ``[x_1..x_n, y_1..y_n, z_1..z_n]``.

Randomness is drawn from counter-based Philox streams keyed by the run seed
and addressed by ``(iteration, particle)``, so results do not depend on how
cost evaluations are scheduled across threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .cost import INFEASIBLE, CentroidPath, CostBreakdown, evaluate_points

if TYPE_CHECKING:
    from .scenario import Scenario

ALGORITHMS = ("gepso", "pso")


@dataclass(frozen=True)
class GepsoParams:
    """Swarm settings. Defaults are the reference GEPSO coefficient set.

    ``r_max`` bounds the uniform draws ``r_j ~ U[0, r_max[j]]``. The last
    three fields set the velocity clamp, the random-velocity scale and the
    initial-velocity scale as fractions of each dimension's range.
    """

    omega: tuple = (0.5, 0.5, 0.8, 0.8, 0.9)
    alpha: tuple = (4.5, 2.0, 2.0)
    phi: tuple = (2.0, 3.0, 2.0, 2.0)
    r_max: tuple = (2.0, 2.0, 1.5, 1.5)
    psi: float = 0.9
    omega_min: float = 0.4
    omega_max: float = 0.9
    swarm_size: int = 100
    iterations: int = 100
    v_max_frac: float = 0.2
    v_rand_frac: float = 0.1
    v_init_frac: float = 0.1

    def __post_init__(self):
        for name, size in (("omega", 5), ("alpha", 3), ("phi", 4), ("r_max", 4)):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != size:
                raise ValueError(f"{name} needs {size} values, got {len(vals)}")
            if any(not (math.isfinite(v) and v >= 0) for v in vals):
                raise ValueError(f"{name} values must be finite and >= 0")
            object.__setattr__(self, name, vals)
        if not 0 < self.psi <= 1:
            raise ValueError(f"psi must be in (0, 1], got {self.psi}")
        if not self.omega_min < self.omega_max:
            raise ValueError("omega_min must be below omega_max")
        if int(self.swarm_size) < 2:
            raise ValueError("swarm_size must be at least 2")
        if int(self.iterations) < 0:
            raise ValueError("iterations must be >= 0")
        for name in ("v_max_frac", "v_rand_frac", "v_init_frac"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        object.__setattr__(self, "swarm_size", int(self.swarm_size))
        object.__setattr__(self, "iterations", int(self.iterations))


@dataclass(frozen=True, eq=False)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise ValueError("box bounds need lower < upper in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def dim(self) -> int:
        return len(self.lower)

    @classmethod
    def for_waypoints(cls, n: int, extent_x: float, extent_y: float, h_max: float) -> "BoxBounds":
        lo = np.zeros(3 * n)
        hi = np.concatenate([np.full(n, extent_x), np.full(n, extent_y), np.full(n, h_max)])
        return cls(lo, hi)

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all((x >= self.lower) & (x <= self.upper)))


def encode(path: CentroidPath | np.ndarray) -> np.ndarray:
    inner = path.interior if isinstance(path, CentroidPath) else np.asarray(path, dtype=float)
    return inner.T.reshape(-1).copy()


def decode(position, scenario: "Scenario") -> CentroidPath:
    """Interior waypoint ``j`` is ``(position[j], position[n+j], position[2n+j])``."""
    pos = np.asarray(position, dtype=float)
    n = scenario.n_waypoints
    if pos.shape != (3 * n,):
        raise ValueError(f"position must have length {3 * n}, got shape {pos.shape}")
    return CentroidPath(scenario.start, scenario.end, pos.reshape(3, n).T)


def positions_to_points(positions: np.ndarray, start, end) -> np.ndarray:
    """Flat particle positions ``(P, 3n)`` to full waypoint arrays ``(P, n+2, 3)``."""
    p = positions.shape[0]
    inner = positions.reshape(p, 3, -1).transpose(0, 2, 1)
    s = np.broadcast_to(np.asarray(start, dtype=float), (p, 1, 3))
    e = np.broadcast_to(np.asarray(end, dtype=float), (p, 1, 3))
    return np.concatenate([s, inner, e], axis=1)


def particle_rng(seed: int, iteration: int, index: int) -> np.random.Generator:
    """Independent stream for one particle at one iteration (iteration 0 is initialization)."""
    key = int(seed) & ((1 << 64) - 1)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, iteration, index]))


def pso_velocity(x, v, pbest, gbest, omega, phi1, phi2, rng=None, r=None):
    """Canonical PSO velocity; ``r`` overrides the two uniform draws."""
    if r is None:
        r = rng.random(2)
    r1, r2 = r
    return omega * v + phi1 * r1 * (pbest - x) + phi2 * r2 * (gbest - x)


def draw_gepso_coefficients(rng: np.random.Generator, params: GepsoParams, dim: int) -> np.ndarray:
    """``(4, dim)`` draws with row ``j`` uniform on ``[0, r_max[j]]``."""
    return rng.random((4, dim)) * np.asarray(params.r_max)[:, None]


def gepso_velocity(x, v, pbest, gbest, p_rand, v_rand, omega1, params: GepsoParams, rng=None, r=None):
    """Generalized PSO velocity with constriction ``psi``.

    ``r`` is a ``(4, ...)`` array of draws broadcastable against ``x``; when
    omitted it is drawn from ``rng``.
    """
    x = np.asarray(x, dtype=float)
    if r is None:
        r = draw_gepso_coefficients(rng, params, x.shape[-1])
    w, a, f = params.omega, params.alpha, params.phi
    a2 = w[1] * f[0] * r[0]
    a3 = w[2] * a[0] * f[1] * r[1]
    a4 = w[3] * a[1] * f[2] * r[2]
    a5 = w[4] * a[2] * f[3] * r[3]
    return params.psi * (
        omega1 * v + a2 * (pbest - x) + a3 * (gbest - x) + a4 * (p_rand - x) + a5 * v_rand
    )


def update_inertia(omega_prev: float, f_curr: float, f_prev: float, iteration: int, params: GepsoParams) -> float:
    """Dynamic inertia from the last global-best improvement, clamped to ``[omega_min, omega_max]``."""
    delta = f_curr - f_prev
    if not math.isfinite(delta) or f_curr >= INFEASIBLE or f_prev >= INFEASIBLE:
        delta = 0.0
    total = max(params.iterations, 1)
    kappa = omega_prev - (params.omega_max - params.omega_min) / total * iteration * delta
    return min(max(kappa, params.omega_min), params.omega_max)


class Particle(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_cost: float


@dataclass
class SwarmState:
    """Swarm held as arrays with one row per particle."""

    positions: np.ndarray
    velocities: np.ndarray
    costs: np.ndarray
    pbest_positions: np.ndarray
    pbest_scores: np.ndarray  # (P, 5) breakdown rows
    gbest_index: int
    gbest_position: np.ndarray
    gbest_score: np.ndarray
    gbest_cost_prev: float = math.inf
    omega1: float = 0.5
    iteration: int = 0
    history_cost: list = field(default_factory=list)
    history_safe: list = field(default_factory=list)

    @property
    def pbest_costs(self) -> np.ndarray:
        return self.pbest_scores[:, 4]

    @property
    def gbest_cost(self) -> float:
        return float(self.gbest_score[4])

    @property
    def size(self) -> int:
        return len(self.positions)

    def particle(self, i: int) -> Particle:
        return Particle(
            self.positions[i], self.velocities[i], self.pbest_positions[i], float(self.pbest_costs[i])
        )

    def _record(self):
        self.history_cost.append(float(self.gbest_score[4]))
        self.history_safe.append(float(self.gbest_score[1]))


class Evaluator:
    """Scores particle positions, optionally splitting the swarm across threads."""

    def __init__(self, scenario: "Scenario", workers: int = 1):
        self.scenario = scenario
        self.workers = max(int(workers), 1)
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def __call__(self, positions: np.ndarray) -> np.ndarray:
        sc = self.scenario
        if self._pool is None:
            return evaluate_points(positions_to_points(positions, sc.start, sc.end), sc)
        chunks = np.array_split(np.arange(len(positions)), self.workers)
        parts = self._pool.map(
            lambda idx: evaluate_points(positions_to_points(positions[idx], sc.start, sc.end), sc),
            [c for c in chunks if len(c)],
        )
        return np.concatenate(list(parts))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _gbest_index(scores: np.ndarray) -> int:
    # argmin returns the first minimum, so earlier particles win ties
    return int(np.argmin(scores[:, 4]))


def init_swarm(bounds: BoxBounds, params: GepsoParams, seed: int, evaluate, initial_positions=None) -> SwarmState:
    """Uniform positions in the box; velocities ``gamma * span`` with ``gamma ~ U[-v_init, v_init]``."""
    p, dim = params.swarm_size, bounds.dim
    pos = np.empty((p, dim))
    vel = np.empty((p, dim))
    span = bounds.span
    for i in range(p):
        rng = particle_rng(seed, 0, i)
        pos[i] = bounds.lower + rng.random(dim) * span
        vel[i] = rng.uniform(-params.v_init_frac, params.v_init_frac, dim) * span
    if initial_positions is not None:
        pos = bounds.clip(np.array(initial_positions, dtype=float).reshape(p, dim))
    scores = evaluate(pos)
    g = _gbest_index(scores)
    state = SwarmState(
        positions=pos,
        velocities=vel,
        costs=scores[:, 4].copy(),
        pbest_positions=pos.copy(),
        pbest_scores=scores.copy(),
        gbest_index=g,
        gbest_position=pos[g].copy(),
        gbest_score=scores[g].copy(),
        omega1=params.omega[0],
    )
    state._record()
    return state


def _draw(seed, iteration, p, dim, params, algo):
    """Per-particle draws for one iteration: coefficients, random velocity unit, random-particle index."""
    if algo == "pso":
        r = np.empty((p, 2))
        for i in range(p):
            r[i] = particle_rng(seed, iteration, i).random(2)
        return r, None, None
    r = np.empty((4, p, dim))
    unit = np.empty((p, dim))
    pick = np.empty(p, dtype=np.intp)
    for i in range(p):
        rng = particle_rng(seed, iteration, i)
        r[:, i] = draw_gepso_coefficients(rng, params, dim)
        unit[i] = rng.uniform(-1.0, 1.0, dim)
        pick[i] = rng.integers(p)
    return r, unit, pick


def step(state: SwarmState, bounds: BoxBounds, params: GepsoParams, seed: int, evaluate, algo: str = "gepso") -> SwarmState:
    """One synchronous iteration of the swarm, updating ``state`` in place.

    The global best and the personal bests used as random attractors are
    those from the start of the iteration. Costs of the current positions
    were computed at the end of the previous iteration and are reused.
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    t = state.iteration + 1
    x, v = state.positions, state.velocities
    p, dim = x.shape
    span = bounds.span
    g = state.gbest_position
    r, unit, pick = _draw(seed, t, p, dim, params, algo)

    if algo == "pso":
        w = params.omega[0]
        r1, r2 = r[:, :1], r[:, 1:]
        new_v = pso_velocity(x, v, state.pbest_positions, g, w, params.phi[0], params.phi[1], r=(r1, r2))
    else:
        omegas = np.empty((p, 1))
        w = state.omega1
        for i in range(p):
            w = update_inertia(w, state.gbest_cost, state.gbest_cost_prev, t, params)
            omegas[i] = w
        state.omega1 = w
        p_rand = state.pbest_positions[pick]
        v_rand = unit * (params.v_rand_frac * span)
        new_v = gepso_velocity(x, v, state.pbest_positions, g, p_rand, v_rand, omegas, params, r=r)

    v_max = params.v_max_frac * span
    new_v = np.minimum(np.maximum(new_v, -v_max), v_max)
    new_x = bounds.clip(x + new_v)

    scores = evaluate(new_x)
    better = scores[:, 4] < state.pbest_scores[:, 4]
    state.pbest_positions[better] = new_x[better]
    state.pbest_scores[better] = scores[better]
    state.positions = new_x
    state.velocities = new_v
    state.costs = scores[:, 4].copy()

    state.gbest_cost_prev = state.gbest_cost
    gi = _gbest_index(state.pbest_scores)
    if state.pbest_scores[gi, 4] < state.gbest_score[4]:
        state.gbest_index = gi
        state.gbest_position = state.pbest_positions[gi].copy()
        state.gbest_score = state.pbest_scores[gi].copy()
    state.iteration = t
    state._record()
    return state


@dataclass
class RunResult:
    algorithm: str
    seed: int
    path: CentroidPath
    breakdown: CostBreakdown
    history_cost: np.ndarray
    history_safe: np.ndarray
    wall_time: float = 0.0
    uav_paths: list = field(default_factory=list)

    @property
    def final_cost(self) -> float:
        return float(self.history_cost[-1])

    def convergence_iteration(self, rel: float = 0.01) -> int:
        return convergence_iteration(self.history_cost, rel)


def convergence_iteration(history, rel: float = 0.01) -> int:
    """First iteration whose best cost is within ``rel`` of the final best."""
    h = np.asarray(history, dtype=float)
    final = h[-1]
    return int(np.argmax(h <= final + rel * abs(final)))


def run(
    scenario: "Scenario",
    params: GepsoParams | None = None,
    algo: str = "gepso",
    seed: int | None = None,
    workers: int = 1,
    initial_positions=None,
    callback=None,
) -> RunResult:
    """Optimize the centroid path of ``scenario``.

    Parameters
    ----------
    params : GepsoParams, optional
        Defaults to the scenario's optimizer settings.
    algo : {"gepso", "pso"}
        ``"pso"`` uses the canonical velocity law with fixed inertia
        ``omega[0]`` and acceleration constants ``phi[0]``, ``phi[1]``.
    seed : int, optional
        Defaults to the scenario seed.
    workers : int
        Threads used for cost evaluation. Has no effect on results.
    initial_positions : array, optional
        ``(swarm_size, 3n)`` starting positions overriding the random ones.
    callback : callable, optional
        Called as ``callback(state)`` after initialization and every step.
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")
    params = params or scenario.optimizer
    seed = scenario.seed if seed is None else int(seed)
    bounds = scenario.bounds
    t0 = time.perf_counter()
    with Evaluator(scenario, workers) as evaluate:
        state = init_swarm(bounds, params, seed, evaluate, initial_positions)
        if callback:
            callback(state)
        for _ in range(params.iterations):
            step(state, bounds, params, seed, evaluate, algo)
            if callback:
                callback(state)
    path = decode(state.gbest_position, scenario)
    breakdown = CostBreakdown(*(float(v) for v in state.gbest_score))
    return RunResult(
        algorithm=algo,
        seed=seed,
        path=path,
        breakdown=breakdown,
        history_cost=np.array(state.history_cost),
        history_safe=np.array(state.history_safe),
        wall_time=time.perf_counter() - t0,
    )
