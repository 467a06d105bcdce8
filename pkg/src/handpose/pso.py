"""Bounded particle swarm optimizer with constriction and worst-half mutation.

Objectives are batch functions: they take an ``(n, d)`` array of positions
and return ``n`` costs.  Use :func:`batched` to lift a per-vector function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .hand_model import FINGER_DIMS, N_PARAMS

BatchObjective = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PsoParams:
    n_particles: int = 64
    max_generations: int = 30
    stop_threshold: float = 1.0
    c1: float = 2.8
    c2: float = 1.3
    mutation_period: int = 3
    mutation_fraction: float = 0.5
    mutation_dims: Optional[tuple] = None  # None: finger angles for 26-D, else all
    per_dimension_random: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.c1 + self.c2 <= 4:
            raise ValueError(f"c1 + c2 must exceed 4, got {self.c1 + self.c2}")
        if self.n_particles < 2:
            raise ValueError("need at least 2 particles")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        if not 0.0 <= self.mutation_fraction <= 1.0:
            raise ValueError("mutation_fraction must be in [0, 1]")
        if self.mutation_period < 1:
            raise ValueError("mutation_period must be >= 1")

    def resolved_mutation_dims(self, ndim: int) -> np.ndarray:
        if self.mutation_dims is not None:
            dims = np.asarray(self.mutation_dims, dtype=int)
        elif ndim == N_PARAMS:
            dims = np.asarray(FINGER_DIMS)
        else:
            dims = np.arange(ndim)
        if dims.size and (dims.min() < 0 or dims.max() >= ndim):
            raise ValueError(f"mutation_dims out of range for {ndim}-D problem")
        return dims


class Particle(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    personal_best: np.ndarray
    personal_best_cost: float


@dataclass
class Swarm:
    """Struct-of-arrays swarm state; ``step`` and ``mutate`` update it in place."""

    positions: np.ndarray
    velocities: np.ndarray
    pbest: np.ndarray
    pbest_cost: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    rng: np.random.Generator
    weight: float
    c1: float
    c2: float
    per_dimension_random: bool = False
    gbest: np.ndarray = field(default=None)
    gbest_cost: float = math.inf
    generation: int = 0

    def __len__(self):
        return self.positions.shape[0]

    def particle(self, i: int) -> Particle:
        return Particle(self.positions[i], self.velocities[i], self.pbest[i],
                        float(self.pbest_cost[i]))


class PsoResult(NamedTuple):
    best_position: np.ndarray
    best_cost: float
    trace: list
    swarm: Swarm


def constriction_weight(c1: float, c2: float) -> float:
    psi = c1 + c2
    if psi <= 4:
        raise ValueError(f"constriction needs c1 + c2 > 4, got {psi}")
    return 2.0 / abs(2.0 - psi - math.sqrt(psi * psi - 4.0 * psi))


def batched(f: Callable[[np.ndarray], float]) -> BatchObjective:
    def objective(positions):
        return np.array([f(x) for x in positions], dtype=float)
    return objective


def init_swarm(bounds, params: PsoParams, center=None, radius=None) -> Swarm:
    """Seed particles uniformly in ``bounds`` or in ``center +- radius`` (clipped).

    With a center, particle 0 sits exactly on it so a warm start is always
    evaluated.  Velocities start at zero; costs are unset until evaluated.
    """
    lower = np.asarray(bounds.lower, dtype=float)
    upper = np.asarray(bounds.upper, dtype=float)
    rng = np.random.default_rng(params.seed)
    n, d = params.n_particles, lower.size
    if center is None:
        lo, hi = lower, upper
    else:
        center = np.clip(np.asarray(center, dtype=float), lower, upper)
        r = np.broadcast_to(np.abs(np.asarray(
            radius if radius is not None else 0.0, dtype=float)), (d,))
        lo = np.maximum(lower, center - r)
        hi = np.minimum(upper, center + r)
    positions = rng.uniform(lo, hi, size=(n, d))
    if center is not None:
        positions[0] = center
    return Swarm(
        positions=positions,
        velocities=np.zeros((n, d)),
        pbest=positions.copy(),
        pbest_cost=np.full(n, math.inf),
        lower=lower,
        upper=upper,
        rng=rng,
        weight=constriction_weight(params.c1, params.c2),
        c1=params.c1,
        c2=params.c2,
        per_dimension_random=params.per_dimension_random,
    )


def evaluate(swarm: Swarm, objective: BatchObjective) -> Swarm:
    """Score current positions, then refresh personal and global bests."""
    costs = np.asarray(objective(swarm.positions), dtype=float)
    if costs.shape != (len(swarm),):
        raise ValueError(f"objective returned shape {costs.shape}, expected ({len(swarm)},)")
    costs = np.where(np.isnan(costs), math.inf, costs)
    improved = costs < swarm.pbest_cost
    swarm.pbest[improved] = swarm.positions[improved]
    swarm.pbest_cost[improved] = costs[improved]
    best = int(np.argmin(swarm.pbest_cost))
    if swarm.gbest is None or swarm.pbest_cost[best] < swarm.gbest_cost:
        swarm.gbest = swarm.pbest[best].copy()
        swarm.gbest_cost = float(swarm.pbest_cost[best])
    swarm.generation += 1
    return swarm


def step(swarm: Swarm, objective: BatchObjective) -> Swarm:
    """One generation: constricted velocity update, clamp, evaluate."""
    if swarm.gbest is None:
        raise RuntimeError("swarm must be evaluated before stepping")
    n, d = swarm.positions.shape
    shape = (n, d) if swarm.per_dimension_random else (n, 1)
    r1 = swarm.rng.random(shape)
    r2 = swarm.rng.random(shape)
    x = swarm.positions
    v = swarm.weight * (swarm.velocities
                        + swarm.c1 * r1 * (swarm.pbest - x)
                        + swarm.c2 * r2 * (swarm.gbest - x))
    x = x + v
    # absorbing walls: sit on the bound and lose that velocity component
    clamped = (x < swarm.lower) | (x > swarm.upper)
    x = np.clip(x, swarm.lower, swarm.upper)
    v[clamped] = 0.0
    swarm.positions = x
    swarm.velocities = v
    return evaluate(swarm, objective)


def mutate(swarm: Swarm, bounds, params: PsoParams) -> Swarm:
    """Re-draw the mutation dims of the worst particles (by personal best).

    Personal bests are kept; the new positions are scored by the next step.
    """
    n, d = swarm.positions.shape
    count = int(math.floor(n * params.mutation_fraction))
    dims = params.resolved_mutation_dims(d)
    if count == 0 or dims.size == 0:
        return swarm
    lower = np.asarray(bounds.lower, dtype=float)[dims]
    upper = np.asarray(bounds.upper, dtype=float)[dims]
    worst = np.argsort(-swarm.pbest_cost, kind="stable")[:count]
    draws = swarm.rng.uniform(lower, upper, size=(count, dims.size))
    rows = worst[:, None]
    swarm.positions[rows, dims] = draws
    swarm.velocities[rows, dims] = 0.0
    return swarm


def run(objective: BatchObjective, bounds, params: PsoParams | None = None,
        center=None, radius=None,
        callback: Callable[[Swarm], None] | None = None) -> PsoResult:
    """Minimize ``objective`` over ``bounds``.

    Stops once the global best drops below ``params.stop_threshold`` or after
    ``params.max_generations`` evaluated generations (the initial evaluation
    is generation 1).  ``trace[k]`` is the global best after generation k+1.
    """
    params = params or PsoParams()
    swarm = init_swarm(bounds, params, center, radius)
    evaluate(swarm, objective)
    trace = [swarm.gbest_cost]
    if callback:
        callback(swarm)
    while swarm.gbest_cost >= params.stop_threshold and swarm.generation < params.max_generations:
        if swarm.generation % params.mutation_period == 0:
            mutate(swarm, bounds, params)
        step(swarm, objective)
        trace.append(swarm.gbest_cost)
        if callback:
            callback(swarm)
    return PsoResult(swarm.gbest.copy(), swarm.gbest_cost, trace, swarm)
