import math

import numpy as np
import pytest

from handpose.hand_model import PoseBounds
from handpose.pso import (PsoParams, batched, constriction_weight, evaluate, init_swarm,
                          mutate, run, step)


def sphere(x):
    return np.sum(np.asarray(x) ** 2, axis=-1)


def box(d, lo=-10.0, hi=10.0):
    return PoseBounds(np.full(d, lo), np.full(d, hi))


def test_constriction_weight():
    psi = 4.1
    assert constriction_weight(2.8, 1.3) == pytest.approx(
        2.0 / abs(2.0 - psi - math.sqrt(psi * psi - 4 * psi)), abs=1e-12)
    assert constriction_weight(2.8, 1.3) == pytest.approx(0.729843788, abs=1e-9)
    with pytest.raises(ValueError):
        constriction_weight(2.0, 2.0)


def test_params_validation():
    with pytest.raises(ValueError):
        PsoParams(c1=2.0, c2=2.0)
    with pytest.raises(ValueError):
        PsoParams(n_particles=1)
    with pytest.raises(ValueError):
        PsoParams(mutation_fraction=1.5)
    with pytest.raises(ValueError):
        PsoParams(mutation_dims=(9,)).resolved_mutation_dims(6)


def test_default_mutation_dims():
    assert list(PsoParams().resolved_mutation_dims(26)) == list(range(6, 26))
    assert list(PsoParams().resolved_mutation_dims(6)) == list(range(6))


def test_init_uniform_in_bounds():
    s = init_swarm(box(4, -1, 3), PsoParams(n_particles=500))
    assert s.positions.min() >= -1 and s.positions.max() <= 3
    assert np.all(s.velocities == 0)
    assert s.positions.mean() == pytest.approx(1.0, abs=0.15)


def test_init_warm_start():
    b = box(3)
    s = init_swarm(b, PsoParams(n_particles=50), center=[9.5, 0, 0], radius=1.0)
    assert np.array_equal(s.positions[0], [9.5, 0, 0])
    assert s.positions[:, 0].max() <= 10 and s.positions[:, 0].min() >= 8.5
    assert np.all(np.abs(s.positions[:, 1:]) <= 1.0)


def test_first_evaluation_sets_bests():
    p = PsoParams(n_particles=10)
    s = evaluate(init_swarm(box(2), p), sphere)
    assert np.array_equal(s.pbest, s.positions)
    assert s.gbest_cost == s.pbest_cost.min() and s.generation == 1


def test_fixed_point():
    # every particle on the optimum with zero velocity stays put
    p = PsoParams(n_particles=8)
    s = evaluate(init_swarm(box(3), p, center=np.zeros(3), radius=0.0), sphere)
    before = s.positions.copy()
    step(s, sphere)
    assert np.array_equal(s.positions, before) and s.gbest_cost == 0.0


def test_step_requires_evaluation():
    with pytest.raises(RuntimeError):
        step(init_swarm(box(2), PsoParams()), sphere)


def test_positions_stay_in_bounds_and_bests_improve():
    p = PsoParams(n_particles=20)
    s = evaluate(init_swarm(box(5, -1, 1), p), lambda x: -np.sum(x, axis=1))
    prev = s.pbest_cost.copy()
    for _ in range(15):
        step(s, lambda x: -np.sum(x, axis=1))
        assert s.positions.min() >= -1 and s.positions.max() <= 1
        assert np.all(s.pbest_cost <= prev)
        prev = s.pbest_cost.copy()
    # walls are absorbing: a particle sitting on the wall has no outward velocity
    on_wall = s.positions == 1.0
    assert np.all(s.velocities[on_wall] <= 0)


def test_mutation_hits_worst_half_only_in_selected_dims():
    p = PsoParams(n_particles=10, mutation_dims=(1, 3))
    s = evaluate(init_swarm(box(4), p), sphere)
    s.velocities[:] = 1.0
    before = s.positions.copy()
    worst = set(np.argsort(-s.pbest_cost)[:5])
    mutate(s, box(4), p)
    changed = np.any(s.positions != before, axis=1)
    assert set(np.flatnonzero(changed)) == worst
    assert np.array_equal(s.positions[:, [0, 2]], before[:, [0, 2]])
    assert np.all(s.velocities[sorted(worst)][:, [1, 3]] == 0)
    assert np.all(s.velocities[:, [0, 2]] == 1.0)


def test_mutation_count_floors():
    p = PsoParams(n_particles=7, mutation_fraction=0.5)
    s = evaluate(init_swarm(box(2), p), sphere)
    before = s.positions.copy()
    mutate(s, box(2), p)
    assert np.any(s.positions != before, axis=1).sum() == 3


def test_run_trace_shape():
    res = run(sphere, box(6), PsoParams(seed=1, stop_threshold=0.0))
    assert len(res.trace) == 30
    assert all(b <= a for a, b in zip(res.trace, res.trace[1:]))
    assert res.best_cost == res.trace[-1] == sphere(res.best_position)


def test_stop_threshold_ends_early():
    res = run(sphere, box(2), PsoParams(stop_threshold=1.0, seed=0))
    assert res.best_cost < 1.0 and len(res.trace) < 30


def test_one_dimensional_quadratic():
    res = run(sphere, box(1), PsoParams(stop_threshold=0.0, seed=0))
    assert res.best_cost < 1e-6


def test_scale_sanity_on_sphere():
    # the swarm makes strong progress on a smooth bowl
    for seed in range(5):
        res = run(sphere, box(6), PsoParams(stop_threshold=0.0, seed=seed))
        assert res.best_cost < 1e-2 * res.trace[0]


def test_deterministic_given_seed():
    a = run(sphere, box(6), PsoParams(seed=3, stop_threshold=0))
    b = run(sphere, box(6), PsoParams(seed=3, stop_threshold=0))
    c = run(sphere, box(6), PsoParams(seed=4, stop_threshold=0))
    assert a.trace == b.trace and np.array_equal(a.best_position, b.best_position)
    assert a.trace != c.trace


def test_per_dimension_random_option():
    res = run(sphere, box(4), PsoParams(per_dimension_random=True, seed=0, stop_threshold=0))
    assert res.best_cost < res.trace[0]


def test_nan_costs_are_treated_as_worst():
    def f(x):
        out = sphere(x)
        out[0] = np.nan
        return out
    res = run(f, box(2), PsoParams(seed=0, max_generations=3, stop_threshold=0))
    assert np.isfinite(res.best_cost)


def test_batched_and_shape_check():
    f = batched(lambda x: float(x[0]))
    assert f(np.array([[1.0, 2.0], [3.0, 4.0]])).tolist() == [1.0, 3.0]
    s = init_swarm(box(2), PsoParams(n_particles=4))
    with pytest.raises(ValueError):
        evaluate(s, lambda x: np.zeros(3))


def test_callback_sees_every_generation():
    seen = []
    run(sphere, box(3), PsoParams(seed=0, stop_threshold=0, max_generations=5),
        callback=lambda s: seen.append(s.generation))
    assert seen == [1, 2, 3, 4, 5]
