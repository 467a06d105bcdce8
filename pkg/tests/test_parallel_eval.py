import math

import numpy as np
import pytest

from handpose.camera_render import CameraIntrinsics
from handpose.cost import CostParams, objective
from handpose.experiments import REFERENCE_WRIST_BOX, reference_poses
from handpose.hand_model import default_bounds, random_pose
from handpose.observation import synthesize_observation
from handpose.parallel_eval import (BatchEvaluator, EvalBatch, EvaluationError,
                                    default_workers, evaluate_batch, pyramid_sum)
from handpose.reduction import pyramid_sum_inplace

CAM = CameraIntrinsics.default(160, 120)


@pytest.fixture(scope="module")
def setup():
    ref = reference_poses(1, cam=CAM)[0]
    obs = synthesize_observation(ref, None, CAM)
    rng = np.random.default_rng(11)
    poses = []
    for _ in range(24):
        v = random_pose(rng, default_bounds()).to_array()
        v[:3] = [rng.uniform(lo, hi) for lo, hi in REFERENCE_WRIST_BOX]
        poses.append(v)
    poses.append(ref.to_array())
    return obs, np.array(poses)


def test_pyramid_sum_small_cases():
    assert pyramid_sum([]) == 0
    assert pyramid_sum([5.0]) == 5.0
    assert pyramid_sum([1, 2, 3]) == 6
    assert pyramid_sum(np.array([True, True, False])) == 2
    # bracketing ((a+b)+(c+d))+e is visible in float rounding
    vals = [1e16, 1.0, -1e16, 1.0, 1.0]
    assert pyramid_sum(vals) == ((1e16 + 1.0) + (-1e16 + 1.0)) + 1.0


def test_pyramid_sum_inplace_matches_numpy():
    rng = np.random.default_rng(0)
    for n in (0, 1, 2, 3, 7, 16, 1000, 19200):
        x = rng.standard_normal(n)
        assert pyramid_sum_inplace(x.copy(), n) == pyramid_sum(x)


def test_pyramid_sum_accuracy():
    x = np.random.default_rng(1).random(100_000)
    exact = math.fsum(x)
    assert abs(pyramid_sum(x) - exact) / exact <= 1e-12
    ints = np.random.default_rng(2).integers(0, 1000, 100_000).astype(float)
    assert pyramid_sum(ints) == ints.sum() == float(int(ints.astype(np.int64).sum()))


def test_matches_scalar_objective(setup):
    obs, poses = setup
    with BatchEvaluator(obs, workers=2) as ev:
        got = ev.evaluate(poses)
    for pose, b in zip(poses, got):
        assert b == objective(pose, obs)
    assert got[-1].total == 0.0


def test_worker_count_invariance(setup):
    obs, poses = setup
    results = []
    for w in (1, 2, 3, 4, 7):
        with BatchEvaluator(obs, workers=w) as ev:
            results.append(ev(poses))
    for r in results[1:]:
        assert np.array_equal(r, results[0])


def test_permutation_equivariance(setup):
    obs, poses = setup
    perm = np.random.default_rng(5).permutation(len(poses))
    with BatchEvaluator(obs, workers=3) as ev:
        assert np.array_equal(ev(poses)[perm], ev(poses[perm]))


def test_phase_split_matches_full_evaluation(setup):
    obs, poses = setup
    with BatchEvaluator(obs, workers=2) as ev:
        depths = ev.render_batch(poses)
        assert np.array_equal(depths, np.rint(depths))
        assert ev.score_rendered(poses, depths) == ev.evaluate(poses)


def test_cost_params_are_used(setup):
    obs, poses = setup
    a = evaluate_batch(EvalBatch(poses[:4], obs), workers=1)
    b = evaluate_batch(EvalBatch(poses[:4], obs, params=CostParams(lam=40.0)), workers=1)
    for x, y in zip(a, b):
        assert y.area_term == pytest.approx(2 * x.area_term)


def test_bad_shape_is_rejected(setup):
    obs, poses = setup
    with BatchEvaluator(obs, workers=1) as ev:
        with pytest.raises(ValueError, match="26"):
            ev(poses[:, :25])


def test_errors_name_the_pose(setup, monkeypatch):
    import handpose.parallel_eval as pe
    obs, poses = setup
    real = pe.forward_kinematics

    def flaky(pose, dims):
        if pose[0] == poses[5][0]:
            raise RuntimeError("boom")
        return real(pose, dims)

    monkeypatch.setattr(pe, "forward_kinematics", flaky)
    with BatchEvaluator(obs, workers=3) as ev:
        with pytest.raises(EvaluationError, match="pose 5: boom") as info:
            ev(poses)
    assert info.value.index == 5


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("HANDPOSE_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.delenv("HANDPOSE_WORKERS")
    assert default_workers() >= 1
