import math

import numpy as np
import pytest

from handpose.camera_render import CameraIntrinsics
from handpose.cost import (CostParams, collision_penalty, discrepancy, match_mask, objective,
                           render_pose)
from handpose.experiments import reference_poses
from handpose.hand_model import default_bounds, flat_hand, random_pose
from handpose.observation import Observation, synthesize_observation

CAM4 = CameraIntrinsics.default(4, 4)


def _pairwise(xs):
    """Independent recursive pairwise sum: adjacent pairs, odd tail carried."""
    if not xs:
        return 0.0
    if len(xs) == 1:
        return xs[0]
    nxt = [xs[i] + xs[i + 1] for i in range(0, len(xs) - 1, 2)]
    if len(xs) % 2:
        nxt.append(xs[-1])
    return _pairwise(nxt)


def oracle_discrepancy(o_mask, o_d, r_d, d_m=10.0, clamp=40.0, lam=20.0, scale=10.0):
    diffs, union, inter = [], [], []
    h, w = o_d.shape
    for v in range(h):
        for u in range(w):
            od, rd, om = float(o_d[v, u]), float(r_d[v, u]), bool(o_mask[v, u])
            rm = rd != 0 and (od == 0 or abs(rd - od) < d_m)
            diffs.append(min(abs(od - rd), clamp) if (od != 0 and rd != 0) else 0.0)
            union.append(1.0 if (om or rm) else 0.0)
            inter.append(1.0 if (om and rm) else 0.0)
    su, si = _pairwise(union), _pairwise(inter)
    if su == 0:
        return 0.0, 0.0
    return (_pairwise(diffs) / scale) / su, lam * (1.0 - 2.0 * si / (si + su))


def _random_pair(rng, shape=(4, 4)):
    o_d = np.where(rng.random(shape) < 0.6, rng.integers(700, 760, shape), 0).astype(float)
    o_mask = (o_d != 0) ^ (rng.random(shape) < 0.1)
    r_d = np.where(rng.random(shape) < 0.6, rng.integers(700, 760, shape), 0).astype(float)
    return o_mask, o_d, r_d


@pytest.mark.parametrize("clamp_at_dm", [False, True])
def test_discrepancy_matches_brute_force(clamp_at_dm):
    rng = np.random.default_rng(42)
    p = CostParams(clamp_at_dm=clamp_at_dm)
    for _ in range(100):
        o_mask, o_d, r_d = _random_pair(rng)
        got = discrepancy(Observation(o_mask, o_d, CAM4), r_d, p)
        assert got == oracle_discrepancy(o_mask, o_d, r_d, clamp=p.clamp)


def test_discrepancy_larger_images_match_oracle():
    rng = np.random.default_rng(3)
    cam = CameraIntrinsics.default(13, 7)
    for _ in range(10):
        o_mask, o_d, r_d = _random_pair(rng, cam.shape)
        got = discrepancy(Observation(o_mask, o_d, cam), r_d)
        assert got == pytest.approx(oracle_discrepancy(o_mask, o_d, r_d), rel=0, abs=1e-12)


def test_match_mask_rules():
    o_d = np.array([[800.0, 800.0, 0.0, 800.0]])
    r_d = np.array([[805.0, 815.0, 900.0, 0.0]])
    assert match_mask(r_d, o_d, 10.0).tolist() == [[True, False, True, False]]
    # threshold is strict
    assert not match_mask(np.array([[810.0]]), np.array([[800.0]]), 10.0)[0, 0]


def test_empty_union_is_zero():
    o = Observation(np.zeros((4, 4), bool), np.zeros((4, 4)), CAM4)
    assert discrepancy(o, np.zeros((4, 4))) == (0.0, 0.0)


def test_disjoint_silhouettes_score_lambda():
    o_mask = np.zeros((4, 4), bool)
    o_mask[0] = True
    o = Observation(o_mask, np.where(o_mask, 800.0, 0.0), CAM4)
    r_d = np.zeros((4, 4))
    r_d[3] = 800.0
    depth_term, area_term = discrepancy(o, r_d)
    assert depth_term == 0.0 and area_term == 20.0


def test_clamp_limits_depth_term():
    o_mask = np.ones((4, 4), bool)
    o = Observation(o_mask, np.full((4, 4), 800.0), CAM4)
    far = np.full((4, 4), 1500.0)
    assert discrepancy(o, far)[0] == pytest.approx(40.0 / 10.0)
    assert discrepancy(o, far, CostParams(clamp_at_dm=True))[0] == pytest.approx(10.0 / 10.0)


def test_collision_penalty_examples():
    v = flat_hand().to_array()
    assert collision_penalty(v) == 0.0  # fingers at rest do not cross
    v[11], v[15] = -15.0, 15.0  # index toward the little finger, middle toward the thumb
    assert collision_penalty(v) == 15.0
    v[11], v[15] = 15.0, -10.0  # spread apart
    assert collision_penalty(v) == 0.0
    v = flat_hand().to_array()
    v[19], v[23] = -30.0, 0.0  # ring crosses over the little finger
    assert collision_penalty(v) == 15.0


def test_objective_self_match_is_zero():
    cam = CameraIntrinsics.default(160, 120)
    for h in reference_poses(5, cam=cam):
        assert collision_penalty(h) == 0.0
        b = objective(h, synthesize_observation(h, None, cam))
        assert b.total == 0.0 and b.depth_term == 0.0 and b.area_term == 0.0


def test_objective_components():
    cam = CameraIntrinsics.default(160, 120)
    h = flat_hand(0, 0, 0.8).to_array()
    o = synthesize_observation(h, None, cam)
    shifted = h.copy()
    shifted[0] += 0.02
    b = objective(shifted, o)
    assert b.total > 0 and b.area_term > 0
    crossed = h.copy()
    crossed[11], crossed[15] = -15.0, 15.0
    b = objective(crossed, o)
    assert b.penalty_term == 10.0 * collision_penalty(crossed)
    assert math.isclose(b.total, b.depth_term + b.area_term + b.penalty_term)


def test_objective_is_nonnegative_and_bounded():
    cam = CameraIntrinsics.default(80, 60)
    rng = np.random.default_rng(0)
    o = synthesize_observation(flat_hand(0, 0, 0.8), None, cam)
    for _ in range(20):
        h = random_pose(rng, default_bounds())
        b = objective(h, o)
        assert 0 <= b.depth_term <= 4.0 and 0 <= b.area_term <= 20.0


def test_render_pose_is_integer_mm():
    d = render_pose(flat_hand(0, 0, 0.8), CameraIntrinsics.default(80, 60))
    assert np.array_equal(d, np.rint(d)) and d.any()


def test_cost_params_validation():
    with pytest.raises(ValueError):
        CostParams(d_m=50.0, d_M=40.0)
    with pytest.raises(ValueError):
        CostParams(lam=-1.0)
