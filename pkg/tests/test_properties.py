"""Property-based checks with hypothesis."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from handpose.camera_render import CameraIntrinsics
from handpose.cost import CostParams, collision_penalty, discrepancy
from handpose.hand_model import (HandPose, PoseBounds, clamp_pose, default_bounds,
                                 forward_kinematics, translate)
from handpose.observation import Observation
from handpose.reduction import pyramid_sum, pyramid_sum_inplace

BOUNDS = default_bounds()
CAM = CameraIntrinsics.default(6, 5)

poses = st.builds(
    lambda u: BOUNDS.lower + np.asarray(u) * BOUNDS.span,
    arrays(np.float64, 26, elements=st.floats(0.0, 1.0)),
)
depth_maps = arrays(np.float64, (5, 6),
                    elements=st.one_of(st.just(0.0), st.integers(300, 2000).map(float)))


@given(arrays(np.int64, st.integers(0, 300), elements=st.integers(-10**6, 10**6)))
def test_pyramid_sum_exact_on_integers(a):
    assert pyramid_sum(a) == int(a.sum())
    assert pyramid_sum_inplace(a.astype(float), a.size) == float(a.sum())


@given(arrays(np.float64, st.integers(1, 500), elements=st.floats(-1e6, 1e6)))
def test_pyramid_sum_numpy_equals_numba(a):
    assert pyramid_sum(a) == pyramid_sum_inplace(a.copy(), a.size)
    assert math.isclose(pyramid_sum(a), math.fsum(a), rel_tol=1e-9, abs_tol=1e-3)


@given(poses)
def test_clamp_is_idempotent_and_inside(v):
    c = clamp_pose(v + 50.0, BOUNDS).to_array()
    assert BOUNDS.contains(c)
    assert np.array_equal(clamp_pose(c, BOUNDS).to_array(), c)
    assert np.array_equal(clamp_pose(v, BOUNDS).to_array(), v)


@given(poses)
def test_pose_round_trip(v):
    assert np.array_equal(HandPose.from_array(v).to_array(), v)


@settings(max_examples=30)
@given(poses)
def test_fk_translation_equivariance(v):
    base = v.copy()
    base[:3] = 0.0
    g = forward_kinematics(v)
    g0 = translate(forward_kinematics(base), v[:3] * 1000.0)
    for a, b in zip(g, g0):
        for name in a.__dataclass_fields__:
            assert np.array_equal(np.asarray(getattr(a, name)), np.asarray(getattr(b, name)))


@given(poses)
def test_collision_penalty_nonnegative(v):
    assert collision_penalty(v) >= 0.0


@given(depth_maps, depth_maps, arrays(bool, (5, 6)))
def test_discrepancy_ranges(o_d, r_d, flip):
    o = Observation((o_d != 0) ^ flip, o_d, CAM)
    p = CostParams()
    depth_term, area_term = discrepancy(o, r_d, p)
    assert 0.0 <= depth_term <= p.d_M / p.depth_scale
    assert 0.0 <= area_term <= p.lam


@given(depth_maps)
def test_discrepancy_self_match(o_d):
    o = Observation(o_d != 0, o_d, CAM)
    assert discrepancy(o, o_d) == (0.0, 0.0)


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(0, 50)), min_size=1, max_size=8))
def test_pose_bounds_contain_their_corners(rows):
    lo = np.array([r[0] for r in rows])
    hi = lo + np.array([r[1] for r in rows])
    b = PoseBounds(lo, hi)
    assert b.contains(lo) and b.contains(hi)
