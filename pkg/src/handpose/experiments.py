"""Synthetic recovery experiments: reference poses, recognition, error metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera_render import CameraIntrinsics
from .cost import CostParams, collision_penalty
from .hand_model import (DEFAULT_DIMENSIONS, HandDimensions, HandPose, PoseBounds,
                         PoseLike, as_vector, default_bounds, random_pose, wrist_rotation)
from .observation import NoiseSpec, Observation, apply_noise, synthesize_observation
from .parallel_eval import BatchEvaluator
from .pso import PsoParams, run

REFERENCE_SEED = 20140101
# wrist positions for reference poses: well inside the camera's view
REFERENCE_WRIST_BOX = ((-0.2, 0.2), (-0.15, 0.15), (0.7, 1.1))
MIN_VISIBLE_PIXELS = 80


def reference_poses(n=10, seed=REFERENCE_SEED, cam: CameraIntrinsics | None = None,
                    dims: HandDimensions | None = None,
                    bounds: PoseBounds | None = None) -> list:
    """Pinned pseudo-random test poses.

    Pose k comes from its own seed ``(seed, k, attempt)``: finger and wrist
    angles uniform over the joint limits, wrist position uniform over
    :data:`REFERENCE_WRIST_BOX`.  Draws with crossing fingers or fewer than
    :data:`MIN_VISIBLE_PIXELS` hand pixels are rejected.
    """
    cam = cam or CameraIntrinsics.default()
    bounds = bounds or default_bounds()
    poses = []
    for k in range(n):
        for attempt in range(1000):
            rng = np.random.default_rng([seed, k, attempt])
            v = random_pose(rng, bounds).to_array()
            v[:3] = [rng.uniform(lo, hi) for lo, hi in REFERENCE_WRIST_BOX]
            if collision_penalty(v) > 0:
                continue
            obs = synthesize_observation(v, dims, cam)
            if obs.mask.sum() >= MIN_VISIBLE_PIXELS:
                poses.append(HandPose.from_array(v))
                break
        else:  # pragma: no cover
            raise RuntimeError(f"no acceptable reference pose for index {k}")
    return poses


def orientation_error(a: PoseLike, b: PoseLike) -> float:
    """Geodesic angle in degrees between the wrist orientations of two poses."""
    ra = wrist_rotation(*as_vector(a)[3:6])
    rb = wrist_rotation(*as_vector(b)[3:6])
    cos = (np.trace(ra.T @ rb) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))


def position_error(a: PoseLike, b: PoseLike) -> float:
    """Wrist position distance in meters."""
    return float(np.linalg.norm(as_vector(a)[:3] - as_vector(b)[:3]))


@dataclass
class Recovery:
    reference: np.ndarray
    estimate: np.ndarray
    best_cost: float
    trace: list
    position_error: float = field(init=False)
    orientation_error: float = field(init=False)

    def __post_init__(self):
        self.position_error = position_error(self.reference, self.estimate)
        self.orientation_error = orientation_error(self.reference, self.estimate)

    @property
    def reduction(self) -> float:
        """Final over first-generation best cost."""
        return self.trace[-1] / self.trace[0] if self.trace[0] > 0 else 0.0


def recognize(obs: Observation, dims: HandDimensions | None = None,
              cost: CostParams | None = None, pso: PsoParams | None = None,
              workers: int | None = None, bounds: PoseBounds | None = None,
              center=None, radius=None):
    """Run the swarm against one observation; returns a :class:`~handpose.pso.PsoResult`."""
    with BatchEvaluator(obs, dims, cost, workers) as ev:
        return run(ev, bounds or default_bounds(), pso or PsoParams(),
                   center=center, radius=radius)


def recover(h_ref: PoseLike, cam: CameraIntrinsics | None = None,
            dims: HandDimensions | None = None, cost: CostParams | None = None,
            pso: PsoParams | None = None, workers: int | None = None,
            noise: NoiseSpec | None = None, noise_seed: int = 0) -> Recovery:
    """Synthesize an observation of ``h_ref`` and recognize it from a cold start."""
    cam = cam or CameraIntrinsics.default()
    obs = synthesize_observation(h_ref, dims or DEFAULT_DIMENSIONS, cam)
    if noise is not None:
        obs = apply_noise(obs, noise, np.random.default_rng(noise_seed))
    res = recognize(obs, dims, cost, pso, workers)
    return Recovery(as_vector(h_ref).copy(), res.best_position, res.best_cost, res.trace)
