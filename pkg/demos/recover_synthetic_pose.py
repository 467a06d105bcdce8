"""Recover a hand pose from a synthetic depth + silhouette observation.

Renders one reference pose, then runs the swarm twice: from a cold start over
the full joint limits, and warm-started a few centimeters / degrees away from
the truth (as when tracking).  Prints the wrist errors of both.
"""

import time

import numpy as np

from handpose.camera_render import CameraIntrinsics
from handpose.experiments import orientation_error, position_error, recognize, reference_poses
from handpose.observation import synthesize_observation
from handpose.pso import PsoParams

cam = CameraIntrinsics.default(160, 120)
truth = reference_poses(1, cam=cam)[0]
obs = synthesize_observation(truth, None, cam)
print(f"observation: {obs.mask.sum()} hand pixels, depth {obs.depth[obs.mask].min():.0f}"
      f"..{obs.depth[obs.mask].max():.0f} mm")


def report(label, res, elapsed):
    print(f"{label:>6}: best E {res.best_cost:7.3f} (first generation {res.trace[0]:7.3f}), "
          f"wrist off by {position_error(truth, res.best_position) * 100:5.1f} cm / "
          f"{orientation_error(truth, res.best_position):5.1f} deg, {elapsed:.2f} s")


t0 = time.perf_counter()
cold = recognize(obs, pso=PsoParams(seed=0))
report("cold", cold, time.perf_counter() - t0)

# perturb the truth, then search a box around the perturbed guess
rng = np.random.default_rng(1)
guess = truth.to_array()
guess[:3] += rng.uniform(-0.02, 0.02, 3)
guess[3:] += rng.uniform(-8, 8, 23)
radius = np.r_[np.full(3, 0.05), np.full(23, 15.0)]
t0 = time.perf_counter()
warm = recognize(obs, pso=PsoParams(seed=0), center=guess, radius=radius)
report("warm", warm, time.perf_counter() - t0)
