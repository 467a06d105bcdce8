"""How the objective responds as a hypothesis slides away from the truth.

The match mask only credits rendered pixels whose depth is within d_m (1 cm)
of the observation.  Moving the hand along the viewing axis therefore makes
the area term jump once the offset passes d_m, while a sideways shift grows it
gradually.  This shape explains why a cold-start swarm that lands at the
wrong depth sees almost no gradient.
"""

import numpy as np

from handpose.camera_render import CameraIntrinsics
from handpose.cost import objective
from handpose.experiments import reference_poses
from handpose.observation import synthesize_observation

cam = CameraIntrinsics.default(160, 120)
truth = reference_poses(1, cam=cam)[0].to_array()
obs = synthesize_observation(truth, None, cam)

print(" offset | E (x shift)        | E (z shift)")
for mm in (0, 2, 5, 8, 10, 12, 20, 40, 80):
    row = []
    for axis in (0, 2):
        h = truth.copy()
        h[axis] += mm / 1000.0
        b = objective(h, obs)
        row.append(f"{b.total:6.2f} = {b.depth_term:4.2f}+{b.area_term:5.2f}")
    print(f"{mm:4d} mm | " + " | ".join(row))

print("\nangle offset (wrist theta_y):")
for deg in (0, 5, 10, 20, 40):
    h = truth.copy()
    h[4] = np.clip(h[4] + deg, -70, 75)
    print(f"{deg:4d} deg  E = {objective(h, obs).total:6.2f}")
