"""Track a hand sweeping across the image with warm starts.

Writes a short numbered sequence of observations to a temp directory and runs
``handpose track`` on it.  Frame 0 starts around a known pose (a cold start
rarely finds the hand, see objective_landscape.py); every later frame starts
its swarm around the previous answer.
"""

import tempfile
from pathlib import Path

import numpy as np

from handpose.camera_render import CameraIntrinsics
from handpose.cli import main
from handpose.experiments import position_error, reference_poses
from handpose.hand_model import load_pose, save_pose
from handpose.observation import synthesize_observation, write_observation

cam = CameraIntrinsics.default(80, 60)
start = reference_poses(1, cam=cam)[0].to_array()

work = Path(tempfile.mkdtemp(prefix="handpose-track-"))
frames = work / "frames"
truths = []
for k in range(6):
    h = start.copy()
    h[0] += 0.01 * k  # 1 cm per frame to the right
    h[8] += 5.0 * k  # thumb PIP curls
    truths.append(h)
    write_observation(synthesize_observation(h, None, cam), frames, f"f{k:02d}")
# start the tracker at the true first pose, like a hand-off from a detector
save_pose(work / "first.txt", truths[0])

main(["track", str(frames), "-o", str(work / "out"), "--seed", "3",
      "--warm-start", str(work / "first.txt")])
for k, h in enumerate(truths):
    est = load_pose(work / "out" / f"f{k:02d}.pose.txt")
    print(f"frame {k}: wrist error {position_error(h, est) * 100:.1f} cm")
print(f"outputs in {work}")
