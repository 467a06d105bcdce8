"""Model-based 26-DoF hand pose recovery from depth and silhouette images."""

__version__ = "0.1.0"

from .camera_render import CameraIntrinsics, render_depth  # noqa: E402
from .cost import CostBreakdown, CostParams, collision_penalty, discrepancy, objective  # noqa: E402
from .hand_model import (HandDimensions, HandPose, PoseBounds, default_bounds,  # noqa: E402
                         forward_kinematics)
from .observation import NoiseSpec, Observation, apply_noise, synthesize_observation  # noqa: E402
from .parallel_eval import BatchEvaluator, evaluate_batch, pyramid_sum  # noqa: E402
from .pso import PsoParams, constriction_weight, run  # noqa: E402

__all__ = [
    "BatchEvaluator", "CameraIntrinsics", "CostBreakdown", "CostParams", "HandDimensions",
    "HandPose", "NoiseSpec", "Observation", "PoseBounds", "PsoParams", "apply_noise",
    "collision_penalty", "constriction_weight", "default_bounds", "discrepancy",
    "evaluate_batch", "forward_kinematics", "objective", "pyramid_sum", "render_depth", "run",
    "synthesize_observation",
]
