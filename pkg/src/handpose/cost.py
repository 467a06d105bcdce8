"""Observation-vs-model discrepancy and the full pose objective.

Depth differences enter the depth term in centimeters (mm / ``depth_scale``),
so that a well-fitted pose scores around 1 or below.  Pixel sums use
:func:`~handpose.reduction.pyramid_sum`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .camera_render import quantize_depth, render_depth
from .hand_model import DEFAULT_DIMENSIONS, HandDimensions, PoseLike, as_vector, forward_kinematics
from .reduction import pyramid_sum

# adjacent non-thumb finger pairs, thumb side first
COLLISION_PAIRS = (("index", "middle"), ("middle", "ring"), ("ring", "little"))
_ABDUCTION_INDEX = {"index": 11, "middle": 15, "ring": 19, "little": 23}


@dataclass(frozen=True)
class CostParams:
    d_m: float = 10.0  # mm, depth agreement threshold of the match mask
    d_M: float = 40.0  # mm, clamp on per-pixel depth difference
    lam: float = 20.0  # area-term weight
    lam_k: float = 10.0  # collision-penalty weight
    depth_scale: float = 10.0  # mm per depth-term unit
    clamp_at_dm: bool = False  # clamp differences at d_m instead of d_M
    rest_separation: float = 15.0  # deg, angular gap of adjacent fingers at rest

    def __post_init__(self):
        if not 0 < self.d_m <= self.d_M:
            raise ValueError("need 0 < d_m <= d_M")
        if self.lam < 0 or self.lam_k < 0:
            raise ValueError("weights must be non-negative")
        if self.depth_scale <= 0:
            raise ValueError("depth_scale must be positive")

    @property
    def clamp(self) -> float:
        return self.d_m if self.clamp_at_dm else self.d_M


class CostBreakdown(NamedTuple):
    depth_term: float
    area_term: float
    penalty_term: float
    total: float


def _check_shapes(*images):
    shapes = {np.shape(im) for im in images}
    if len(shapes) != 1:
        raise ValueError(f"image dimension mismatch: {sorted(shapes)}")


def match_mask(r_d: np.ndarray, o_d: np.ndarray, d_m: float) -> np.ndarray:
    """Rendered pixels that agree with the observed depth or fall where it is undefined."""
    _check_shapes(r_d, o_d)
    r_d = np.asarray(r_d)
    o_d = np.asarray(o_d)
    rendered = r_d != 0
    agree = (o_d != 0) & (np.abs(r_d - o_d) < d_m)
    return rendered & (agree | (o_d == 0))


def pixel_terms(o_mask, o_d, r_d, p: CostParams):
    """Per-pixel (clamped depth difference in mm, union, intersection) as float arrays."""
    _check_shapes(o_mask, o_d, r_d)
    o_mask = np.asarray(o_mask, dtype=bool)
    r_m = match_mask(r_d, o_d, p.d_m)
    both = (np.asarray(o_d) != 0) & (np.asarray(r_d) != 0)
    diff = np.where(both, np.minimum(np.abs(o_d - r_d), p.clamp), 0.0)
    return diff, (o_mask | r_m).astype(float), (o_mask & r_m).astype(float)


def terms_from_sums(s_depth, s_union, s_inter, p: CostParams):
    """Depth and area terms from the three pixel sums."""
    if s_union == 0:
        return 0.0, 0.0
    depth_term = (s_depth / p.depth_scale) / s_union
    area_term = p.lam * (1.0 - 2.0 * s_inter / (s_inter + s_union))
    return depth_term, area_term


def discrepancy(o, r_d: np.ndarray, p: CostParams | None = None):
    """(depth_term, area_term) of a rendered depth map against observation ``o``."""
    p = p or CostParams()
    diff, union, inter = pixel_terms(o.mask, o.depth, r_d, p)
    return terms_from_sums(pyramid_sum(diff), pyramid_sum(union), pyramid_sum(inter), p)


def collision_penalty(h: PoseLike, rest_separation: float = 15.0) -> float:
    """Sum of angular overlaps of adjacent fingers (degrees); 0 when none cross.

    For a pair (a, b) with ``a`` nearer the thumb the gap is
    ``rest_separation + abduction(a) - abduction(b)``; abduction is positive
    toward the thumb, so the gap closes as the fingers swing into each other.
    """
    v = as_vector(h)
    kc = 0.0
    for a, b in COLLISION_PAIRS:
        phi = rest_separation + float(v[_ABDUCTION_INDEX[a]]) - float(v[_ABDUCTION_INDEX[b]])
        kc += -min(phi, 0.0)
    return kc


def combine(depth_term, area_term, kc, p: CostParams) -> CostBreakdown:
    penalty = p.lam_k * kc
    return CostBreakdown(depth_term, area_term, penalty, depth_term + area_term + penalty)


def render_pose(h: PoseLike, cam, d: HandDimensions | None = None) -> np.ndarray:
    """Integer-millimeter depth map of a pose, as compared against observations."""
    return quantize_depth(render_depth(forward_kinematics(h, d or DEFAULT_DIMENSIONS), cam))


def objective(h: PoseLike, o, d: HandDimensions | None = None,
              p: CostParams | None = None) -> CostBreakdown:
    p = p or CostParams()
    r_d = render_pose(h, o.cam, d)
    depth_term, area_term = discrepancy(o, r_d, p)
    return combine(depth_term, area_term, collision_penalty(h, p.rest_separation), p)
