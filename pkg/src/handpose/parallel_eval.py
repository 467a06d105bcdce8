"""Batch objective evaluation over a worker pool.

Each worker owns private render/scratch buffers and evaluates a contiguous
chunk of the batch.  Every pose is scored independently and every pixel sum
uses the same fixed pairwise bracketing, so results do not depend on the
number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .camera_render import pack_geometry, render_packed
from .cost import CostBreakdown, CostParams, collision_penalty, combine, terms_from_sums
from .hand_model import DEFAULT_DIMENSIONS, HandDimensions, as_vector, forward_kinematics
from .reduction import pyramid_sum, pyramid_sum_inplace

__all__ = ["BatchEvaluator", "EvalBatch", "EvaluationError", "default_workers",
           "evaluate_batch", "pyramid_sum"]


class EvaluationError(RuntimeError):
    def __init__(self, index, cause):
        super().__init__(f"pose {index}: {cause}")
        self.index = index


def default_workers() -> int:
    env = os.environ.get("HANDPOSE_WORKERS")
    if env:
        return max(1, int(env))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


@numba.njit(cache=True, nogil=True)
def _score(depth, o_mask, o_depth, d_m, clamp, s_diff, s_union, s_inter):
    """Quantize ``depth`` in place and return the three discrepancy pixel sums."""
    flat = depth.ravel()
    n = flat.size
    for i in range(n):
        rd = np.rint(flat[i])
        flat[i] = rd
        od = o_depth[i]
        rendered = rd != 0.0
        r_m = rendered and ((od != 0.0 and abs(rd - od) < d_m) or od == 0.0)
        s_diff[i] = min(abs(od - rd), clamp) if (rendered and od != 0.0) else 0.0
        s_union[i] = 1.0 if (o_mask[i] or r_m) else 0.0
        s_inter[i] = 1.0 if (o_mask[i] and r_m) else 0.0
    return (pyramid_sum_inplace(s_diff, n), pyramid_sum_inplace(s_union, n),
            pyramid_sum_inplace(s_inter, n))


class _Workspace:
    def __init__(self, shape):
        self.depth = np.empty(shape)
        n = shape[0] * shape[1]
        self.s_diff = np.empty(n)
        self.s_union = np.empty(n)
        self.s_inter = np.empty(n)


class BatchEvaluator:
    """Scores many poses against one shared, read-only observation.

    Calling the evaluator with an ``(n, 26)`` array returns the ``n`` total
    costs, which makes it a batch objective for :func:`handpose.pso.run`.
    """

    def __init__(self, observation, dims: HandDimensions | None = None,
                 params: CostParams | None = None, workers: int | None = None):
        self.observation = observation
        self.cam = observation.cam
        self.dims = dims or DEFAULT_DIMENSIONS
        self.params = params or CostParams()
        self.workers = workers or default_workers()
        self._o_mask = np.ascontiguousarray(observation.mask, dtype=np.bool_).ravel()
        self._o_depth = np.ascontiguousarray(observation.depth, dtype=np.float64).ravel()
        self._spaces = [_Workspace(self.cam.shape) for _ in range(self.workers)]
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _render(self, pose, ws: _Workspace):
        packed = pack_geometry(forward_kinematics(pose, self.dims))
        cam = self.cam
        render_packed(packed, cam.fx, cam.fy, cam.cx, cam.cy, cam.z_near, cam.z_far, ws.depth)

    def _score(self, pose, ws: _Workspace) -> CostBreakdown:
        p = self.params
        sums = _score(ws.depth, self._o_mask, self._o_depth, p.d_m, p.clamp,
                      ws.s_diff, ws.s_union, ws.s_inter)
        depth_term, area_term = terms_from_sums(*sums, p)
        return combine(depth_term, area_term, collision_penalty(pose, p.rest_separation), p)

    def _run_chunk(self, poses, indices, ws: _Workspace):
        out = []
        for i in indices:
            try:
                self._render(poses[i], ws)
                out.append(self._score(poses[i], ws))
            except Exception as exc:
                raise EvaluationError(int(i), exc) from exc
        return out

    def _map(self, fn, n):
        chunks = [c for c in np.array_split(np.arange(n), self.workers) if c.size]
        if self._pool is None or len(chunks) == 1:
            return [r for k, c in enumerate(chunks) for r in fn(c, self._spaces[k])]
        futures = [self._pool.submit(fn, c, self._spaces[k]) for k, c in enumerate(chunks)]
        return [r for f in futures for r in f.result()]

    def evaluate(self, poses) -> list:
        """Cost breakdown of every pose, in input order."""
        poses = np.atleast_2d(np.asarray([as_vector(h) for h in poses]
                                         if not isinstance(poses, np.ndarray) else poses,
                                         dtype=float))
        if poses.ndim != 2 or poses.shape[1] != 26:
            raise ValueError(f"poses must have shape (n, 26), got {poses.shape}")
        return self._map(lambda idx, ws: self._run_chunk(poses, idx, ws), len(poses))

    def __call__(self, poses) -> np.ndarray:
        return np.array([b.total for b in self.evaluate(poses)])

    # split phases, used by the benchmark

    def render_batch(self, poses) -> np.ndarray:
        """Quantized depth maps ``(n, H, W)`` of all poses."""
        poses = np.atleast_2d(np.asarray(poses, dtype=float))
        out = np.empty((len(poses),) + self.cam.shape)

        def work(idx, ws):
            for i in idx:
                self._render(poses[i], ws)
                out[i] = np.rint(ws.depth)
            return []

        self._map(work, len(poses))
        return out

    def score_rendered(self, poses, depths) -> list:
        poses = np.atleast_2d(np.asarray(poses, dtype=float))

        def work(idx, ws):
            res = []
            for i in idx:
                ws.depth[:] = depths[i]
                res.append(self._score(poses[i], ws))
            return res

        return self._map(work, len(poses))


@dataclass(frozen=True)
class EvalBatch:
    poses: object  # (n, 26) array or sequence of HandPose
    observation: object
    dims: HandDimensions | None = None
    params: CostParams | None = None


def evaluate_batch(b: EvalBatch, workers: int | None = None) -> list:
    with BatchEvaluator(b.observation, b.dims, b.params, workers) as ev:
        return ev.evaluate(b.poses)
