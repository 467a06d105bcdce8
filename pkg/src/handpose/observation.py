"""Observations (silhouette + depth): synthesis, noise, and PGM file I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera_render import CameraIntrinsics, quantize_depth, render_depth, silhouette_of
from .hand_model import HandDimensions, PoseLike, forward_kinematics


class ObservationError(ValueError):
    """Malformed or inconsistent observation data."""


@dataclass(frozen=True)
class Observation:
    mask: np.ndarray  # bool (H, W)
    depth: np.ndarray  # float64 (H, W), integer millimeters, 0 = undefined
    cam: CameraIntrinsics

    def __post_init__(self):
        if self.mask.shape != self.depth.shape:
            raise ObservationError(
                f"mask {self.mask.shape} and depth {self.depth.shape} differ in shape")
        if self.mask.shape != self.cam.shape:
            raise ObservationError(
                f"image shape {self.mask.shape} does not match camera {self.cam.shape}")

    def __eq__(self, other):
        if not isinstance(other, Observation):
            return NotImplemented
        return (self.cam == other.cam and np.array_equal(self.mask, other.mask)
                and np.array_equal(self.depth, other.depth))

    __hash__ = None


@dataclass(frozen=True)
class NoiseSpec:
    depth_sigma: float = 0.0  # mm, Gaussian on valid depth pixels
    dropout_prob: float = 0.0  # valid depth pixel -> 0
    mask_flip_prob: float = 0.0

    def __post_init__(self):
        if self.depth_sigma < 0:
            raise ValueError("depth_sigma must be >= 0")
        for name in ("dropout_prob", "mask_flip_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


def synthesize_observation(h_ref: PoseLike, d: HandDimensions | None,
                           cam: CameraIntrinsics) -> Observation:
    depth = quantize_depth(render_depth(forward_kinematics(h_ref, d), cam))
    return Observation(silhouette_of(depth), depth, cam)


def apply_noise(o: Observation, n: NoiseSpec, rng: np.random.Generator) -> Observation:
    """Corrupt an observation the way a depth sensor and segmenter would.

    Depth noise is re-quantized to integer mm and kept inside the camera's
    depth range.  Dropout zeroes depth only.  A mask pixel flipped off also
    loses its depth (the segmenter discarded it); one flipped on has no depth.
    """
    shape = o.depth.shape
    noise = rng.standard_normal(shape) * n.depth_sigma
    drop = rng.random(shape) < n.dropout_prob
    flip = rng.random(shape) < n.mask_flip_prob

    valid = o.depth != 0
    depth = o.depth.copy()
    if n.depth_sigma > 0:
        depth[valid] = np.clip(np.rint(depth[valid] + noise[valid]),
                               np.ceil(o.cam.z_near), np.floor(o.cam.z_far))
    depth[valid & drop] = 0.0
    depth[flip & o.mask] = 0.0
    mask = o.mask ^ flip
    return Observation(mask, depth, o.cam)


# ---------------------------------------------------------------------------
# PGM (P5) files


def _read_token(buf: bytes, pos: int, path):
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ObservationError(f"{path}: truncated PGM header")
    return buf[start:pos], pos


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM; returns uint8 or uint16 (big-endian samples) array."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise ObservationError(f"{path}: {exc.strerror}") from None
    magic, pos = _read_token(buf, 0, path)
    if magic != b"P5":
        raise ObservationError(f"{path}: bad magic {magic!r}, expected b'P5'")
    values = []
    for field in ("width", "height", "maxval"):
        tok, pos = _read_token(buf, pos, path)
        try:
            values.append(int(tok))
        except ValueError:
            raise ObservationError(f"{path}: header field {field} is not an integer: {tok!r}") from None
    width, height, maxval = values
    if width < 1 or height < 1:
        raise ObservationError(f"{path}: header field width/height must be positive")
    if not 0 < maxval < 65536:
        raise ObservationError(f"{path}: header field maxval out of range: {maxval}")
    pos += 1  # single whitespace after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    body = buf[pos:pos + need]
    if len(body) < need:
        raise ObservationError(f"{path}: truncated PGM body ({len(body)} of {need} bytes)")
    return np.frombuffer(body, dtype=dtype).reshape(height, width).astype(dtype.newbyteorder("="))


def write_pgm(path, data: np.ndarray, maxval: int):
    data = np.asarray(data)
    height, width = data.shape
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + data.astype(dtype).tobytes())


def save_observation(o: Observation, mask_path, depth_path, cam_path=None):
    if np.any(o.depth < 0) or np.any(o.depth > 65535) or np.any(o.depth != np.rint(o.depth)):
        raise ObservationError("depth must be integer millimeters in [0, 65535]")
    write_pgm(mask_path, np.where(o.mask, 255, 0), 255)
    write_pgm(depth_path, o.depth, 65535)
    if cam_path is not None:
        o.cam.save(cam_path)


def load_observation(mask_path, depth_path, cam) -> Observation:
    """Load a mask/depth PGM pair.  ``cam`` is intrinsics or a ``.cam`` path."""
    if not isinstance(cam, CameraIntrinsics):
        try:
            cam = CameraIntrinsics.load(cam)
        except OSError as exc:
            raise ObservationError(f"{cam}: {exc.strerror}") from None
        except ValueError as exc:
            raise ObservationError(str(exc)) from None
    mask_raw = read_pgm(mask_path)
    depth_raw = read_pgm(depth_path)
    if mask_raw.dtype != np.uint8:
        raise ObservationError(f"{mask_path}: mask must be 8-bit")
    if depth_raw.dtype != np.uint16:
        raise ObservationError(f"{depth_path}: depth must be 16-bit")
    if mask_raw.shape != depth_raw.shape:
        raise ObservationError(
            f"dimension mismatch: {mask_path} is {mask_raw.shape[1]}x{mask_raw.shape[0]}, "
            f"{depth_path} is {depth_raw.shape[1]}x{depth_raw.shape[0]}")
    if mask_raw.shape != cam.shape:
        raise ObservationError(
            f"dimension mismatch: {depth_path} is {depth_raw.shape[1]}x{depth_raw.shape[0]}, "
            f"camera is {cam.width}x{cam.height}")
    return Observation(mask_raw != 0, depth_raw.astype(np.float64), cam)


def observation_paths(directory, name):
    """(mask, depth, cam) paths of the observation ``name`` in ``directory``."""
    directory = Path(directory)
    return (directory / f"{name}.mask.pgm", directory / f"{name}.depth.pgm",
            directory / f"{name}.cam")


def write_observation(o: Observation, directory, name):
    Path(directory).mkdir(parents=True, exist_ok=True)
    save_observation(o, *observation_paths(directory, name))


def read_observation(directory, name) -> Observation:
    mask, depth, cam = observation_paths(directory, name)
    return load_observation(mask, depth, cam)
