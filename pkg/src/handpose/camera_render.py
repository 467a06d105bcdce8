"""Pinhole camera and analytic ray-cast depth renderer.

Depth images are 2-D float64 arrays of shape ``(height, width)`` in
millimeters with 0 meaning "no surface".  Silhouette masks are boolean
arrays of the same shape.  Pixel ``(v, u)`` is sampled by the ray through
``(u + 0.5, v + 0.5)``; rays are parameterized with unit z-component so the
ray parameter is the depth itself.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numba
import numpy as np

from .hand_model import Ellipsoid, EllipticCylinder, HandGeometry, Sphere, TruncatedCone

SPHERE, ELLIPSOID, CYLINDER, CONE = 0, 1, 2, 3
PACK_WIDTH = 24
_BOUND = 20  # columns 20..23 hold the bounding sphere (center, radius)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    z_near: float = 300.0
    z_far: float = 2000.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 < self.z_near < self.z_far):
            raise ValueError("need 0 < z_near < z_far")
        if self.width < 1 or self.height < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @classmethod
    def default(cls, width=160, height=120) -> "CameraIntrinsics":
        """Kinect-like field of view (fx = 525 px at 640x480) at any resolution."""
        f = 525.0 * width / 640.0
        return cls(fx=f, fy=525.0 * height / 480.0, cx=width / 2.0,
                   cy=height / 2.0, width=width, height=height)

    @property
    def shape(self):
        return (self.height, self.width)

    def scaled(self, factor: float) -> "CameraIntrinsics":
        return replace(self, fx=self.fx * factor, fy=self.fy * factor,
                       cx=self.cx * factor, cy=self.cy * factor,
                       width=int(round(self.width * factor)),
                       height=int(round(self.height * factor)))

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str, source="<text>") -> "CameraIntrinsics":
        from .config import parse_kv

        kv = parse_kv(text)
        fields = ("fx", "fy", "cx", "cy", "width", "height", "z_near", "z_far")
        unknown = set(kv) - set(fields)
        if unknown:
            raise ValueError(f"{source}: unknown camera keys {sorted(unknown)}")
        missing = [f for f in fields[:6] if f not in kv]
        if missing:
            raise ValueError(f"{source}: missing camera keys {missing}")
        args = {k: (int(v) if k in ("width", "height") else float(v)) for k, v in kv.items()}
        return cls(**args)

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "CameraIntrinsics":
        return cls.from_text(Path(path).read_text(), source=str(path))


def pack_geometry(g: HandGeometry) -> np.ndarray:
    """Flatten primitives into the ``(n, 24)`` float table the kernels consume."""
    out = np.zeros((len(g.primitives), PACK_WIDTH))
    for row, p in zip(out, g.primitives):
        if isinstance(p, Sphere):
            row[0] = SPHERE
            row[1:4] = p.center
            row[4] = p.radius
            row[20:23], row[23] = p.center, p.radius
        elif isinstance(p, Ellipsoid):
            row[0] = ELLIPSOID
            row[1:4] = p.center
            # maps the ellipsoid to the unit sphere: local = M @ (x - center)
            m = np.asarray(p.orientation).T / np.asarray(p.semi_axes)[:, None]
            row[4:13] = m.ravel()
            row[20:23], row[23] = p.center, float(np.max(p.semi_axes))
        elif isinstance(p, EllipticCylinder):
            axis = np.asarray(p.axis, float)
            e1 = np.asarray(p.major_dir, float)
            e2 = np.cross(axis, e1)
            a, b = p.half_axes
            row[0] = CYLINDER
            row[1:4] = p.base_center
            row[4:13] = np.concatenate([e1 / a, e2 / b, axis])
            row[13] = p.length
            row[20:23] = p.base_center + 0.5 * p.length * axis
            row[23] = np.hypot(max(a, b), 0.5 * p.length)
        elif isinstance(p, TruncatedCone):
            seg = np.asarray(p.tip_center) - np.asarray(p.base_center)
            length = float(np.linalg.norm(seg))
            row[0] = CONE
            row[1:4] = p.base_center
            row[4:7] = seg / length
            row[7] = length
            row[8] = p.base_radius
            row[9] = p.tip_radius
            row[20:23] = 0.5 * (np.asarray(p.base_center) + np.asarray(p.tip_center))
            row[23] = 0.5 * length + max(p.base_radius, p.tip_radius)
        else:
            raise TypeError(f"unsupported primitive {type(p).__name__}")
    return out


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _roots(a, b, c):
    # roots of a t^2 - 2 b t + c = 0, ascending; (inf, inf) if none
    disc = b * b - a * c
    if disc < 0.0 or a == 0.0:
        return np.inf, np.inf
    sq = np.sqrt(disc)
    return (b - sq) / a, (b + sq) / a


@numba.njit(cache=True)
def _hit_sphere(p, dx, dy, z_near):
    cx, cy, cz, r = p[1], p[2], p[3], p[4]
    a = dx * dx + dy * dy + 1.0
    b = dx * cx + dy * cy + cz
    c = cx * cx + cy * cy + cz * cz - r * r
    t1, t2 = _roots(a, b, c)
    if t1 >= z_near:
        return t1
    if t2 >= z_near:
        return t2
    return np.inf


@numba.njit(cache=True)
def _to_local(p, dx, dy):
    # origin and direction of the ray mapped through the 3x3 at p[4:13]
    ox = -(p[4] * p[1] + p[5] * p[2] + p[6] * p[3])
    oy = -(p[7] * p[1] + p[8] * p[2] + p[9] * p[3])
    oz = -(p[10] * p[1] + p[11] * p[2] + p[12] * p[3])
    ddx = p[4] * dx + p[5] * dy + p[6]
    ddy = p[7] * dx + p[8] * dy + p[9]
    ddz = p[10] * dx + p[11] * dy + p[12]
    return ox, oy, oz, ddx, ddy, ddz


@numba.njit(cache=True)
def _hit_ellipsoid(p, dx, dy, z_near):
    ox, oy, oz, ddx, ddy, ddz = _to_local(p, dx, dy)
    a = ddx * ddx + ddy * ddy + ddz * ddz
    b = -(ox * ddx + oy * ddy + oz * ddz)
    c = ox * ox + oy * oy + oz * oz - 1.0
    t1, t2 = _roots(a, b, c)
    if t1 >= z_near:
        return t1
    if t2 >= z_near:
        return t2
    return np.inf


@numba.njit(cache=True)
def _hit_cylinder(p, dx, dy, z_near):
    ox, oy, oz, ddx, ddy, ddz = _to_local(p, dx, dy)
    length = p[13]
    best = np.inf
    a = ddx * ddx + ddy * ddy
    b = -(ox * ddx + oy * ddy)
    c = ox * ox + oy * oy - 1.0
    t1, t2 = _roots(a, b, c)
    for t in (t1, t2):
        if t >= z_near and t < best:
            s = oz + t * ddz
            if 0.0 <= s <= length:
                best = t
    if ddz != 0.0:
        for plane in (0.0, length):
            t = (plane - oz) / ddz
            if t >= z_near and t < best:
                qx = ox + t * ddx
                qy = oy + t * ddy
                if qx * qx + qy * qy <= 1.0:
                    best = t
    return best


@numba.njit(cache=True)
def _hit_cone(p, dx, dy, z_near):
    ox, oy, oz = -p[1], -p[2], -p[3]
    wx, wy, wz = p[4], p[5], p[6]
    length, r0, r1 = p[7], p[8], p[9]
    k = (r1 - r0) / length
    so = ox * wx + oy * wy + oz * wz
    sd = dx * wx + dy * wy + wz
    dd = dx * dx + dy * dy + 1.0
    od = ox * dx + oy * dy + oz
    oo = ox * ox + oy * oy + oz * oz
    rho0 = r0 + k * so
    a = dd - sd * sd - k * k * sd * sd
    b = -(od - so * sd - k * sd * rho0)
    c = oo - so * so - rho0 * rho0
    best = np.inf
    if a != 0.0:
        t1, t2 = _roots(a, b, c)
        for t in (t1, t2):
            if t >= z_near and t < best:
                s = so + t * sd
                if 0.0 <= s <= length:
                    best = t
    elif b != 0.0:
        t = c / (2.0 * b)
        s = so + t * sd
        if t >= z_near and 0.0 <= s <= length:
            best = t
    if sd != 0.0:
        for plane, rad in ((0.0, r0), (length, r1)):
            t = (plane - so) / sd
            if t >= z_near and t < best:
                px = ox + t * dx - plane * wx
                py = oy + t * dy - plane * wy
                pz = oz + t - plane * wz
                if px * px + py * py + pz * pz <= rad * rad:
                    best = t
    return best


@numba.njit(cache=True)
def _hit(p, dx, dy, z_near):
    kind = p[0]
    if kind == SPHERE:
        return _hit_sphere(p, dx, dy, z_near)
    if kind == ELLIPSOID:
        return _hit_ellipsoid(p, dx, dy, z_near)
    if kind == CYLINDER:
        return _hit_cylinder(p, dx, dy, z_near)
    return _hit_cone(p, dx, dy, z_near)


@numba.njit(cache=True, nogil=True)
def render_packed(packed, fx, fy, cx, cy, z_near, z_far, out):
    """Ray-cast ``packed`` primitives into ``out`` (height, width), in place."""
    height, width = out.shape
    out[:, :] = np.inf
    for i in range(packed.shape[0]):
        p = packed[i]
        bx, by, bz, br = p[_BOUND], p[_BOUND + 1], p[_BOUND + 2], p[_BOUND + 3]
        if bz + br < z_near or bz - br > z_far:
            continue
        u0, u1, v0, v1 = 0, width - 1, 0, height - 1
        if bz - br > 1e-6:
            xlo = min((bx - br) / (bz - br), (bx - br) / (bz + br))
            xhi = max((bx + br) / (bz - br), (bx + br) / (bz + br))
            ylo = min((by - br) / (bz - br), (by - br) / (bz + br))
            yhi = max((by + br) / (bz - br), (by + br) / (bz + br))
            u0 = max(u0, int(np.floor(fx * xlo + cx - 0.5)))
            u1 = min(u1, int(np.ceil(fx * xhi + cx - 0.5)))
            v0 = max(v0, int(np.floor(fy * ylo + cy - 0.5)))
            v1 = min(v1, int(np.ceil(fy * yhi + cy - 0.5)))
        for v in range(v0, v1 + 1):
            dy = (v + 0.5 - cy) / fy
            for u in range(u0, u1 + 1):
                dx = (u + 0.5 - cx) / fx
                t = _hit(p, dx, dy, z_near)
                if t <= z_far and t < out[v, u]:
                    out[v, u] = t
    for v in range(height):
        for u in range(width):
            if out[v, u] == np.inf:
                out[v, u] = 0.0


def render_depth(g, cam: CameraIntrinsics, out: np.ndarray | None = None) -> np.ndarray:
    """Exact (unquantized) depth of the nearest surface per pixel, in mm.

    ``g`` is a :class:`HandGeometry` or an already packed primitive table.
    """
    packed = g if isinstance(g, np.ndarray) else pack_geometry(g)
    if out is None:
        out = np.empty(cam.shape)
    if packed.shape[0] == 0:
        out[:] = 0.0
        return out
    render_packed(np.ascontiguousarray(packed, dtype=np.float64), cam.fx, cam.fy,
                  cam.cx, cam.cy, cam.z_near, cam.z_far, out)
    return out


def quantize_depth(depth: np.ndarray) -> np.ndarray:
    """Round to integer millimeters, the resolution of stored depth maps."""
    return np.rint(depth)


def silhouette_of(depth: np.ndarray) -> np.ndarray:
    return np.asarray(depth) != 0
