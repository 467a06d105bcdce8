"""26-DoF hand parameterization, joint limits and forward kinematics.

Conventions
-----------
Camera frame is right-handed: +x right, +y down, +z into the scene.
Positions of the wrist are in meters; every geometric quantity produced
by :func:`forward_kinematics` is in millimeters.

The flattened pose vector is::

    [x_c, y_c, z_c, theta_x, theta_y, theta_z,
     thumb(mp_x, mp_z, pip, dip), index(...), middle(...), ring(...), little(...)]

At zero orientation the palm faces the camera (palm normal along -z),
fingers point up the image (-y) and the thumb lies on the +x side.
Wrist rotation is R = Rx(theta_x) @ Ry(theta_y) @ Rz(theta_z) (intrinsic
x, then y, then z).  Finger flexion rotates about the local x axis and bends
toward the palm side; abduction rotates about the palm normal, positive
toward the thumb.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np

FINGER_NAMES = ("thumb", "index", "middle", "ring", "little")
WRIST_NAMES = ("x_c", "y_c", "z_c", "theta_x", "theta_y", "theta_z")
JOINT_NAMES = ("theta_mp_x", "theta_mp_z", "theta_pip", "theta_dip")
PARAM_NAMES = WRIST_NAMES + tuple(
    f"{finger}.{joint}" for finger in FINGER_NAMES for joint in JOINT_NAMES
)
N_PARAMS = 26
WRIST_POSITION = slice(0, 3)
WRIST_ANGLES = slice(3, 6)
FINGER_DIMS = tuple(range(6, 26))

# Joint limits in degrees, one row per finger: (mp_x, mp_z, pip, dip).
FINGER_LIMITS = {
    "thumb": ((0, 90), (-15, 60), (0, 50), (-15, 70)),
    "index": ((0, 90), (-15, 15), (0, 100), (0, 60)),
    "middle": ((0, 90), (-10, 10), (0, 100), (0, 60)),
    "ring": ((0, 90), (-30, 0), (0, 100), (0, 60)),
    "little": ((0, 90), (-45, 0), (0, 100), (0, 60)),
}
# Wrist: position in meters, orientation in degrees.
WRIST_LIMITS = ((-0.9, 0.9), (-0.68, 0.68), (0.5, 1.5), (-30, 120), (-70, 75), (-35, 20))


class FingerPose(NamedTuple):
    theta_mp_x: float
    theta_mp_z: float
    theta_pip: float
    theta_dip: float


class WristPose(NamedTuple):
    x_c: float
    y_c: float
    z_c: float
    theta_x: float
    theta_y: float
    theta_z: float


@dataclass(frozen=True)
class HandPose:
    """Full hand state: wrist pose plus five finger poses (thumb first)."""

    wrist: WristPose
    fingers: tuple

    def __post_init__(self):
        if len(self.fingers) != 5:
            raise ValueError(f"expected 5 finger poses, got {len(self.fingers)}")

    def to_array(self) -> np.ndarray:
        out = np.empty(N_PARAMS)
        out[:6] = self.wrist
        for i, finger in enumerate(self.fingers):
            out[6 + 4 * i: 10 + 4 * i] = finger
        return out

    @classmethod
    def from_array(cls, values) -> "HandPose":
        values = np.asarray(values, dtype=float)
        if values.shape != (N_PARAMS,):
            raise ValueError(f"pose vector must have shape (26,), got {values.shape}")
        wrist = WristPose(*map(float, values[:6]))
        fingers = tuple(
            FingerPose(*map(float, values[6 + 4 * i: 10 + 4 * i])) for i in range(5)
        )
        return cls(wrist, fingers)

    def finger(self, name: str) -> FingerPose:
        return self.fingers[FINGER_NAMES.index(name)]


PoseLike = Union[HandPose, Sequence[float], np.ndarray]


def as_vector(h: PoseLike) -> np.ndarray:
    """Return the flattened 26-vector of a pose (copy for HandPose, view otherwise)."""
    if isinstance(h, HandPose):
        return h.to_array()
    v = np.asarray(h, dtype=float)
    if v.shape != (N_PARAMS,):
        raise ValueError(f"pose vector must have shape (26,), got {v.shape}")
    return v


@dataclass(frozen=True)
class PoseBounds:
    """Box bounds on a parameter vector. Works for any dimensionality."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        if np.any(lower > upper):
            bad = int(np.argmax(lower > upper))
            raise ValueError(f"lower > upper at index {bad}")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def ndim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))


def default_bounds() -> PoseBounds:
    lower = [lo for lo, _ in WRIST_LIMITS]
    upper = [hi for _, hi in WRIST_LIMITS]
    for name in FINGER_NAMES:
        lower += [lo for lo, _ in FINGER_LIMITS[name]]
        upper += [hi for _, hi in FINGER_LIMITS[name]]
    return PoseBounds(np.array(lower, float), np.array(upper, float))


def clamp_pose(h: PoseLike, b: PoseBounds) -> HandPose:
    return HandPose.from_array(np.clip(as_vector(h), b.lower, b.upper))


def random_pose(rng: np.random.Generator, b: PoseBounds) -> HandPose:
    return HandPose.from_array(rng.uniform(b.lower, b.upper))


def flat_hand(x=0.0, y=0.0, z=1.0) -> HandPose:
    """Open hand, palm toward the camera, all joint angles zero."""
    v = np.zeros(N_PARAMS)
    v[:3] = x, y, z
    return HandPose.from_array(v)


# ---------------------------------------------------------------------------
# Geometry


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class TruncatedCone:
    base_center: np.ndarray
    tip_center: np.ndarray
    base_radius: float
    tip_radius: float


@dataclass(frozen=True)
class Ellipsoid:
    """Ellipsoid whose local axes are the columns of ``orientation``."""

    center: np.ndarray
    semi_axes: np.ndarray
    orientation: np.ndarray


@dataclass(frozen=True)
class EllipticCylinder:
    """Closed elliptic cylinder.

    ``half_axes`` are measured along ``major_dir`` and ``axis x major_dir``.
    """

    base_center: np.ndarray
    axis: np.ndarray
    half_axes: np.ndarray
    length: float
    major_dir: np.ndarray


Primitive = Union[Sphere, TruncatedCone, Ellipsoid, EllipticCylinder]


@dataclass(frozen=True)
class HandGeometry:
    primitives: tuple

    def __len__(self):
        return len(self.primitives)

    def __iter__(self):
        return iter(self.primitives)

    def joint_centers(self, finger: str) -> np.ndarray:
        """(4, 3) joint-sphere centers of one finger, base to tip."""
        start = 3 + 7 * FINGER_NAMES.index(finger)
        return np.array([self.primitives[start + 2 * k].center for k in range(4)])


def translate(g: HandGeometry, t) -> HandGeometry:
    """Rigidly translate every primitive by ``t`` (millimeters)."""
    t = np.asarray(t, dtype=float)
    out = []
    for p in g.primitives:
        if isinstance(p, Sphere):
            out.append(Sphere(p.center + t, p.radius))
        elif isinstance(p, TruncatedCone):
            out.append(TruncatedCone(p.base_center + t, p.tip_center + t,
                                     p.base_radius, p.tip_radius))
        elif isinstance(p, Ellipsoid):
            out.append(Ellipsoid(p.center + t, p.semi_axes, p.orientation))
        else:
            out.append(EllipticCylinder(p.base_center + t, p.axis, p.half_axes,
                                        p.length, p.major_dir))
    return HandGeometry(tuple(out))


@dataclass(frozen=True)
class FingerDimensions:
    base_offset: tuple  # mm, hand frame
    segment_lengths: tuple  # 3 values, mm
    segment_radii: tuple  # 4 values, mm: MP, PIP, DIP, tip


def _default_fingers():
    return {
        "thumb": FingerDimensions((34.0, -22.0, 0.0), (44.0, 32.0, 28.0), (11.0, 10.0, 9.0, 8.5)),
        "index": FingerDimensions((29.0, -100.0, 0.0), (45.0, 27.0, 22.0), (9.0, 8.0, 7.0, 6.0)),
        "middle": FingerDimensions((9.5, -102.0, 0.0), (50.0, 30.0, 24.0), (9.0, 8.0, 7.0, 6.0)),
        "ring": FingerDimensions((-10.0, -99.0, 0.0), (46.0, 29.0, 23.0), (8.5, 7.5, 6.5, 5.5)),
        "little": FingerDimensions((-29.0, -92.0, 0.0), (36.0, 22.0, 20.0), (8.0, 7.0, 6.0, 5.0)),
    }


@dataclass(frozen=True)
class HandDimensions:
    """Hand size parameters in millimeters.

    Defaults follow adult anthropometric averages.  The thumb's base frame is
    yawed by ``thumb_yaw`` degrees (toward +x) on the palm and then rolled 90
    degrees about its own axis so that its flexion swings across the palm.
    """

    palm_half_width: float = 45.0
    palm_half_thickness: float = 15.0
    palm_length: float = 100.0
    palm_cap_length: float = 12.0
    fingers: dict = field(default_factory=_default_fingers)
    thumb_proximal_ellipsoid: tuple = (12.0, 24.0, 10.0)
    thumb_yaw: float = 40.0

    def __post_init__(self):
        scalars = (self.palm_half_width, self.palm_half_thickness,
                   self.palm_length, self.palm_cap_length)
        if min(scalars) <= 0 or min(self.thumb_proximal_ellipsoid) <= 0:
            raise ValueError("palm sizes and ellipsoid semi-axes must be positive")
        if set(self.fingers) != set(FINGER_NAMES):
            raise ValueError(f"fingers must be exactly {FINGER_NAMES}")
        for name, f in self.fingers.items():
            if len(f.segment_lengths) != 3 or len(f.segment_radii) != 4:
                raise ValueError(f"{name}: need 3 segment lengths and 4 radii")
            if min(f.segment_lengths) <= 0 or min(f.segment_radii) <= 0:
                raise ValueError(f"{name}: lengths and radii must be positive")
            if any(np.diff(f.segment_radii) > 0):
                raise ValueError(f"{name}: radii must be non-increasing toward the tip")

    def to_text(self) -> str:
        lines = [
            f"palm.half_width = {self.palm_half_width!r}",
            f"palm.half_thickness = {self.palm_half_thickness!r}",
            f"palm.length = {self.palm_length!r}",
            f"palm.cap_length = {self.palm_cap_length!r}",
            f"thumb.proximal_ellipsoid = {_fmt(self.thumb_proximal_ellipsoid)}",
            f"thumb.yaw = {self.thumb_yaw!r}",
        ]
        for name in FINGER_NAMES:
            f = self.fingers[name]
            lines += [
                f"{name}.base_offset = {_fmt(f.base_offset)}",
                f"{name}.segment_lengths = {_fmt(f.segment_lengths)}",
                f"{name}.segment_radii = {_fmt(f.segment_radii)}",
            ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "HandDimensions":
        from .config import parse_kv

        kv = parse_kv(text)
        base = cls()
        fingers = dict(base.fingers)
        kwargs = {}
        scalar_keys = {
            "palm.half_width": "palm_half_width",
            "palm.half_thickness": "palm_half_thickness",
            "palm.length": "palm_length",
            "palm.cap_length": "palm_cap_length",
            "thumb.yaw": "thumb_yaw",
        }
        for key, value in kv.items():
            if key in scalar_keys:
                kwargs[scalar_keys[key]] = float(value)
            elif key == "thumb.proximal_ellipsoid":
                kwargs["thumb_proximal_ellipsoid"] = _floats(key, value, 3)
            else:
                name, _, attr = key.partition(".")
                if name not in FINGER_NAMES or attr not in (
                        "base_offset", "segment_lengths", "segment_radii"):
                    raise ValueError(f"unknown dimensions key {key!r}")
                n = 4 if attr == "segment_radii" else 3
                fingers[name] = _replace(fingers[name], **{attr: _floats(key, value, n)})
        return cls(fingers=fingers, **kwargs)

    @classmethod
    def load(cls, path) -> "HandDimensions":
        return cls.from_text(Path(path).read_text())

    def save(self, path):
        Path(path).write_text(self.to_text())


def _replace(obj, **changes):
    from dataclasses import replace
    return replace(obj, **changes)


def _fmt(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def _floats(key, value, n):
    parts = [p for p in value.replace(",", " ").split()]
    if len(parts) != n:
        raise ValueError(f"{key}: expected {n} numbers, got {len(parts)}")
    return tuple(float(p) for p in parts)


def rot_x(deg):
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg):
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg):
    a = np.radians(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def wrist_rotation(theta_x, theta_y, theta_z) -> np.ndarray:
    return rot_x(theta_x) @ rot_y(theta_y) @ rot_z(theta_z)


_DOWN = np.array([0.0, -1.0, 0.0])  # finger direction in its own frame


def _finger_base_frame(name: str, d: HandDimensions) -> np.ndarray:
    if name != "thumb":
        return np.eye(3)
    return rot_z(d.thumb_yaw) @ rot_y(90.0)


def forward_kinematics(h: PoseLike, d: HandDimensions | None = None) -> HandGeometry:
    """Place the 38 hand primitives in camera coordinates (mm).

    Order: palm cylinder, wrist-end cap, finger-end cap, then for each finger
    (thumb first) joint sphere, segment, joint sphere, segment, joint sphere,
    segment, tip sphere.  The thumb's proximal segment is an ellipsoid.
    """
    d = d or DEFAULT_DIMENSIONS
    v = as_vector(h)
    t = v[:3] * 1000.0
    R = wrist_rotation(*v[3:6])

    # everything is built relative to the wrist; the translation is added last
    x_ax, y_ax, z_ax = R[:, 0], R[:, 1], R[:, 2]
    L = d.palm_length
    prims: list = [
        EllipticCylinder(
            base_center=t + 0.0,
            axis=-y_ax,
            half_axes=np.array([d.palm_half_width, d.palm_half_thickness]),
            length=L,
            major_dir=x_ax,
        ),
        Ellipsoid(t + 0.0, np.array([d.palm_half_width, d.palm_cap_length,
                                     d.palm_half_thickness]), R),
        Ellipsoid((-L * y_ax) + t, np.array([d.palm_half_width, d.palm_cap_length,
                                              d.palm_half_thickness]), R),
    ]

    for i, name in enumerate(FINGER_NAMES):
        fd = d.fingers[name]
        mp_x, mp_z, pip, dip = v[6 + 4 * i: 10 + 4 * i]
        frame = R @ _finger_base_frame(name, d) @ rot_z(mp_z) @ rot_x(mp_x)
        joints = [R @ np.asarray(fd.base_offset, dtype=float)]
        frames = [frame]
        for k, bend in enumerate((pip, dip)):
            joints.append(joints[-1] + fd.segment_lengths[k] * (frame @ _DOWN))
            frame = frame @ rot_x(bend)
            frames.append(frame)
        joints.append(joints[-1] + fd.segment_lengths[2] * (frame @ _DOWN))

        r = fd.segment_radii
        for k in range(3):
            prims.append(Sphere(joints[k] + t, float(r[k])))
            if name == "thumb" and k == 0:
                prims.append(Ellipsoid(0.5 * (joints[0] + joints[1]) + t,
                                       np.asarray(d.thumb_proximal_ellipsoid, float),
                                       frames[0]))
            else:
                prims.append(TruncatedCone(joints[k] + t, joints[k + 1] + t,
                                           float(r[k]), float(r[k + 1])))
        prims.append(Sphere(joints[3] + t, float(r[3])))
    return HandGeometry(tuple(prims))


DEFAULT_DIMENSIONS = HandDimensions()


def load_pose(path) -> HandPose:
    """Read a pose file: 26 whitespace-separated numbers, ``#`` comments."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens += line.split()
    if len(tokens) != N_PARAMS:
        raise ValueError(f"{path}: expected 26 numbers, found {len(tokens)}")
    try:
        values = [float(tok) for tok in tokens]
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return HandPose.from_array(values)


def format_pose(h: PoseLike, comment: str | None = None) -> str:
    v = as_vector(h)
    lines = [f"# {comment}"] if comment else []
    lines.append("# x_c y_c z_c [m]  theta_x theta_y theta_z [deg]")
    lines.append(" ".join(repr(float(x)) for x in v[:6]))
    for i, name in enumerate(FINGER_NAMES):
        lines.append(f"# {name}: mp_x mp_z pip dip [deg]")
        lines.append(" ".join(repr(float(x)) for x in v[6 + 4 * i: 10 + 4 * i]))
    return "\n".join(lines) + "\n"


def save_pose(path, h: PoseLike, comment: str | None = None):
    Path(path).write_text(format_pose(h, comment))
