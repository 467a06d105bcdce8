"""Key-value text configuration (``name = value`` per line, ``#`` comments)."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .camera_render import CameraIntrinsics
from .cost import CostParams
from .hand_model import DEFAULT_DIMENSIONS, HandDimensions
from .observation import NoiseSpec
from .pso import PsoParams


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"line {lineno}: expected 'name = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def _parse_bool(value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _coerce(template, value: str):
    if isinstance(template, bool):
        return _parse_bool(value)
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    return value


@dataclass
class RunConfig:
    """Everything a CLI run depends on.  Serializes to the same key-value format."""

    width: int = 160
    height: int = 120
    camera: CameraIntrinsics | None = None  # None: Kinect-like default at width x height
    dimensions_path: str = ""
    cost: CostParams = field(default_factory=CostParams)
    pso: PsoParams = field(default_factory=PsoParams)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    workers: int = 0  # 0: one per available CPU
    output: str = "out"
    seed: int = 0
    track_radius_position: float = 0.05  # m
    track_radius_angle: float = 15.0  # deg

    @property
    def cam(self) -> CameraIntrinsics:
        return self.camera or CameraIntrinsics.default(self.width, self.height)

    @property
    def dims(self) -> HandDimensions:
        if self.dimensions_path:
            return HandDimensions.load(self.dimensions_path)
        return DEFAULT_DIMENSIONS

    def to_text(self) -> str:
        cam = self.cam
        lines = [
            f"width = {cam.width}",
            f"height = {cam.height}",
        ]
        lines += [f"camera.{f.name} = {getattr(cam, f.name)!r}" for f in fields(cam)
                  if f.name not in ("width", "height")]
        lines.append(f"dimensions = {self.dimensions_path}")
        for prefix, obj in (("cost", self.cost), ("pso", self.pso), ("noise", self.noise)):
            for f in fields(obj):
                if prefix == "pso" and f.name == "seed":
                    continue  # the run-level seed drives the swarm
                value = getattr(obj, f.name)
                if f.name == "mutation_dims":
                    value = "" if value is None else ", ".join(str(i) for i in value)
                lines.append(f"{prefix}.{f.name} = {value!r}" if isinstance(value, float)
                             else f"{prefix}.{f.name} = {value}")
        lines += [
            f"workers = {self.workers}",
            f"output = {self.output}",
            f"seed = {self.seed}",
            f"track_radius_position = {self.track_radius_position!r}",
            f"track_radius_angle = {self.track_radius_angle!r}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source="<config>") -> "RunConfig":
        kv = parse_kv(text)
        cfg = cls()
        cam_kv = {}
        sections = {"cost": {}, "pso": {}, "noise": {}}
        for key, value in kv.items():
            try:
                prefix, dot, name = key.partition(".")
                if dot and prefix == "camera":
                    cam_kv[name] = value
                elif dot and prefix in sections:
                    sections[prefix][name] = value
                elif key == "dimensions":
                    cfg.dimensions_path = value
                elif key in ("width", "height", "workers", "seed"):
                    setattr(cfg, key, int(value))
                elif key in ("track_radius_position", "track_radius_angle"):
                    setattr(cfg, key, float(value))
                elif key == "output":
                    cfg.output = value
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ValueError(f"{source}: {exc}") from None
        for prefix, items in sections.items():
            obj = getattr(cfg, prefix)
            known = {f.name: getattr(obj, f.name) for f in fields(obj)}
            changes = {}
            for name, value in items.items():
                if name not in known or (prefix == "pso" and name == "seed"):
                    raise ValueError(f"{source}: unknown key {prefix}.{name!r}")
                if name == "mutation_dims":
                    changes[name] = (None if not value.strip() else
                                     tuple(int(i) for i in value.replace(",", " ").split()))
                else:
                    changes[name] = _coerce(known[name], value)
            setattr(cfg, prefix, replace(obj, **changes))
        if cam_kv:
            base = CameraIntrinsics.default(cfg.width, cfg.height)
            cam_text = "".join(f"{f.name} = {getattr(base, f.name)!r}\n" for f in fields(base)
                               if f.name not in cam_kv)
            cam_text += "".join(f"{k} = {v}\n" for k, v in cam_kv.items())
            cfg.camera = CameraIntrinsics.from_text(cam_text, source)
        return cfg

    @property
    def pso_params(self) -> PsoParams:
        return replace(self.pso, seed=self.seed)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text(), source=str(path))

    def save(self, path):
        Path(path).write_text(self.to_text())
