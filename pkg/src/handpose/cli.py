"""Command-line interface: ``handpose {synth,recognize,eval,bench,track}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
import time
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .cost import collision_penalty, render_pose
from .experiments import REFERENCE_WRIST_BOX, recognize, reference_poses
from .hand_model import (N_PARAMS, PARAM_NAMES, as_vector, clamp_pose, default_bounds,
                         format_pose, load_pose, random_pose)
from .observation import (NoiseSpec, ObservationError, apply_noise, load_observation,
                          observation_paths, synthesize_observation, write_observation,
                          write_pgm)
from .parallel_eval import BatchEvaluator, default_workers

log = logging.getLogger("handpose")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
CONFIG_NAME = "config.txt"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _resolution(text):
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m or int(m.group(1)) < 1 or int(m.group(2)) < 1:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _int_list(text):
    try:
        values = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("worker counts must be >= 1")
    return values


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS defaults let the flags appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", default=argparse.SUPPRESS, help="key-value run config file")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                   help="evaluation threads (default: available CPUs)")
    g.add_argument("--resolution", type=_resolution, default=argparse.SUPPRESS,
                   metavar="WxH")
    g.add_argument("--clamp-at-dm", action="store_true", default=argparse.SUPPRESS,
                   help="clamp depth differences at d_m instead of d_M")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = _Parser(prog="handpose", parents=[common],
                     description="26-DoF hand pose recovery from depth and silhouette.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="render a pose file to observation files")
    p.add_argument("pose", help="pose file (26 numbers)")
    p.add_argument("-o", "--out", help="output directory (default: config output)")
    p.add_argument("--name", default="obs", help="observation file stem (default: obs)")
    p.add_argument("--depth-sigma", type=float, help="Gaussian depth noise, mm")
    p.add_argument("--dropout", type=float, help="probability a depth pixel is lost")
    p.add_argument("--mask-flip", type=float, help="probability a mask pixel flips")

    p = sub.add_parser("recognize", parents=[common], help="recover the pose of an observation")
    p.add_argument("observation", help="observation stem DIR/NAME (or any of its files)")
    p.add_argument("-o", "--out", help="output directory (default: config output)")
    p.add_argument("--warm-start", metavar="POSE", help="initialize the swarm around this pose")

    p = sub.add_parser("eval", parents=[common], help="print the cost breakdown of a pose")
    p.add_argument("pose")
    p.add_argument("observation")

    p = sub.add_parser("bench", parents=[common], help="time rendering and objective phases")
    p.add_argument("--worker-counts", type=_int_list, default=[1, 2, 4], metavar="N,N,...")
    p.add_argument("--batch", type=int, default=64, help="poses per generation")
    p.add_argument("--generations", type=int, default=30)

    p = sub.add_parser("track", parents=[common], help="recognize a numbered frame sequence")
    p.add_argument("directory", help="directory of NAME<k>.{mask,depth}.pgm + NAME<k>.cam")
    p.add_argument("-o", "--out", help="output directory (default: config output)")
    p.add_argument("--warm-start", metavar="POSE", help="initialize the first frame around this pose")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if hasattr(args, "seed"):
        cfg.seed = args.seed
    if hasattr(args, "workers"):
        if args.workers < 0:
            raise UsageError("--workers must be >= 0")
        cfg.workers = args.workers
    if hasattr(args, "resolution"):
        cfg.width, cfg.height = args.resolution
        cfg.camera = None
    if getattr(args, "clamp_at_dm", False):
        cfg.cost = replace(cfg.cost, clamp_at_dm=True)
    return cfg


def _workers(cfg: RunConfig) -> int:
    return cfg.workers or default_workers()


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(getattr(args, "out", None) or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_config(out: Path, cfg: RunConfig):
    cfg.save(out / CONFIG_NAME)


def observation_stem(path) -> tuple:
    """Split ``DIR/NAME`` (or ``DIR/NAME.depth.pgm`` etc.) into ``(DIR, NAME)``."""
    path = Path(path)
    name = path.name
    for suffix in (".mask.pgm", ".depth.pgm", ".cam"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
            break
    return path.parent, name


def _load_obs(spec):
    directory, name = observation_stem(spec)
    return load_observation(*observation_paths(directory, name))


def _trace_csv(trace) -> str:
    return "generation,best_cost\n" + "".join(f"{g},{c!r}\n" for g, c in enumerate(trace, 1))


def _difference_image(o_d, r_d, scale) -> np.ndarray:
    """8-bit |o_d - r_d| clamped at ``scale``; 255 where only one depth is defined."""
    both = (o_d != 0) & (r_d != 0)
    diff = np.where(both, np.rint(np.minimum(np.abs(o_d - r_d), scale) * (255.0 / scale)), 0)
    diff[(o_d != 0) != (r_d != 0)] = 255
    return diff.astype(np.uint8)


def _warm_radius(cfg: RunConfig) -> np.ndarray:
    r = np.full(N_PARAMS, cfg.track_radius_angle)
    r[:3] = cfg.track_radius_position
    return r


def _recognize_one(obs, cfg: RunConfig, center=None):
    radius = _warm_radius(cfg) if center is not None else None
    return recognize(obs, cfg.dims, cfg.cost, cfg.pso_params, _workers(cfg),
                     default_bounds(), center=center, radius=radius)


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    h = load_pose(args.pose)
    bounds = default_bounds()
    if not bounds.contains(h.to_array()):
        bad = [PARAM_NAMES[i] for i in np.flatnonzero(
            (h.to_array() < bounds.lower) | (h.to_array() > bounds.upper))]
        log.warning("pose outside bounds (%s); clamping", ", ".join(bad))
        h = clamp_pose(h, bounds)
    changes = {k: v for k, v in (("depth_sigma", args.depth_sigma),
                                 ("dropout_prob", args.dropout),
                                 ("mask_flip_prob", args.mask_flip)) if v is not None}
    try:
        cfg.noise = replace(cfg.noise, **changes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    obs = synthesize_observation(h, cfg.dims, cfg.cam)
    if cfg.noise != NoiseSpec():
        obs = apply_noise(obs, cfg.noise, np.random.default_rng(cfg.seed))
    write_observation(obs, out, args.name)
    _save_config(out, cfg)
    print(f"wrote {out / args.name}.{{mask,depth}}.pgm and {out / args.name}.cam "
          f"({int(obs.mask.sum())} mask pixels)")
    return EXIT_OK


def cmd_recognize(args, cfg: RunConfig) -> int:
    obs = _load_obs(args.observation)
    if hasattr(args, "resolution") and obs.cam.shape != cfg.cam.shape:
        log.warning("--resolution ignored: observation is %dx%d", obs.cam.width, obs.cam.height)
    cfg.width, cfg.height, cfg.camera = obs.cam.width, obs.cam.height, obs.cam
    center = as_vector(load_pose(args.warm_start)) if args.warm_start else None
    out = _out_dir(args, cfg)
    t0 = time.perf_counter()
    res = _recognize_one(obs, cfg, center)
    elapsed = time.perf_counter() - t0

    (out / "pose.txt").write_text(format_pose(res.best_position, f"best cost {res.best_cost!r}"))
    (out / "trace.csv").write_text(_trace_csv(res.trace))
    r_d = render_pose(res.best_position, obs.cam, cfg.dims)
    write_pgm(out / "observed.pgm", obs.depth, 65535)
    write_pgm(out / "recognized.pgm", r_d, 65535)
    write_pgm(out / "side_by_side.pgm", np.hstack([obs.depth, r_d]), 65535)
    write_pgm(out / "difference.pgm", _difference_image(obs.depth, r_d, cfg.cost.d_M), 255)
    _save_config(out, cfg)
    print(f"best cost {res.best_cost:.6g} after {len(res.trace)} generations "
          f"({elapsed:.2f} s); results in {out}")
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    obs = _load_obs(args.observation)
    h = load_pose(args.pose)
    with BatchEvaluator(obs, cfg.dims, cfg.cost, 1) as ev:
        b = ev.evaluate(h.to_array()[None])[0]
    print(f"depth_term: {b.depth_term!r}")
    print(f"area_term: {b.area_term!r}")
    print(f"collision_kc: {collision_penalty(h, cfg.cost.rest_separation)!r}")
    print(f"penalty_term: {b.penalty_term!r}")
    print(f"total: {b.total!r}")
    return EXIT_OK


def cmd_bench(args, cfg: RunConfig) -> int:
    if args.batch < 1 or args.generations < 1:
        raise UsageError("--batch and --generations must be >= 1")
    cam = cfg.cam
    rng = np.random.default_rng(cfg.seed)
    bounds = default_bounds()
    ref = reference_poses(1, cam=cam, dims=cfg.dims)[0]
    t0 = time.perf_counter()
    obs = synthesize_observation(ref, cfg.dims, cam)
    obs_ms = (time.perf_counter() - t0) * 1e3
    poses = []
    for _ in range(args.batch):
        v = random_pose(rng, bounds).to_array()
        v[:3] = [rng.uniform(lo, hi) for lo, hi in REFERENCE_WRIST_BOX]
        poses.append(v)
    poses = np.array(poses)

    print(f"resolution {cam.width}x{cam.height}, batch {args.batch}, "
          f"{args.generations} generations per frame, host cpus {default_workers()}")
    print(f"observation construction: {obs_ms:.2f} ms")
    totals, costs = {}, {}
    for w in args.worker_counts:
        with BatchEvaluator(obs, cfg.dims, cfg.cost, w) as ev:
            ev(poses[:1])  # warm-up (JIT, thread start)
            render_s = score_s = 0.0
            for _ in range(args.generations):
                t0 = time.perf_counter()
                depths = ev.render_batch(poses)
                t1 = time.perf_counter()
                breakdown = ev.score_rendered(poses, depths)
                render_s += t1 - t0
                score_s += time.perf_counter() - t1
        costs[w] = np.array([b.total for b in breakdown])
        totals[w] = (render_s + score_s) * 1e3
        print(f"workers={w}: render+observation {render_s * 1e3:.1f} ms/frame, "
              f"objective {score_s * 1e3:.1f} ms/frame, total {totals[w]:.1f} ms/frame")
    first = costs[args.worker_counts[0]]
    same = all(np.array_equal(first, c) for c in costs.values())
    print(f"costs bitwise identical across worker counts: {'yes' if same else 'NO'}")
    if 1 in totals and 4 in totals:
        note = "" if default_workers() >= 4 else " (host has fewer than 4 cpus; not meaningful)"
        print(f"speedup W=4 vs W=1: {totals[1] / totals[4]:.2f}x{note}")
    return EXIT_OK if same else EXIT_INTERNAL


_FRAME = re.compile(r"^(.*?)(\d+)\.depth\.pgm$")


def find_frames(directory) -> list:
    """``[(number, name), ...]`` of a numbered observation sequence, in order.

    Raises :class:`ObservationError` for an empty directory, mixed prefixes
    or a gap in the numbering.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ObservationError(f"{directory}: not a directory")
    found = {}
    for p in directory.iterdir():
        m = _FRAME.match(p.name)
        if m:
            found.setdefault(m.group(1), []).append((int(m.group(2)), p.name[: -len(".depth.pgm")]))
    if not found:
        raise ObservationError(f"{directory}: no numbered observation frames (NAME<k>.depth.pgm)")
    if len(found) > 1:
        raise ObservationError(f"{directory}: several frame prefixes: {sorted(found)}")
    (prefix, frames), = found.items()
    frames.sort()
    numbers = [n for n, _ in frames]
    if len(set(numbers)) != len(numbers):
        raise ObservationError(f"{directory}: duplicate frame numbers")
    missing = sorted(set(range(numbers[0], numbers[-1] + 1)) - set(numbers))
    if missing:
        raise ObservationError(f"{directory}: missing frame {missing[0]} "
                               f"(sequence {prefix}{numbers[0]} .. {prefix}{numbers[-1]})")
    return frames


def cmd_track(args, cfg: RunConfig) -> int:
    frames = find_frames(args.directory)
    out = _out_dir(args, cfg)
    rows = ["frame,name,best_cost,generations," + ",".join(PARAM_NAMES)]
    center = as_vector(load_pose(args.warm_start)) if args.warm_start else None
    for number, name in frames:
        obs = load_observation(*observation_paths(args.directory, name))
        cfg.width, cfg.height, cfg.camera = obs.cam.width, obs.cam.height, obs.cam
        res = _recognize_one(obs, cfg, center)
        (out / f"{name}.pose.txt").write_text(
            format_pose(res.best_position, f"best cost {res.best_cost!r}"))
        rows.append(f"{number},{name},{res.best_cost!r},{len(res.trace)},"
                    + ",".join(repr(float(x)) for x in res.best_position))
        print(f"frame {number}: best cost {res.best_cost:.6g}")
        center = res.best_position
    (out / "track.csv").write_text("\n".join(rows) + "\n")
    _save_config(out, cfg)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "recognize": cmd_recognize, "eval": cmd_eval,
            "bench": cmd_bench, "track": cmd_track}


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.INFO)
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ObservationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        if os.environ.get("HANDPOSE_DEBUG"):
            traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
