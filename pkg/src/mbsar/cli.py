"""Command-line interface for the simulation and focusing pipeline.

Subcommands mirror the pipeline stages (simulate, fuse, focus, compose,
pipeline) plus bench and check. Scenarios are TOML files; a bare name
resolves against the scenarios bundled with the package. Exit codes:
0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .config import ScenarioConfig, load_scenario, parse_scenario
from .errors import ConfigError, NumericalError
from .kernels import has_numba, resolve_backend, resolve_workers
from .pipeline import (
    bench,
    compose_stage,
    focus_stage,
    fuse_stage,
    run_pipeline,
    simulate_stage,
)
from .scene import generate_trajectory
from .signal import aperture_sampling_check


def _bundled_names() -> list:
    root = resources.files("mbsar.scenarios")
    return sorted(p.name[: -len(".toml")] for p in root.iterdir()
                  if p.name.endswith(".toml"))


def _load(scenario: str, seed: int | None) -> ScenarioConfig:
    path = Path(scenario)
    if path.exists():
        cfg = load_scenario(path)
    else:
        root = resources.files("mbsar.scenarios")
        candidate = root / f"{scenario}.toml"
        if not candidate.is_file():
            raise ConfigError(
                f"scenario {scenario!r} is neither a file nor a bundled "
                f"scenario (bundled: {', '.join(_bundled_names())})"
            )
        cfg = parse_scenario(candidate.read_text(), source=str(candidate))
    if seed is not None:
        if seed < 0:
            raise ConfigError(f"seed must be >= 0, got {seed}")
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg


def _add_common(sub: argparse.ArgumentParser, outdir: bool = True) -> None:
    sub.add_argument("scenario", help="scenario TOML path or bundled name")
    if outdir:
        sub.add_argument("-o", "--outdir", required=True,
                         help="artifact directory")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbsar",
        description="Multi-beam FMCW SAR simulation and focusing toolkit.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="synthesize echoes and sensor data")
    _add_common(p)
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)

    p = subs.add_parser("fuse", help="estimate the trajectory from sensors")
    _add_common(p)

    p = subs.add_parser("focus", help="back-project beam images")
    _add_common(p)
    p.add_argument("--trajectory-source", choices=("estimated", "true"),
                   default="estimated")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)

    p = subs.add_parser("compose", help="render PGM and RGB composite images")
    _add_common(p)

    p = subs.add_parser("pipeline", help="run all stages end to end")
    _add_common(p)
    p.add_argument("--trajectory-source", choices=("estimated", "true"),
                   default="estimated")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)

    p = subs.add_parser("bench", help="time the focusing kernel")
    _add_common(p, outdir=False)
    p.add_argument("--workers", default="1,2,4",
                   help="comma-separated worker counts (default 1,2,4)")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--json", dest="json_path", default=None,
                   help="also write the full result as JSON")

    p = subs.add_parser("check", help="validate a scenario and print a summary")
    _add_common(p, outdir=False)
    return parser


def _cmd_stage(args, stage) -> int:
    cfg = _load(args.scenario, args.seed)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts, notes = stage(cfg, outdir)
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    for name in artifacts:
        print(f"wrote {outdir / name}")
    return 0


def _cmd_pipeline(args) -> int:
    cfg = _load(args.scenario, args.seed)
    manifest = run_pipeline(
        cfg, args.outdir, trajectory_source=args.trajectory_source,
        workers=args.workers, backend=args.backend,
    )
    for name, stage in manifest["stages"].items():
        files = ", ".join(stage["artifacts"])
        print(f"{name}: {stage['wall_time_s']:.2f} s ({files})")
        for note in stage["warnings"]:
            print(f"warning [{name}]: {note}", file=sys.stderr)
    print(f"manifest: {Path(args.outdir) / 'run_manifest.json'}")
    return 0


def _cmd_bench(args) -> int:
    cfg = _load(args.scenario, args.seed)
    try:
        worker_list = [int(w) for w in args.workers.split(",") if w]
    except ValueError as exc:
        raise ConfigError(f"bad worker list {args.workers!r}") from exc
    result = bench(cfg, workers=worker_list, repetitions=args.repetitions)
    print(
        f"{result['scenario']}: {result['pixels']} px x "
        f"{result['pulses']} pulses x {result['beams']} beams"
    )
    print(f"{'backend':>8} {'workers':>7} {'rep':>3} {'seconds':>9} "
          f"{'Mpx.pulse/s':>12}")
    for row in result["rows"]:
        print(
            f"{row['backend']:>8} {row['workers']:>7} {row['repetition']:>3} "
            f"{row['seconds']:>9.3f} {row['pixel_pulses_per_s'] / 1e6:>12.2f}"
        )
    for backend, digest in result["checksums"].items():
        print(f"checksum[{backend}] = {digest[:16]}")
    if args.json_path:
        import json

        Path(args.json_path).write_text(
            json.dumps(result, indent=2, sort_keys=True)
        )
        print(f"wrote {args.json_path}")
    return 0


def _cmd_check(args) -> int:
    cfg = _load(args.scenario, args.seed)
    traj = generate_trajectory(cfg.segments, cfg.params.prf, cfg.start_pose)
    n_bins = int(
        math.floor(cfg.params.max_range
                   / cfg.params.range_bin_spacing(cfg.zero_pad_factor)) + 1
    )
    rc_bytes = n_bins * len(traj) * 8
    print(f"scenario:  {cfg.name} (seed {cfg.seed})")
    print(f"duration:  {cfg.duration:.3f} s, {len(traj)} pulses at "
          f"{cfg.params.prf:.0f} Hz")
    print(f"scene:     {len(cfg.scene.scatterers)} scatterers")
    print(f"grid:      {cfg.grid.nx} x {cfg.grid.ny} px at "
          f"({cfg.grid.dx:.3f}, {cfg.grid.dy:.3f}) m")
    print(f"rc matrix: {n_bins} bins x {len(traj)} pulses "
          f"(~{rc_bytes / 1e6:.0f} MB)")
    print(f"backend:   {resolve_backend(None)} "
          f"(numba available: {has_numba()}), "
          f"workers: {resolve_workers(None)}")
    ok = True
    for beam in cfg.beams:
        check = aperture_sampling_check(traj, cfg.params, beam)
        status = "ok" if check.ok else "WARN"
        print(f"beam {math.degrees(beam.alpha_p):+6.1f} deg: {status}: "
              f"{check.message}")
        ok = ok and check.ok
    if not ok:
        print("note: sampling warnings flag possible cross-range ambiguity; "
              "reduce speed or beam angle if artifacts appear")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_stage(
                args,
                lambda cfg, out: simulate_stage(cfg, out, backend=args.backend),
            )
        if args.command == "fuse":
            return _cmd_stage(args, fuse_stage)
        if args.command == "focus":
            return _cmd_stage(
                args,
                lambda cfg, out: focus_stage(
                    cfg, out, trajectory_source=args.trajectory_source,
                    workers=args.workers, backend=args.backend,
                ),
            )
        if args.command == "compose":
            return _cmd_stage(args, compose_stage)
        if args.command == "pipeline":
            return _cmd_pipeline(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "check":
            return _cmd_check(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
