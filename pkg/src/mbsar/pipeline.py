"""End-to-end scenario pipeline: simulate, fuse, focus, compose, bench.

Each stage reads its inputs from and writes its artifacts to one output
directory, so stages can be re-run independently. Artifacts are written via
a ``.partial`` temporary and renamed into place, and every byte written is
a pure function of the scenario file, so re-running a stage with the same
configuration reproduces identical files. A run manifest records
configuration and artifact hashes, per-stage wall time, and warnings.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, load_scenario
from .containers import read_image, read_rc, write_image, write_rc
from .errors import ConfigError
from .focus import multi_beam_focus
from .imaging import (
    magnitude_db,
    rgb_compose,
    save_composite_png,
    save_composite_ppm,
    save_magnitude_pgm,
)
from .kernels import has_numba, resolve_backend, resolve_workers
from .navigation import (
    NavState,
    read_measurements_csv,
    simulate_sensors,
    ukf_fuse,
    write_measurements_csv,
)
from .scene import (
    generate_trajectory,
    read_trajectory_csv,
    slow_time_grid,
    write_trajectory_csv,
)
from .signal import aperture_sampling_check, range_compress, synthesize_dechirped

RC_FILE = "rc.sarc"
TRUE_TRAJECTORY_FILE = "trajectory_true.csv"
MEASUREMENTS_FILE = "measurements.csv"
ESTIMATED_TRAJECTORY_FILE = "trajectory_est.csv"
MANIFEST_FILE = "run_manifest.json"
IMAGE_SIDECAR_FILE = "images.json"
COMPOSITE_PPM_FILE = "composite.ppm"
COMPOSITE_PNG_FILE = "composite.png"


def _as_config(config) -> ScenarioConfig:
    if isinstance(config, ScenarioConfig):
        return config
    return load_scenario(config)


def _config_digest(config) -> str:
    if isinstance(config, (str, Path)):
        data = Path(config).read_bytes()
    else:
        data = repr(config).encode()
    return hashlib.sha256(data).hexdigest()


def _file_info(path: Path) -> dict:
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return {"sha256": digest, "bytes": path.stat().st_size}


def _write_artifact(path: Path, writer) -> dict:
    """Write through a .partial temporary, then rename into place."""
    tmp = path.with_name(path.name + ".partial")
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return _file_info(path)


def _beam_tag(beam) -> str:
    return f"beam_{math.degrees(beam.alpha_p):+06.1f}deg"


def _collect_warnings(caught) -> list:
    return [str(w.message) for w in caught]


def simulate_stage(cfg: ScenarioConfig, outdir: Path, backend: str | None = None):
    """Synthesize echoes and sensor data; write rc.sarc and the CSVs."""
    artifacts: dict = {}
    notes: list[str] = []
    traj = generate_trajectory(cfg.segments, cfg.params.prf, cfg.start_pose)
    for beam in cfg.beams:
        check = aperture_sampling_check(traj, cfg.params, beam)
        if not check.ok:
            notes.append(check.message)
    raw = synthesize_dechirped(
        cfg.scene, traj, cfg.mount, cfg.params,
        noise_std=cfg.noise_std, seed=cfg.seed, backend=backend,
    )
    rc = range_compress(
        raw, cfg.params, window=cfg.window,
        zero_pad_factor=cfg.zero_pad_factor, slow_time_axis=traj.tau,
    )
    artifacts[RC_FILE] = _write_artifact(
        outdir / RC_FILE, lambda p: write_rc(p, rc)
    )
    artifacts[TRUE_TRAJECTORY_FILE] = _write_artifact(
        outdir / TRUE_TRAJECTORY_FILE, lambda p: write_trajectory_csv(p, traj)
    )
    measurements = simulate_sensors(
        traj, cfg.rates, cfg.sensor_noise, seed=cfg.seed,
        wheelbase=cfg.ukf.wheelbase,
    )
    artifacts[MEASUREMENTS_FILE] = _write_artifact(
        outdir / MEASUREMENTS_FILE,
        lambda p: write_measurements_csv(p, measurements),
    )
    return artifacts, notes


def fuse_stage(cfg: ScenarioConfig, outdir: Path):
    """Estimate the trajectory from measurements.csv."""
    measurements = read_measurements_csv(outdir / MEASUREMENTS_FILE)
    initial = NavState(
        x=cfg.start_pose.position[0], y=cfg.start_pose.position[1],
        v=cfg.start_pose.speed, a=0.0,
        psi=cfg.start_pose.heading, omega=0.0,
    )
    slow_times = slow_time_grid(cfg.duration, cfg.params.prf)
    est, cov = ukf_fuse(measurements, cfg.ukf, initial, slow_times)
    info = _write_artifact(
        outdir / ESTIMATED_TRAJECTORY_FILE,
        lambda p: write_trajectory_csv(p, est, covariance=cov),
    )
    return {ESTIMATED_TRAJECTORY_FILE: info}, []


def focus_stage(
    cfg: ScenarioConfig,
    outdir: Path,
    trajectory_source: str = "estimated",
    workers: int | None = None,
    backend: str | None = None,
):
    """Back-project rc.sarc along the chosen trajectory into beam images."""
    if trajectory_source not in ("estimated", "true"):
        raise ConfigError(
            f"trajectory_source must be 'estimated' or 'true', "
            f"got {trajectory_source!r}"
        )
    source_file = (
        ESTIMATED_TRAJECTORY_FILE
        if trajectory_source == "estimated"
        else TRUE_TRAJECTORY_FILE
    )
    rc = read_rc(outdir / RC_FILE)
    traj, _cov = read_trajectory_csv(outdir / source_file)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        images = multi_beam_focus(
            rc, traj, cfg.mount, cfg.grid, list(cfg.beams),
            interp=cfg.interpolation, cutoff=cfg.cutoff, tile=cfg.tile,
            workers=workers, backend=backend,
        )
    artifacts = {}
    for img in images:
        name = _beam_tag(img.beam) + ".sari"
        artifacts[name] = _write_artifact(
            outdir / name, lambda p, im=img: write_image(p, im)
        )
    return artifacts, _collect_warnings(caught)


def compose_stage(cfg: ScenarioConfig, outdir: Path):
    """Render beam images to PGM and, for three beams, an RGB composite."""
    artifacts: dict = {}
    notes: list[str] = []
    images = [read_image(outdir / (_beam_tag(b) + ".sari")) for b in cfg.beams]
    sidecar: dict = {"floor_db": cfg.floor_db, "beams": []}
    for img in images:
        name = _beam_tag(img.beam) + ".pgm"
        artifacts[name] = _write_artifact(
            outdir / name,
            lambda p, im=img: save_magnitude_pgm(p, im, floor_db=cfg.floor_db),
        )
        db = magnitude_db(img, floor_db=cfg.floor_db)
        sidecar["beams"].append(
            {
                "file": name,
                "alpha_p_deg": math.degrees(img.beam.alpha_p),
                "delta_alpha_deg": math.degrees(img.beam.delta_alpha),
                "peak_abs": float(np.abs(img.data).max()),
                "mean_db": float(db.mean()),
            }
        )
    if len(images) == 3:
        comp = rgb_compose(images, dynamic_range_db=cfg.dynamic_range_db)
        artifacts[COMPOSITE_PPM_FILE] = _write_artifact(
            outdir / COMPOSITE_PPM_FILE, lambda p: save_composite_ppm(p, comp)
        )
        artifacts[COMPOSITE_PNG_FILE] = _write_artifact(
            outdir / COMPOSITE_PNG_FILE, lambda p: save_composite_png(p, comp)
        )
        sidecar["composite"] = {
            "files": [COMPOSITE_PPM_FILE, COMPOSITE_PNG_FILE],
            "dynamic_range_db": cfg.dynamic_range_db,
            "channel_order_deg": [
                math.degrees(b.alpha_p) for b in cfg.beams
            ],
        }
    else:
        notes.append(
            f"composite skipped: needs exactly 3 beams, got {len(images)}"
        )
    artifacts[IMAGE_SIDECAR_FILE] = _write_artifact(
        outdir / IMAGE_SIDECAR_FILE,
        lambda p: p.write_text(json.dumps(sidecar, indent=2, sort_keys=True)),
    )
    return artifacts, notes


def run_pipeline(
    config,
    outdir,
    trajectory_source: str = "estimated",
    workers: int | None = None,
    backend: str | None = None,
) -> dict:
    """Run simulate, fuse, focus, and compose; write run_manifest.json.

    ``config`` is a ScenarioConfig or a path to a scenario TOML. Returns the
    manifest dictionary. All artifacts, including the manifest minus its
    wall-time and timestamp fields, are reproducible byte-for-byte for a
    fixed scenario and seed.
    """
    cfg = _as_config(config)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for stale in out.glob("*.partial"):
        stale.unlink()

    stages = [
        ("simulate", lambda: simulate_stage(cfg, out, backend=backend)),
        ("fuse", lambda: fuse_stage(cfg, out)),
        (
            "focus",
            lambda: focus_stage(
                cfg, out, trajectory_source=trajectory_source,
                workers=workers, backend=backend,
            ),
        ),
        ("compose", lambda: compose_stage(cfg, out)),
    ]
    manifest: dict = {
        "scenario": cfg.name,
        "seed": cfg.seed,
        "config_sha256": _config_digest(config),
        "trajectory_source": trajectory_source,
        "backend": resolve_backend(backend),
        "workers": resolve_workers(workers),
        "versions": _versions(),
        "stages": {},
    }
    for name, fn in stages:
        start = time.perf_counter()
        artifacts, notes = fn()
        manifest["stages"][name] = {
            "wall_time_s": time.perf_counter() - start,
            "artifacts": artifacts,
            "warnings": notes,
        }
    _write_artifact(
        out / MANIFEST_FILE,
        lambda p: p.write_text(json.dumps(manifest, indent=2, sort_keys=True)),
    )
    return manifest


def _versions() -> dict:
    import numpy
    import scipy

    versions = {
        "python": sys.version.split()[0],
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "mbsar": __version__,
    }
    if has_numba():
        import numba

        versions["numba"] = numba.__version__
    return versions


def bench(
    config,
    workers=(1, 2, 4),
    repetitions: int = 3,
    backends=None,
) -> dict:
    """Time the focusing kernel and verify bit-identical output.

    Simulates the scenario once in memory, then runs `multi_beam_focus`
    for each worker count and repetition. The first backend gets the full
    workers x repetitions grid; any further backend runs once at the top
    worker count for a numerical cross-check. Within a backend, every run
    must produce a byte-identical image stack.

    Returns a dict with per-run rows, per-backend checksums, and the
    problem size.
    """
    cfg = _as_config(config)
    workers = [int(w) for w in workers]
    if not workers or any(w < 1 for w in workers):
        raise ConfigError(f"worker counts must be >= 1, got {workers}")
    if repetitions < 1:
        raise ConfigError(f"repetitions must be >= 1, got {repetitions}")
    if backends is None:
        backends = ["numba", "numpy"] if has_numba() else ["numpy"]

    traj = generate_trajectory(cfg.segments, cfg.params.prf, cfg.start_pose)
    raw = synthesize_dechirped(
        cfg.scene, traj, cfg.mount, cfg.params,
        noise_std=cfg.noise_std, seed=cfg.seed,
    )
    rc = range_compress(
        raw, cfg.params, window=cfg.window,
        zero_pad_factor=cfg.zero_pad_factor, slow_time_axis=traj.tau,
    )
    n_pulses = rc.data.shape[1]
    pixels = cfg.grid.nx * cfg.grid.ny
    work = pixels * n_pulses * len(cfg.beams)

    def run(backend: str, n_workers: int):
        t0 = time.perf_counter()
        images = multi_beam_focus(
            rc, traj, cfg.mount, cfg.grid, list(cfg.beams),
            interp=cfg.interpolation, cutoff=cfg.cutoff, tile=cfg.tile,
            workers=n_workers, backend=backend,
        )
        seconds = time.perf_counter() - t0
        stack = np.ascontiguousarray(
            np.stack([img.data for img in images])
        )
        return seconds, hashlib.sha256(stack.tobytes()).hexdigest(), stack

    rows: list[dict] = []
    checksums: dict = {}
    reference: np.ndarray | None = None
    for bi, backend in enumerate(backends):
        plan = (
            [(w, r) for w in workers for r in range(repetitions)]
            if bi == 0
            else [(max(workers), 0)]
        )
        run(backend, plan[0][0])  # warm-up: JIT compile / page in
        for n_workers, rep in plan:
            seconds, digest, stack = run(backend, n_workers)
            rows.append(
                {
                    "backend": backend,
                    "workers": n_workers,
                    "repetition": rep,
                    "seconds": seconds,
                    "pixel_pulses_per_s": work / seconds,
                }
            )
            if backend in checksums and checksums[backend] != digest:
                raise AssertionError(
                    f"nondeterministic output: backend {backend} produced "
                    f"differing checksums across runs"
                )
            checksums[backend] = digest
            if reference is None:
                reference = stack
            else:
                peak = float(np.abs(reference).max())
                if not np.allclose(
                    stack, reference, rtol=1e-9, atol=1e-9 * max(peak, 1.0)
                ):
                    raise AssertionError(
                        f"backend {backend} output diverged from "
                        f"{backends[0]} beyond tolerance"
                    )
    return {
        "scenario": cfg.name,
        "rows": rows,
        "checksums": checksums,
        "pixels": pixels,
        "pulses": n_pulses,
        "beams": len(cfg.beams),
    }
