"""Scenario configuration: one TOML file describing a full experiment.

A scenario bundles the radar parameters, antenna mount, vehicle trajectory
segments, scene content, sensor suite, filter tuning, and processing options
for the simulate / fuse / focus / compose pipeline. Validation errors name
the offending key path and, when it can be located, its line in the file.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .focus import Beam, ImageGrid, beamwidth_for_resolution
from .navigation import SensorNoise, SensorRates, UkfConfig
from .scene import (
    CtraSegment,
    Isotropic,
    PlatformPose,
    RadarMount,
    Scatterer,
    Scene,
    Specular,
    specular_row,
)
from .signal import WINDOW_IDS, FmcwParams

_INTERPOLATIONS = ("nearest", "linear")


def _find_line(raw: str, dotted: str) -> int | None:
    """Best-effort line of a key or table header in the raw TOML text."""
    lines = raw.splitlines()
    indexed = re.match(r"^(.*?)\[(\d+)\](?:\.(.*))?$", dotted)
    if indexed:
        array_path, index, leaf = indexed.groups()
        header_re = re.compile(rf"^\s*\[\[\s*{re.escape(array_path)}\s*\]\]")
        seen = -1
        start = None
        for i, line in enumerate(lines, start=1):
            if header_re.match(line):
                seen += 1
                if seen == int(index):
                    start = i
                    break
        if start is None:
            return None
        if not leaf:
            return start
        key_re = re.compile(rf"^\s*{re.escape(leaf)}\s*=")
        for i in range(start, len(lines)):
            if re.match(r"^\s*\[", lines[i]):
                break
            if key_re.match(lines[i]):
                return i + 1
        return start
    leaf = dotted.rsplit(".", 1)[-1]
    key_re = re.compile(rf"^\s*{re.escape(leaf)}\s*=")
    table_re = re.compile(rf"^\s*\[\[?\s*{re.escape(dotted)}\s*\]?\]")
    for i, line in enumerate(lines, start=1):
        if key_re.match(line) or table_re.match(line):
            return i
    return None


class _View:
    """A TOML table plus the context needed for good error messages."""

    def __init__(self, table: dict, path: str, raw: str):
        self.table = table
        self.path = path
        self.raw = raw

    def _fail(self, dotted: str, message: str):
        line = _find_line(self.raw, dotted)
        at = f" (line {line})" if line else ""
        raise ConfigError(f"{dotted}: {message}{at}")

    def _dotted(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def child(self, key: str, required: bool = False) -> "_View":
        value = self.table.get(key)
        if value is None:
            if required:
                self._fail(self._dotted(key), "missing required table")
            value = {}
        if not isinstance(value, dict):
            self._fail(self._dotted(key), "expected a table")
        return _View(value, self._dotted(key), self.raw)

    def children(self, key: str) -> list:
        value = self.table.get(key, [])
        if not isinstance(value, list) or any(
            not isinstance(item, dict) for item in value
        ):
            self._fail(self._dotted(key), "expected an array of tables")
        return [
            _View(item, f"{self._dotted(key)}[{i}]", self.raw)
            for i, item in enumerate(value)
        ]

    def get(self, key: str, default=None, required: bool = False):
        if key in self.table:
            return self.table[key]
        if required:
            self._fail(self._dotted(key), "missing required key")
        return default

    def number(self, key: str, default=None, required: bool = False) -> float:
        value = self.get(key, default, required)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self._fail(self._dotted(key), f"expected a number, got {value!r}")
        return float(value)

    def integer(self, key: str, default=None, required: bool = False) -> int:
        value = self.get(key, default, required)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            self._fail(self._dotted(key), f"expected an integer, got {value!r}")
        return int(value)

    def string(self, key: str, default=None, required: bool = False) -> str:
        value = self.get(key, default, required)
        if value is None:
            return None
        if not isinstance(value, str):
            self._fail(self._dotted(key), f"expected a string, got {value!r}")
        return value

    def vector(self, key: str, n: int, default=None, required: bool = False):
        if key not in self.table:
            if required:
                self._fail(self._dotted(key), "missing required key")
            return None if default is None else tuple(float(q) for q in default)
        value = self.table[key]
        if (
            not isinstance(value, list)
            or len(value) != n
            or any(
                isinstance(q, bool) or not isinstance(q, (int, float))
                for q in value
            )
        ):
            self._fail(
                self._dotted(key), f"expected a list of {n} numbers, got {value!r}"
            )
        return tuple(float(q) for q in value)

    def wrap(self, key: str, builder, *args, **kwargs):
        """Build a component, re-raising its errors with this key path."""
        try:
            return builder(*args, **kwargs)
        except ConfigError as exc:
            self._fail(self._dotted(key) if key else self.path, str(exc))


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Everything one end-to-end run needs, parsed and validated."""

    name: str
    seed: int
    params: FmcwParams
    noise_std: float
    mount: RadarMount
    start_pose: PlatformPose
    segments: tuple
    scene: Scene
    rates: SensorRates
    sensor_noise: SensorNoise
    ukf: UkfConfig
    window: str
    zero_pad_factor: int
    interpolation: str
    beams: tuple
    cutoff: bool
    grid: ImageGrid
    dynamic_range_db: float
    floor_db: float
    tile: int

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)


def _parse_targets(scene_view: _View) -> list:
    targets: list[Scatterer] = []
    for tv in scene_view.children("targets"):
        kind = tv.string("kind", required=True)
        amplitude = tv.number("amplitude", 1.0)
        if kind == "point":
            position = tv.vector("position", 2, required=True)
            targets.append(
                tv.wrap(
                    "position", Scatterer,
                    position=position, amplitude=amplitude, pattern=Isotropic(),
                )
            )
        elif kind == "specular":
            position = tv.vector("position", 2, required=True)
            normal = math.radians(tv.number("normal_deg", required=True))
            width = math.radians(tv.number("beamwidth_deg", 10.0))
            targets.append(
                tv.wrap(
                    "position", Scatterer,
                    position=position, amplitude=amplitude,
                    pattern=Specular(normal=normal, beamwidth=width),
                )
            )
        elif kind == "wall":
            start = tv.vector("start", 2, required=True)
            end = tv.vector("end", 2, required=True)
            spacing = tv.number("spacing", required=True)
            width = math.radians(tv.number("beamwidth_deg", 10.0))
            normal_deg = tv.number("normal_deg")
            if normal_deg is None:
                # Default facet normal: 90 degrees left of the start-to-end
                # direction.
                normal = math.atan2(end[1] - start[1], end[0] - start[0])
                normal += 0.5 * math.pi
            else:
                normal = math.radians(normal_deg)
            targets.extend(
                tv.wrap(
                    "start", specular_row,
                    start=start, end=end, spacing=spacing,
                    amplitude=amplitude, normal=normal, beamwidth=width,
                )
            )
        else:
            tv._fail(
                f"{tv.path}.kind",
                f"unknown target kind {kind!r} "
                "(expected point, specular, or wall)",
            )
    return targets


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse and validate a scenario from TOML text."""
    try:
        table = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {source}: {exc}") from exc
    root = _View(table, "", text)

    name = root.string("name", "scenario")
    seed = root.integer("seed", 0)
    if seed < 0:
        root._fail("seed", f"must be >= 0, got {seed}")

    radar = root.child("radar")
    params = radar.wrap(
        None, FmcwParams,
        f0=radar.number("f0", 77.0e9),
        bandwidth=radar.number("bandwidth", 3.0e9),
        pulse_duration=radar.number("pulse_duration", 155.0e-6),
        prf=radar.number("prf", 990.0),
        max_range=radar.number("max_range", 26.0),
        fast_time_samples=radar.integer("fast_time_samples", 1040),
    )
    noise_std = radar.number("noise_std", 0.0)
    if noise_std < 0.0:
        radar._fail("radar.noise_std", f"must be >= 0, got {noise_std}")

    mount_view = root.child("mount")
    mount = mount_view.wrap(
        None, RadarMount,
        squint=math.radians(mount_view.number("squint_deg", 90.0)),
        fov=math.radians(mount_view.number("fov_deg", 90.0)),
        lever_arm=mount_view.vector("lever_arm", 2, (2.0, 0.0)),
    )

    traj_view = root.child("trajectory", required=True)
    seg_views = traj_view.children("segments")
    if not seg_views:
        traj_view._fail("trajectory.segments", "at least one segment is required")
    segments = tuple(
        sv.wrap(
            None, CtraSegment,
            duration=sv.number("duration", required=True),
            speed=sv.number("speed", required=True),
            accel=sv.number("accel", 0.0),
            turn_rate=sv.number("turn_rate", 0.0),
        )
        for sv in seg_views
    )
    start = traj_view.vector("start", 2, (0.0, 0.0))
    heading = math.radians(traj_view.number("heading_deg", 0.0))
    start_pose = traj_view.wrap(
        "start", PlatformPose,
        tau=0.0, position=start, heading=heading, speed=segments[0].speed,
    )

    scene_view = root.child("scene", required=True)
    extent = scene_view.vector("extent", 4, required=True)
    targets = _parse_targets(scene_view)
    scene = scene_view.wrap(
        "extent", Scene, scatterers=tuple(targets), extent=extent
    )

    sensors = root.child("sensors")
    rates_view = sensors.child("rates")
    rates = rates_view.wrap(
        None, SensorRates,
        imu_accel=rates_view.number("imu_accel", 100.0),
        gyro=rates_view.number("gyro", 100.0),
        wheel_speed=rates_view.number("wheel_speed", 50.0),
        steering_angle=rates_view.number("steering_angle", 50.0),
        gnss_position=rates_view.number("gnss_position", 10.0),
    )
    noise_view = sensors.child("noise")
    sensor_noise = noise_view.wrap(
        None, SensorNoise,
        imu_accel=noise_view.number("imu_accel", 5.0e-2),
        gyro=noise_view.number("gyro", 2.0e-3),
        wheel_speed=noise_view.number("wheel_speed", 5.0e-2),
        steering_angle=noise_view.number("steering_angle", 2.0e-3),
        gnss_position=noise_view.number("gnss_position", 0.12),
    )

    ukf_view = root.child("ukf")
    ukf = ukf_view.wrap(
        None, UkfConfig,
        alpha=ukf_view.number("alpha", 1.0e-3),
        beta=ukf_view.number("beta", 2.0),
        kappa=ukf_view.number("kappa", 0.0),
        process_noise=ukf_view.vector(
            "process_noise", 6, UkfConfig().process_noise
        ),
        initial_covariance=ukf_view.vector(
            "initial_covariance", 6, UkfConfig().initial_covariance
        ),
        wheelbase=ukf_view.number("wheelbase", 2.82),
    )

    proc = root.child("processing")
    window = proc.string("window", "rectangular")
    if window not in WINDOW_IDS:
        proc._fail("processing.window", f"unknown window {window!r}")
    zero_pad = proc.integer("zero_pad_factor", 4)
    if zero_pad not in (1, 2, 4, 8):
        proc._fail(
            "processing.zero_pad_factor",
            f"must be one of 1, 2, 4, 8 (got {zero_pad})",
        )
    interpolation = proc.string("interpolation", "linear")
    if interpolation not in _INTERPOLATIONS:
        proc._fail(
            "processing.interpolation",
            f"expected one of {_INTERPOLATIONS}, got {interpolation!r}",
        )
    cross_res = proc.number("cross_range_resolution", 0.05)
    if cross_res <= 0.0:
        proc._fail(
            "processing.cross_range_resolution", f"must be > 0, got {cross_res}"
        )
    beamwidth_deg = proc.number("beamwidth_deg")
    if beamwidth_deg is None:
        delta_alpha = beamwidth_for_resolution(cross_res, params.f0)
    else:
        delta_alpha = math.radians(beamwidth_deg)
    beams_deg = proc.get("beams_deg", [-20.0, 0.0, 20.0])
    if not isinstance(beams_deg, list) or not beams_deg:
        proc._fail("processing.beams_deg", "expected a non-empty list of angles")
    beams = tuple(
        proc.wrap(
            "beams_deg", Beam,
            alpha_p=math.radians(float(a)), delta_alpha=delta_alpha,
        )
        for a in beams_deg
    )
    dynamic_range_db = proc.number("dynamic_range_db", 40.0)
    floor_db = proc.number("floor_db", -60.0)
    tile = proc.integer("tile", 32)
    cutoff = bool(proc.get("cutoff", True))

    grid_view = root.child("grid", required=True)
    grid_extent = grid_view.vector("extent", 4, required=True)
    spacing = grid_view.number("spacing", required=True)
    grid = grid_view.wrap(
        "extent", ImageGrid.from_extent, grid_extent, spacing
    )

    return ScenarioConfig(
        name=name, seed=seed, params=params, noise_std=noise_std,
        mount=mount, start_pose=start_pose, segments=segments, scene=scene,
        rates=rates, sensor_noise=sensor_noise, ukf=ukf,
        window=window, zero_pad_factor=zero_pad, interpolation=interpolation,
        beams=beams, cutoff=cutoff, grid=grid,
        dynamic_range_db=dynamic_range_db, floor_db=floor_db, tile=tile,
    )


def load_scenario(path) -> ScenarioConfig:
    """Parse and validate a scenario TOML file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), source=str(path))
