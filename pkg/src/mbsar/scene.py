"""World model: scatterers, vehicle trajectory, and radar mounting geometry.

The scene is a 2D East-North plane (imaging is planar; height is ignored).
Angles are radians, CCW-positive from the +x axis unless a name says otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi

# Below this |turn rate| the straight-line limit of the CTRA integral is used.
SMALL_TURN_THRESHOLD = 1e-3


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to the principal value in (-pi, pi]."""
    return angle - TWO_PI * np.ceil((angle - math.pi) / TWO_PI)


# ---------------------------------------------------------------------------
# Scatterers and scenes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Isotropic:
    """Angle-independent scattering response (poles, pedestrian legs)."""


@dataclass(frozen=True)
class Specular:
    """Directional response peaked at the surface normal (walls, fences).

    Parameters
    ----------
    normal : float
        World-frame direction of the surface normal, radians.
    beamwidth : float
        Angular width of the Gaussian response, radians, in (0, pi].
    """

    normal: float
    beamwidth: float

    def __post_init__(self) -> None:
        if not 0.0 < self.beamwidth <= math.pi:
            raise ConfigError(
                f"specular beamwidth must be in (0, pi], got {self.beamwidth}"
            )


@dataclass(frozen=True)
class Scatterer:
    """Point scatterer with a complex reflectivity and an angular pattern."""

    position: tuple[float, float]
    amplitude: complex
    pattern: Isotropic | Specular = field(default_factory=Isotropic)

    def __post_init__(self) -> None:
        if abs(self.amplitude) <= 0.0:
            raise ConfigError("scatterer amplitude must be nonzero")


PATTERN_ISOTROPIC = 0
PATTERN_SPECULAR = 1


@dataclass(frozen=True)
class Scene:
    """Ordered collection of scatterers inside a bounding rectangle.

    ``extent`` is (xmin, ymin, xmax, ymax) in meters. The scatterer list may
    be empty (null scene); every scatterer must lie within the extent.
    """

    scatterers: tuple[Scatterer, ...]
    extent: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        xmin, ymin, xmax, ymax = self.extent
        if not (xmin <= xmax and ymin <= ymax):
            raise ConfigError(f"invalid scene extent {self.extent}")
        for s in self.scatterers:
            x, y = s.position
            if not (xmin <= x <= xmax and ymin <= y <= ymax):
                raise ConfigError(
                    f"scatterer at ({x}, {y}) lies outside extent {self.extent}"
                )

    def __len__(self) -> int:
        return len(self.scatterers)

    def as_arrays(self):
        """Flatten to parallel arrays for the synthesis kernels.

        Returns (positions (S,2) f8, amplitudes (S,) c16, kinds (S,) u1,
        normals (S,) f8, beamwidths (S,) f8).
        """
        n = len(self.scatterers)
        pos = np.zeros((n, 2))
        amp = np.zeros(n, dtype=np.complex128)
        kind = np.zeros(n, dtype=np.uint8)
        normal = np.zeros(n)
        width = np.ones(n)
        for i, s in enumerate(self.scatterers):
            pos[i] = s.position
            amp[i] = s.amplitude
            if isinstance(s.pattern, Specular):
                kind[i] = PATTERN_SPECULAR
                normal[i] = s.pattern.normal
                width[i] = s.pattern.beamwidth
        return pos, amp, kind, normal, width


def specular_row(
    start: tuple[float, float],
    end: tuple[float, float],
    spacing: float,
    amplitude: complex,
    normal: float,
    beamwidth: float,
) -> list[Scatterer]:
    """Discretize a wall/fence segment into a row of specular scatterers.

    Spacing should not exceed half the range resolution so the row reads as a
    continuous surface after compression.
    """
    if spacing <= 0.0:
        raise ConfigError("row spacing must be positive")
    p0 = np.asarray(start, dtype=float)
    p1 = np.asarray(end, dtype=float)
    length = float(np.hypot(*(p1 - p0)))
    count = max(2, int(math.floor(length / spacing)) + 1)
    pattern = Specular(normal=normal, beamwidth=beamwidth)
    ts = np.linspace(0.0, 1.0, count)
    return [
        Scatterer(tuple(p0 + t * (p1 - p0)), amplitude, pattern) for t in ts
    ]


def scattering_gain(s: Scatterer, look_angle: float) -> float:
    """Angular gain of a scatterer seen from ``look_angle``.

    ``look_angle`` is the world-frame direction from the scatterer toward the
    platform. Isotropic patterns return 1; specular patterns fall off as a
    Gaussian of the wrapped offset from the surface normal. Output in (0, 1].
    """
    if isinstance(s.pattern, Isotropic):
        return 1.0
    d = float(wrap_angle(look_angle - s.pattern.normal))
    u = d / s.pattern.beamwidth
    return math.exp(-4.0 * u * u)


# ---------------------------------------------------------------------------
# Platform poses and trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlatformPose:
    """Vehicle pose at one slow-time instant."""

    tau: float
    position: tuple[float, float]
    heading: float
    speed: float

    def __post_init__(self) -> None:
        if self.speed < 0.0:
            raise ConfigError(f"pose speed must be >= 0, got {self.speed}")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered platform poses stored as parallel arrays.

    ``tau`` must be strictly increasing; when produced by
    :func:`generate_trajectory` consecutive spacing equals 1/PRF.
    """

    tau: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray

    def __post_init__(self) -> None:
        for name in ("tau", "x", "y", "heading", "speed"):
            object.__setattr__(
                self, name, np.ascontiguousarray(getattr(self, name), dtype=float)
            )
        n = self.tau.size
        if any(getattr(self, f).size != n for f in ("x", "y", "heading", "speed")):
            raise ConfigError("trajectory arrays must share one length")
        if n > 1 and not np.all(np.diff(self.tau) > 0.0):
            raise ConfigError("trajectory tau must be strictly increasing")
        if np.any(self.speed < 0.0):
            raise ConfigError("trajectory speed must be non-negative")

    def __len__(self) -> int:
        return int(self.tau.size)

    def pose(self, i: int) -> PlatformPose:
        return PlatformPose(
            tau=float(self.tau[i]),
            position=(float(self.x[i]), float(self.y[i])),
            heading=float(self.heading[i]),
            speed=float(self.speed[i]),
        )

    @classmethod
    def from_poses(cls, poses: list[PlatformPose]) -> "Trajectory":
        return cls(
            tau=np.array([p.tau for p in poses]),
            x=np.array([p.position[0] for p in poses]),
            y=np.array([p.position[1] for p in poses]),
            heading=np.array([p.heading for p in poses]),
            speed=np.array([p.speed for p in poses]),
        )


@dataclass(frozen=True)
class RadarMount:
    """Antenna mounting: boresight squint, field of view, and lever arm.

    ``squint`` is the boresight angle relative to the driving direction,
    CCW-positive (positive squint points the antenna to the left of the
    motion); ``fov`` is the full antenna field of view in (0, pi];
    ``lever_arm`` is the phase-center offset from the vehicle reference point
    in the vehicle frame (x forward, y left), meters.
    """

    squint: float
    fov: float
    lever_arm: tuple[float, float] = (2.0, 0.0)

    def __post_init__(self) -> None:
        if not 0.0 < self.fov <= math.pi:
            raise ConfigError(f"mount fov must be in (0, pi], got {self.fov}")

    @property
    def side(self) -> int:
        """Imaged side: +1 if the boresight points left of motion, else -1."""
        return 1 if math.sin(self.squint) >= 0.0 else -1


@dataclass(frozen=True)
class PhaseCenter:
    position: tuple[float, float]
    boresight: float


def radar_phase_center(pose: PlatformPose, mount: RadarMount) -> PhaseCenter:
    """World position and boresight of the antenna phase center for a pose."""
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    lx, ly = mount.lever_arm
    px = pose.position[0] + c * lx - s * ly
    py = pose.position[1] + s * lx + c * ly
    return PhaseCenter(position=(px, py), boresight=pose.heading + mount.squint)


def phase_center_arrays(traj: Trajectory, mount: RadarMount):
    """Vectorized phase centers and boresights for a whole trajectory.

    Returns (px (N,), py (N,), boresight (N,)) float64 arrays.
    """
    c = np.cos(traj.heading)
    s = np.sin(traj.heading)
    lx, ly = mount.lever_arm
    px = traj.x + c * lx - s * ly
    py = traj.y + s * lx + c * ly
    return px, py, traj.heading + mount.squint


# ---------------------------------------------------------------------------
# CTRA kinematics
# ---------------------------------------------------------------------------

def ctra_displacement(v0, a, psi0, omega, dt):
    """Closed-form CTRA displacement over ``dt`` (scalars or arrays).

    Returns (dx, dy, dpsi, dv). Heading and speed evolve linearly; position
    follows the exact integral of (v0 + a t)(cos, sin)(psi0 + omega t). For
    swept angles |omega * dt| below ``SMALL_TURN_THRESHOLD`` a second-order
    series replaces the closed form, whose 1/omega terms lose precision.
    """
    v0 = np.asarray(v0, dtype=float)
    a = np.asarray(a, dtype=float)
    psi0 = np.asarray(psi0, dtype=float)
    omega = np.asarray(omega, dtype=float)
    dt = np.asarray(dt, dtype=float)

    dpsi = omega * dt
    dv = a * dt
    psi1 = psi0 + dpsi
    v1 = v0 + dv

    small = np.abs(dpsi) < SMALL_TURN_THRESHOLD
    # Guard the 1/omega terms; the series branch overwrites them below.
    w = np.where(small, 1.0, omega)

    sin0, cos0 = np.sin(psi0), np.cos(psi0)
    sin1, cos1 = np.sin(psi1), np.cos(psi1)
    dx_turn = (v1 * sin1 - v0 * sin0) / w + a * (cos1 - cos0) / (w * w)
    dy_turn = (-v1 * cos1 + v0 * cos0) / w + a * (sin1 - sin0) / (w * w)

    # Moment integrals of (v0 + a t) against 1, t, t^2 over [0, dt] give the
    # expansion of the path integral to second order in the swept angle.
    i0 = v0 * dt + 0.5 * a * dt * dt
    i1 = dt * dt * (0.5 * v0 + a * dt / 3.0)
    i2 = dt * dt * dt * (v0 / 3.0 + 0.25 * a * dt)
    along = i0 - 0.5 * omega * omega * i2
    across = omega * i1
    dx = np.where(small, cos0 * along - sin0 * across, dx_turn)
    dy = np.where(small, sin0 * along + cos0 * across, dy_turn)
    if dx.ndim == 0:
        return float(dx), float(dy), float(dpsi), float(dv)
    return dx, dy, dpsi, dv


@dataclass(frozen=True)
class CtraSegment:
    """One constant-turn-rate-and-acceleration trajectory piece.

    ``speed`` is the speed at the start of the segment; ``accel`` the
    longitudinal acceleration; ``turn_rate`` the heading rate.
    """

    duration: float
    speed: float
    accel: float
    turn_rate: float

    def __post_init__(self) -> None:
        if self.duration <= 0.0:
            raise ConfigError(f"segment duration must be > 0, got {self.duration}")
        if self.speed < 0.0:
            raise ConfigError(f"segment speed must be >= 0, got {self.speed}")
        if self.speed + self.accel * self.duration < 0.0:
            raise ConfigError("segment decelerates through zero speed")


def slow_time_grid(duration: float, prf: float) -> np.ndarray:
    """Pulse instants k/prf covering [0, duration) (half-open)."""
    n = int(round(duration * prf))
    return np.arange(n) / prf


def generate_trajectory(
    segments: list[CtraSegment],
    prf: float,
    start_pose: PlatformPose,
) -> Trajectory:
    """Sample a piecewise-CTRA vehicle path at the pulse repetition interval.

    Position and heading are continuous across segment boundaries; each
    segment restarts speed at its own ``speed`` field. Poses are emitted at
    tau = start + k/prf for k = 0 .. round(total_duration * prf) - 1.
    """
    if prf <= 0.0:
        raise ConfigError(f"prf must be > 0, got {prf}")
    if not segments:
        raise ConfigError("at least one trajectory segment is required")

    durations = np.array([s.duration for s in segments])
    starts = np.concatenate([[0.0], np.cumsum(durations)])
    total = float(starts[-1])
    local_tau = slow_time_grid(total, prf)

    # Chain segment-start states.
    seg_x = np.empty(len(segments))
    seg_y = np.empty(len(segments))
    seg_psi = np.empty(len(segments))
    x, y, psi = start_pose.position[0], start_pose.position[1], start_pose.heading
    for i, seg in enumerate(segments):
        seg_x[i], seg_y[i], seg_psi[i] = x, y, psi
        dx, dy, dpsi, _ = ctra_displacement(
            seg.speed, seg.accel, psi, seg.turn_rate, seg.duration
        )
        x, y, psi = x + dx, y + dy, psi + dpsi

    idx = np.clip(np.searchsorted(starts, local_tau, side="right") - 1, 0, len(segments) - 1)
    t_local = local_tau - starts[idx]
    v0 = np.array([s.speed for s in segments])[idx]
    acc = np.array([s.accel for s in segments])[idx]
    om = np.array([s.turn_rate for s in segments])[idx]
    dx, dy, dpsi, dv = ctra_displacement(v0, acc, seg_psi[idx], om, t_local)

    return Trajectory(
        tau=start_pose.tau + local_tau,
        x=seg_x[idx] + dx,
        y=seg_y[idx] + dy,
        heading=wrap_angle(seg_psi[idx] + dpsi),
        speed=v0 + dv,
    )


# ---------------------------------------------------------------------------
# Trajectory CSV I/O
# ---------------------------------------------------------------------------

TRAJECTORY_HEADER = ["tau", "x", "y", "heading", "speed"]


def write_trajectory_csv(path, traj: Trajectory, covariance: np.ndarray | None = None):
    """Write a trajectory as CSV (``tau,x,y,heading,speed``).

    When ``covariance`` (N,3: cov_xx, cov_xy, cov_yy) is given, the estimated
    flavor is written with three extra columns.
    """
    header = list(TRAJECTORY_HEADER)
    if covariance is not None:
        if covariance.shape != (len(traj), 3):
            raise ConfigError("covariance must have shape (n_poses, 3)")
        header += ["cov_xx", "cov_xy", "cov_yy"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(traj)):
            row = [
                repr(float(traj.tau[i])),
                repr(float(traj.x[i])),
                repr(float(traj.y[i])),
                repr(float(traj.heading[i])),
                repr(float(traj.speed[i])),
            ]
            if covariance is not None:
                row += [repr(float(v)) for v in covariance[i]]
            writer.writerow(row)


def read_trajectory_csv(path):
    """Read a trajectory CSV; returns (Trajectory, covariance-or-None)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:5] != TRAJECTORY_HEADER:
            raise ConfigError(f"unexpected trajectory CSV header {header!r} in {path}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise ConfigError(f"empty trajectory CSV {path}")
    traj = Trajectory(
        tau=data[:, 0], x=data[:, 1], y=data[:, 2],
        heading=data[:, 3], speed=data[:, 4],
    )
    cov = data[:, 5:8] if data.shape[1] >= 8 else None
    return traj, cov
