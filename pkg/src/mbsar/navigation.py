"""Navigation sensor simulation and trajectory estimation.

Simulates an automotive sensor suite (IMU, gyro, wheel odometry, steering
encoder, GNSS) along a true trajectory, then fuses the measurements with an
unscented Kalman filter whose process model is constant turn rate and
acceleration (CTRA). The filter state is [x, y, v, a, psi, omega]; heading
is kept unwrapped inside the filter and wrapped only in the output poses.

The estimated trajectory is resampled onto an arbitrary slow-time grid by
propagating the last filtered state forward through the process model, so it
can drive back-projection exactly like a truth trajectory.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .scene import Trajectory, ctra_displacement, wrap_angle

SENSOR_KIND_IDS = {
    "imu_accel": 0,
    "gyro": 1,
    "wheel_speed": 2,
    "steering_angle": 3,
    "gnss_position": 4,
}
SENSOR_KIND_NAMES = {v: k for k, v in SENSOR_KIND_IDS.items()}

MEASUREMENT_HEADER = ["tau", "kind", "value1", "value2", "std"]

_SPEED_FLOOR = 0.1


@dataclass(frozen=True)
class NavState:
    """CTRA filter state at one instant."""

    x: float = 0.0
    y: float = 0.0
    v: float = 0.0
    a: float = 0.0
    psi: float = 0.0
    omega: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.v, self.a, self.psi, self.omega])

    @staticmethod
    def from_array(arr: np.ndarray) -> "NavState":
        x, y, v, a, psi, omega = (float(q) for q in arr)
        return NavState(x=x, y=y, v=v, a=a, psi=psi, omega=omega)


@dataclass(frozen=True)
class SensorMeasurement:
    """One time-stamped sensor reading (one or two channels)."""

    tau: float
    kind: str
    value: tuple
    std: float

    def __post_init__(self) -> None:
        if self.kind not in SENSOR_KIND_IDS:
            raise ConfigError(
                f"unknown sensor kind {self.kind!r} "
                f"(expected one of {sorted(SENSOR_KIND_IDS)})"
            )
        want = 2 if self.kind in ("imu_accel", "gnss_position") else 1
        if len(self.value) != want:
            raise ConfigError(
                f"{self.kind} expects {want} value(s), got {len(self.value)}"
            )
        if self.std < 0.0:
            raise ConfigError(f"std must be >= 0, got {self.std}")


@dataclass(frozen=True)
class SensorRates:
    """Sample rates in Hz for each simulated sensor."""

    imu_accel: float = 100.0
    gyro: float = 100.0
    wheel_speed: float = 50.0
    steering_angle: float = 50.0
    gnss_position: float = 10.0

    def __post_init__(self) -> None:
        for name, rate in self.__dict__.items():
            if rate <= 0.0:
                raise ConfigError(f"rate {name} must be > 0, got {rate}")


@dataclass(frozen=True)
class SensorNoise:
    """Per-sensor measurement noise standard deviations."""

    imu_accel: float = 5.0e-2
    gyro: float = 2.0e-3
    wheel_speed: float = 5.0e-2
    steering_angle: float = 2.0e-3
    gnss_position: float = 0.12

    def __post_init__(self) -> None:
        for name, std in self.__dict__.items():
            if std < 0.0:
                raise ConfigError(f"noise {name} must be >= 0, got {std}")


@dataclass(frozen=True)
class UkfConfig:
    """Unscented filter tuning: sigma-point spread and noise densities."""

    alpha: float = 1.0
    beta: float = 2.0
    kappa: float = 0.0
    process_noise: tuple = (1.0e-6, 1.0e-6, 1.0e-4, 2.5e-1, 1.0e-8, 1.0e-2)
    initial_covariance: tuple = (0.25, 0.25, 0.25, 0.25, 0.01, 0.01)
    wheelbase: float = 2.82

    def __post_init__(self) -> None:
        if self.alpha <= 0.0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if len(self.process_noise) != 6:
            raise ConfigError("process_noise must have 6 entries")
        if len(self.initial_covariance) != 6:
            raise ConfigError("initial_covariance must have 6 entries")
        if any(q < 0.0 for q in self.process_noise):
            raise ConfigError("process_noise entries must be >= 0")
        if any(p <= 0.0 for p in self.initial_covariance):
            raise ConfigError("initial_covariance entries must be > 0")
        if self.wheelbase <= 0.0:
            raise ConfigError(f"wheelbase must be > 0, got {self.wheelbase}")


def ctra_predict(state: NavState, dt: float) -> NavState:
    """Propagate one CTRA state forward by dt seconds (closed form)."""
    if dt < 0.0:
        raise ConfigError(f"dt must be >= 0, got {dt}")
    dx, dy, _, _ = ctra_displacement(state.v, state.a, state.psi, state.omega, dt)
    return NavState(
        x=state.x + float(dx),
        y=state.y + float(dy),
        v=state.v + state.a * dt,
        a=state.a,
        psi=state.psi + state.omega * dt,
        omega=state.omega,
    )


def _ctra_array(states: np.ndarray, dt) -> np.ndarray:
    """Vectorized CTRA propagation of stacked [..., 6] state rows."""
    x, y, v, a, psi, omega = (states[..., i] for i in range(6))
    dx, dy, _, _ = ctra_displacement(v, a, psi, omega, dt)
    out = np.empty_like(states)
    out[..., 0] = x + dx
    out[..., 1] = y + dy
    out[..., 2] = v + a * dt
    out[..., 3] = a
    out[..., 4] = psi + omega * dt
    out[..., 5] = omega
    return out


def _true_signals(traj: Trajectory):
    """Differentiate a pose trajectory into the signals sensors observe."""
    tau = traj.tau
    psi = np.unwrap(traj.heading)
    v = traj.speed
    if len(traj) < 2:
        raise ConfigError("sensor simulation needs at least two poses")
    a = np.gradient(v, tau)
    omega = np.gradient(psi, tau)
    return tau, traj.x, traj.y, v, a, psi, omega


def simulate_sensors(
    true_traj: Trajectory,
    rates: SensorRates = SensorRates(),
    noise: SensorNoise = SensorNoise(),
    seed: int = 0,
    wheelbase: float = 2.82,
) -> list:
    """Sample noisy sensor readings along a true trajectory.

    Each sensor runs on its own clock k/rate inside the trajectory's time
    span, reading the interpolated true signal plus white Gaussian noise
    from a counter-based stream keyed by (seed, sensor kind). Output is
    sorted by time then kind and is reproducible for a given seed.
    """
    if seed < 0:
        raise ConfigError(f"seed must be >= 0, got {seed}")
    tau, x, y, v, a, psi, omega = _true_signals(true_traj)
    pose_rate = 1.0 / float(np.min(np.diff(tau)))
    t0, t1 = float(tau[0]), float(tau[-1])

    lateral = v * omega
    steering = np.arctan(wheelbase * omega / np.maximum(v, _SPEED_FLOOR))
    channels = {
        "imu_accel": (a, lateral),
        "gyro": (omega,),
        "wheel_speed": (v,),
        "steering_angle": (steering,),
        "gnss_position": (x, y),
    }

    out: list[SensorMeasurement] = []
    for kind, kind_id in SENSOR_KIND_IDS.items():
        rate = getattr(rates, kind)
        std = getattr(noise, kind)
        if rate > pose_rate * (1.0 + 1e-9):
            raise ConfigError(
                f"{kind} rate {rate} Hz exceeds the trajectory pose rate "
                f"{pose_rate:.1f} Hz"
            )
        n = int(math.floor((t1 - t0) * rate + 1e-9)) + 1
        taus = t0 + np.arange(n) / rate
        vals = np.stack([np.interp(taus, tau, c) for c in channels[kind]], axis=1)
        if std > 0.0:
            gen = np.random.Generator(
                np.random.Philox(key=np.array([seed, kind_id], dtype=np.uint64))
            )
            vals = vals + std * gen.standard_normal(vals.shape)
        for i in range(n):
            out.append(
                SensorMeasurement(
                    tau=float(taus[i]), kind=kind,
                    value=tuple(float(q) for q in vals[i]), std=std,
                )
            )
    out.sort(key=lambda m: (m.tau, SENSOR_KIND_IDS[m.kind]))
    return out


def _sigma_points(mean: np.ndarray, cov: np.ndarray, gamma: float) -> np.ndarray:
    """2n+1 scaled sigma points; repairs a non-PD covariance once."""
    try:
        root = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        sym = 0.5 * (cov + cov.T)
        jitter = 1.0e-9 * max(1.0, float(np.trace(sym)) / sym.shape[0])
        try:
            root = np.linalg.cholesky(sym + jitter * np.eye(sym.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "state covariance is not positive definite after repair"
            ) from exc
    pts = np.empty((2 * mean.size + 1, mean.size))
    pts[0] = mean
    pts[1 : mean.size + 1] = mean + gamma * root.T
    pts[mean.size + 1 :] = mean - gamma * root.T
    return pts


def _ut_weights(n: int, cfg: UkfConfig):
    lam = cfg.alpha * cfg.alpha * (n + cfg.kappa) - n
    gamma = math.sqrt(n + lam)
    wm = np.full(2 * n + 1, 0.5 / (n + lam))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + (1.0 - cfg.alpha * cfg.alpha + cfg.beta)
    return gamma, wm, wc


def _measure(kind: str, pts: np.ndarray) -> np.ndarray:
    """Map sigma points [..., 6] to predicted measurements."""
    v, a, omega = pts[..., 2], pts[..., 3], pts[..., 5]
    if kind == "imu_accel":
        return np.stack([a, v * omega], axis=-1)
    if kind == "gyro":
        return omega[..., None]
    if kind == "wheel_speed":
        return v[..., None]
    if kind == "gnss_position":
        return np.stack([pts[..., 0], pts[..., 1]], axis=-1)
    raise ConfigError(f"no measurement model for kind {kind!r}")


def ukf_fuse(
    measurements: list,
    config: UkfConfig = UkfConfig(),
    initial: NavState = NavState(),
    slow_times: np.ndarray | None = None,
):
    """Fuse time-sorted sensor measurements into a trajectory estimate.

    Runs an unscented Kalman filter (scaled unscented transform, CTRA
    process model, additive noise) through the measurement stream, then
    resamples the filtered states onto ``slow_times`` by closed-form
    propagation from the latest preceding update. Steering-angle readings
    are folded in as turn-rate pseudo-measurements omega = v tan(delta)/L
    using the predicted speed.

    Returns
    -------
    (Trajectory, ndarray)
        Estimated poses and per-pose position covariance rows
        (cov_xx, cov_xy, cov_yy).
    """
    if not measurements:
        raise ConfigError("measurement list is empty")
    taus = [m.tau for m in measurements]
    if any(b < a for a, b in zip(taus, taus[1:])):
        raise ConfigError("measurements must be sorted by tau")
    if slow_times is None:
        n_out = int(math.floor(taus[-1] * 990.0 + 0.5)) + 1
        slow_times = np.arange(n_out) / 990.0
    slow_times = np.asarray(slow_times, dtype=float)
    if slow_times.size == 0:
        raise ConfigError("slow_times is empty")
    if float(slow_times[0]) < taus[0] - 1e-9:
        raise ConfigError("slow_times start before the first measurement")

    n = 6
    gamma, wm, wc = _ut_weights(n, config)
    q_diag = np.asarray(config.process_noise, dtype=float)
    mean = initial.as_array()
    cov = np.diag(np.asarray(config.initial_covariance, dtype=float))
    t_filt = taus[0]

    hist_tau: list[float] = []
    hist_mean: list[np.ndarray] = []
    hist_cov: list[np.ndarray] = []

    def record() -> None:
        if hist_tau and math.isclose(hist_tau[-1], t_filt, abs_tol=1e-12):
            hist_mean[-1] = mean
            hist_cov[-1] = cov
        else:
            hist_tau.append(t_filt)
            hist_mean.append(mean)
            hist_cov.append(cov)

    record()
    for meas in measurements:
        dt = meas.tau - t_filt
        if dt > 0.0:
            pts = _ctra_array(_sigma_points(mean, cov, gamma), dt)
            mean = wm @ pts
            diff = pts - mean
            cov = (wc[:, None] * diff).T @ diff + np.diag(q_diag * dt)
            t_filt = meas.tau

        if meas.kind == "steering_angle":
            v_prior = max(abs(mean[2]), _SPEED_FLOOR)
            delta = meas.value[0]
            z = np.array([v_prior * math.tan(delta) / config.wheelbase])
            d_dd = v_prior / (config.wheelbase * math.cos(delta) ** 2)
            r_diag = np.array([(d_dd * meas.std) ** 2])
            kind = "gyro"
        else:
            z = np.asarray(meas.value, dtype=float)
            r_diag = np.full(z.size, meas.std**2)
            kind = meas.kind
        if np.all(r_diag == 0.0):
            r_diag = np.full(z.size, 1e-12)

        pts = _sigma_points(mean, cov, gamma)
        zp = _measure(kind, pts)
        z_mean = wm @ zp
        dz = zp - z_mean
        dx = pts - mean
        s_mat = (wc[:, None] * dz).T @ dz + np.diag(r_diag)
        c_mat = (wc[:, None] * dx).T @ dz
        try:
            gain = np.linalg.solve(s_mat.T, c_mat.T).T
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular innovation covariance") from exc
        mean = mean + gain @ (z - z_mean)
        cov = cov - gain @ s_mat @ gain.T
        record()

    traj, pos_cov = _resample(
        np.array(hist_tau), np.stack(hist_mean), np.stack(hist_cov),
        slow_times, q_diag, gamma, wm, wc,
    )
    return traj, pos_cov


def _resample(hist_tau, hist_mean, hist_cov, slow_times, q_diag, gamma, wm, wc):
    """Propagate filtered states onto the output slow-time grid."""
    idx = np.searchsorted(hist_tau, slow_times + 1e-12, side="right") - 1
    idx = np.clip(idx, 0, hist_tau.size - 1)
    dt = np.maximum(slow_times - hist_tau[idx], 0.0)

    base_cov = hist_cov[idx]
    try:
        root = np.linalg.cholesky(base_cov)
    except np.linalg.LinAlgError:
        root = np.empty_like(base_cov)
        for i in range(base_cov.shape[0]):
            root[i] = _sigma_points(
                np.zeros(6), base_cov[i], 1.0
            )[1:7].T  # repaired Cholesky columns
    spread = gamma * np.swapaxes(root, -1, -2)
    pts = np.concatenate(
        [
            hist_mean[idx][:, None, :],
            hist_mean[idx][:, None, :] + spread,
            hist_mean[idx][:, None, :] - spread,
        ],
        axis=1,
    )
    prop = _ctra_array(pts, dt[:, None])
    mean = np.einsum("s,nsk->nk", wm, prop)
    diff = prop - mean[:, None, :]
    cov = np.einsum("s,nsi,nsj->nij", wc, diff, diff)
    cov += dt[:, None, None] * np.diag(q_diag)[None, :, :]

    traj = Trajectory(
        tau=slow_times,
        x=mean[:, 0],
        y=mean[:, 1],
        heading=wrap_angle(mean[:, 4]),
        speed=np.maximum(mean[:, 2], 0.0),
    )
    pos_cov = np.stack([cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 1]], axis=1)
    return traj, pos_cov


def write_measurements_csv(path, measurements: list) -> None:
    """Write measurements as CSV rows tau,kind,value1,value2,std."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MEASUREMENT_HEADER)
        for m in measurements:
            v2 = repr(m.value[1]) if len(m.value) > 1 else ""
            writer.writerow([repr(m.tau), m.kind, repr(m.value[0]), v2, repr(m.std)])


def read_measurements_csv(path) -> list:
    """Read measurements written by `write_measurements_csv`."""
    out: list[SensorMeasurement] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MEASUREMENT_HEADER:
            raise ConfigError(
                f"bad measurement CSV header {header!r} in {path}"
            )
        for row in reader:
            if not row:
                continue
            tau, kind, v1, v2, std = row
            value = (float(v1),) if v2 == "" else (float(v1), float(v2))
            out.append(
                SensorMeasurement(
                    tau=float(tau), kind=kind, value=value, std=float(std)
                )
            )
    return out
