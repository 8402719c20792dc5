"""World model: angles, scatterers, CTRA trajectories, CSV round-trips."""

import math

import numpy as np
import pytest

from mbsar.errors import ConfigError
from mbsar.scene import (
    SMALL_TURN_THRESHOLD,
    CtraSegment,
    Isotropic,
    PlatformPose,
    RadarMount,
    Scatterer,
    Scene,
    Specular,
    Trajectory,
    ctra_displacement,
    generate_trajectory,
    phase_center_arrays,
    radar_phase_center,
    read_trajectory_csv,
    scattering_gain,
    slow_time_grid,
    specular_row,
    wrap_angle,
    write_trajectory_csv,
)


class TestWrapAngle:
    def test_identity_inside_range(self):
        assert wrap_angle(0.1) == pytest.approx(0.1, abs=0.0)
        assert wrap_angle(-3.0) == pytest.approx(-3.0, abs=0.0)

    def test_half_open_interval(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)

    def test_periodicity_property(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-20.0, 20.0, size=500)
        k = rng.integers(-3, 4, size=500)
        w = wrap_angle(x)
        assert np.all(w > -math.pi) and np.all(w <= math.pi)
        assert np.allclose(wrap_angle(x + 2.0 * math.pi * k), w, atol=1e-9)


class TestScatterers:
    def test_isotropic_gain_is_unity(self):
        s = Scatterer(position=(1.0, 2.0), amplitude=1.0, pattern=Isotropic())
        assert scattering_gain(s, 0.3) == 1.0
        assert scattering_gain(s, -2.9) == 1.0

    def test_specular_gain_values(self):
        pat = Specular(normal=0.5, beamwidth=0.2)
        s = Scatterer(position=(0.0, 0.0), amplitude=1.0, pattern=pat)
        assert scattering_gain(s, 0.5) == pytest.approx(1.0)
        assert scattering_gain(s, 0.7) == pytest.approx(math.exp(-4.0))
        assert scattering_gain(s, 0.6) == pytest.approx(math.exp(-1.0))

    def test_specular_gain_wraps_across_pi(self):
        pat = Specular(normal=math.pi - 0.05, beamwidth=0.2)
        s = Scatterer(position=(0.0, 0.0), amplitude=1.0, pattern=pat)
        # viewing angle just across the branch cut: offset is 0.1, not ~2 pi
        assert scattering_gain(s, -math.pi + 0.05) == pytest.approx(
            math.exp(-4.0 * (0.1 / 0.2) ** 2)
        )

    def test_zero_amplitude_rejected(self):
        with pytest.raises(ConfigError):
            Scatterer(position=(0.0, 0.0), amplitude=0.0, pattern=Isotropic())

    def test_specular_row_spacing_and_endpoints(self):
        row = specular_row(start=(0.0, 0.0), end=(1.0, 0.0), spacing=0.25,
                           amplitude=1.0, normal=math.pi / 2, beamwidth=0.1)
        xs = [s.position[0] for s in row]
        assert len(row) == 5
        assert xs[0] == 0.0 and xs[-1] == 1.0
        assert np.allclose(np.diff(xs), 0.25)

    def test_specular_row_minimum_two_points(self):
        row = specular_row(start=(0.0, 0.0), end=(0.1, 0.0), spacing=5.0,
                           amplitude=1.0, normal=0.0, beamwidth=0.1)
        assert len(row) == 2

    def test_scene_extent_containment(self):
        inside = Scatterer(position=(0.5, 0.5), amplitude=1.0,
                           pattern=Isotropic())
        with pytest.raises(ConfigError):
            Scene(scatterers=(inside,), extent=(1.0, 1.0, 2.0, 2.0))


class TestCtraDisplacement:
    def test_straight_constant_speed(self):
        dx, dy, dpsi, dv = ctra_displacement(2.0, 0.0, 0.0, 0.0, 3.0)
        assert (dx, dy, dpsi, dv) == (6.0, 0.0, 0.0, 0.0)

    def test_straight_accelerating(self):
        dx, dy, _, dv = ctra_displacement(1.0, 0.5, math.pi / 2, 0.0, 2.0)
        assert dx == pytest.approx(0.0, abs=1e-12)
        assert dy == pytest.approx(1.0 * 2.0 + 0.25 * 4.0)
        assert dv == pytest.approx(1.0)

    def test_pure_turn_closed_circle(self):
        v, omega = 3.0, 0.4
        dt = 2.0 * math.pi / omega
        dx, dy, dpsi, _ = ctra_displacement(v, 0.0, 0.7, omega, dt)
        assert abs(dx) < 1e-9 and abs(dy) < 1e-9
        assert dpsi == pytest.approx(2.0 * math.pi)

    def test_chord_length_on_arc(self):
        v, omega, dt = 2.0, 0.5, 1.3
        dx, dy, _, _ = ctra_displacement(v, 0.0, 0.2, omega, dt)
        chord = 2.0 * (v / omega) * math.sin(0.5 * omega * dt)
        assert math.hypot(dx, dy) == pytest.approx(chord, rel=1e-12)

    def test_small_turn_rates_match_quadrature(self):
        from scipy.integrate import quad

        v0, a, psi0, dt = 3.0, 0.4, 0.9, 2.0
        edge = SMALL_TURN_THRESHOLD / dt
        # spans both branches, including rates where the closed form's
        # 1/omega^2 term would cancel catastrophically
        for omega in (0.0, 1e-10, 3e-6, 0.5 * edge, 0.999 * edge,
                      1.001 * edge, 2.0 * edge, 0.05):
            dx, dy, _, _ = ctra_displacement(v0, a, psi0, omega, dt)
            ref_x = quad(lambda t: (v0 + a * t) * math.cos(psi0 + omega * t),
                         0.0, dt)[0]
            ref_y = quad(lambda t: (v0 + a * t) * math.sin(psi0 + omega * t),
                         0.0, dt)[0]
            assert dx == pytest.approx(ref_x, abs=1e-8), f"omega={omega}"
            assert dy == pytest.approx(ref_y, abs=1e-8), f"omega={omega}"

    def test_vectorized_matches_scalar(self):
        omegas = np.array([0.0, 1e-15, 0.3, -0.4])
        dx, dy, dpsi, dv = ctra_displacement(2.0, 0.1, 0.5, omegas, 1.7)
        for i, w in enumerate(omegas):
            sx, sy, spsi, sv = ctra_displacement(2.0, 0.1, 0.5, float(w), 1.7)
            assert dx[i] == pytest.approx(sx, abs=0.0)
            assert dy[i] == pytest.approx(sy, abs=0.0)


class TestTrajectoryGeneration:
    def test_pose_count_and_grid(self):
        grid = slow_time_grid(10.0, 990.0)
        assert grid.size == 9900
        assert grid[0] == 0.0
        assert grid[1] == pytest.approx(1.0 / 990.0)

    def test_straight_segment_path_length(self):
        segs = (CtraSegment(duration=10.0, speed=5.556, accel=0.0,
                            turn_rate=0.0),)
        start = PlatformPose(0.0, (0.0, 0.0), math.pi / 2, 5.556)
        traj = generate_trajectory(segs, 990.0, start)
        assert len(traj) == 9900
        # last pose sits one pulse interval before the 10 s mark
        assert traj.y[-1] == pytest.approx(5.556 * 9899 / 990.0, rel=1e-12)
        assert np.allclose(traj.x, 0.0, atol=1e-12)

    def test_segment_chaining_continuity(self):
        segs = (
            CtraSegment(duration=1.0, speed=2.0, accel=1.0, turn_rate=0.2),
            CtraSegment(duration=1.0, speed=3.0, accel=0.0, turn_rate=-0.2),
        )
        start = PlatformPose(0.0, (1.0, -1.0), 0.1, 2.0)
        traj = generate_trajectory(segs, 500.0, start)
        assert len(traj) == 1000
        # speed is continuous across the boundary: v(1s) = 2 + 1*1 = 3
        k = 500
        assert traj.speed[k] == pytest.approx(3.0, rel=1e-9)
        # position never jumps by more than one pulse of travel
        step = np.hypot(np.diff(traj.x), np.diff(traj.y))
        assert step.max() < 3.5 / 500.0 + 1e-9

    def test_heading_stays_wrapped(self):
        segs = (CtraSegment(duration=20.0, speed=2.0, accel=0.0,
                            turn_rate=0.8),)
        traj = generate_trajectory(segs, 100.0,
                                   PlatformPose(0.0, (0.0, 0.0), 3.0, 2.0))
        assert np.all(traj.heading > -math.pi)
        assert np.all(traj.heading <= math.pi)

    def test_segment_validation(self):
        with pytest.raises(ConfigError):
            CtraSegment(duration=0.0, speed=1.0, accel=0.0, turn_rate=0.0)
        with pytest.raises(ConfigError):
            CtraSegment(duration=1.0, speed=-1.0, accel=0.0, turn_rate=0.0)
        with pytest.raises(ConfigError):
            CtraSegment(duration=2.0, speed=1.0, accel=-1.0, turn_rate=0.0)

    def test_trajectory_validation(self):
        tau = np.array([0.0, 0.0, 1.0])
        ones = np.ones(3)
        with pytest.raises(ConfigError):
            Trajectory(tau=tau, x=ones, y=ones, heading=ones, speed=ones)
        with pytest.raises(ConfigError):
            Trajectory(tau=np.arange(3.0), x=ones, y=ones, heading=ones,
                       speed=-ones)


class TestMountGeometry:
    def test_side_follows_squint_sign(self):
        left = RadarMount(squint=math.radians(60.0), fov=1.0)
        right = RadarMount(squint=math.radians(-90.0), fov=1.0)
        assert left.side == 1
        assert right.side == -1

    def test_phase_center_lever_arm_rotation(self):
        mount = RadarMount(squint=math.pi / 2, fov=1.0, lever_arm=(2.0, 0.5))
        pose = PlatformPose(0.0, (10.0, 20.0), math.pi / 2, 1.0)
        pc = radar_phase_center(pose, mount)
        # heading +y: forward lever 2 goes to +y, lateral 0.5 to -x... left
        assert pc.position[0] == pytest.approx(10.0 - 0.5)
        assert pc.position[1] == pytest.approx(20.0 + 2.0)
        assert pc.boresight == pytest.approx(math.pi)

    def test_phase_center_arrays_match_scalar(self):
        segs = (CtraSegment(duration=1.0, speed=3.0, accel=0.5,
                            turn_rate=0.3),)
        traj = generate_trajectory(segs, 100.0,
                                   PlatformPose(0.0, (0.0, 0.0), 0.2, 3.0))
        mount = RadarMount(squint=math.radians(60.0), fov=1.0,
                           lever_arm=(1.5, -0.2))
        px, py, bore = phase_center_arrays(traj, mount)
        for i in (0, 17, 99):
            pc = radar_phase_center(traj.pose(i), mount)
            assert px[i] == pytest.approx(pc.position[0], abs=0.0)
            assert py[i] == pytest.approx(pc.position[1], abs=0.0)

    def test_fov_validation(self):
        with pytest.raises(ConfigError):
            RadarMount(squint=0.0, fov=0.0)
        with pytest.raises(ConfigError):
            RadarMount(squint=0.0, fov=7.0)


class TestTrajectoryCsv:
    def test_round_trip_exact(self, tmp_path):
        segs = (CtraSegment(duration=0.5, speed=2.0, accel=0.3,
                            turn_rate=-0.4),)
        traj = generate_trajectory(segs, 990.0,
                                   PlatformPose(0.0, (1.0, 2.0), 0.7, 2.0))
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, traj)
        back, cov = read_trajectory_csv(path)
        assert cov is None
        for field in ("tau", "x", "y", "heading", "speed"):
            assert np.array_equal(getattr(back, field), getattr(traj, field))

    def test_round_trip_with_covariance(self, tmp_path):
        segs = (CtraSegment(duration=0.1, speed=1.0, accel=0.0,
                            turn_rate=0.0),)
        traj = generate_trajectory(segs, 990.0,
                                   PlatformPose(0.0, (0.0, 0.0), 0.0, 1.0))
        cov = np.random.default_rng(1).uniform(0.0, 1.0, size=(len(traj), 3))
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, traj, covariance=cov)
        back, cov_back = read_trajectory_csv(path)
        assert np.array_equal(cov_back, cov)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ConfigError):
            read_trajectory_csv(path)
