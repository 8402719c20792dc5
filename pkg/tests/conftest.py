"""Shared fixtures and measurement helpers for the test suite."""

import math

import numpy as np
import pytest

from mbsar.scene import (
    CtraSegment,
    Isotropic,
    PlatformPose,
    RadarMount,
    Scatterer,
    Scene,
    generate_trajectory,
)
from mbsar.signal import FmcwParams


@pytest.fixture
def params():
    return FmcwParams()


@pytest.fixture
def small_params():
    """Short-range parameter set for fast unit tests."""
    return FmcwParams(max_range=6.0, fast_time_samples=256)


@pytest.fixture
def broadside_mount():
    return RadarMount(squint=math.pi / 2, fov=math.radians(120.0),
                      lever_arm=(0.0, 0.0))


def straight_traj(duration, speed, prf=990.0, start=(0.0, 0.0),
                  heading=math.pi / 2):
    segs = (CtraSegment(duration=duration, speed=speed, accel=0.0,
                        turn_rate=0.0),)
    pose = PlatformPose(tau=0.0, position=start, heading=heading, speed=speed)
    return generate_trajectory(segs, prf, pose)


def point_scene(position, amplitude=1.0, margin=2.0):
    x, y = position
    return Scene(
        scatterers=(Scatterer(position=position, amplitude=amplitude,
                              pattern=Isotropic()),),
        extent=(x - margin, y - margin, x + margin, y + margin),
    )


def width_3db(profile, spacing):
    """-3 dB width of a peaked magnitude profile by linear interpolation."""
    prof = np.asarray(profile, dtype=float)
    pk = int(prof.argmax())
    half = prof[pk] / math.sqrt(2.0)
    i = pk
    while prof[i] > half:
        i -= 1
        if i < 0:
            raise ValueError("peak not resolved on the low side")
    lo = i + (half - prof[i]) / (prof[i + 1] - prof[i])
    i = pk
    while prof[i] > half:
        i += 1
        if i >= prof.size:
            raise ValueError("peak not resolved on the high side")
    hi = i - 1 + (prof[i - 1] - half) / (prof[i - 1] - prof[i])
    return (hi - lo) * spacing
