"""Multi-beam FMCW SAR simulation and time-domain focusing.

Synthesizes dechirped FMCW radar echoes from 2D urban scenes along vehicle
trajectories, recovers the trajectory from simulated navigation sensors with
an unscented Kalman filter, and focuses multi-beam SAR images with a parallel
time-domain back-projection kernel using a Gaussian angular spatial filter.
"""

from .errors import ConfigError, NumericalError
from .scene import (
    CtraSegment,
    PlatformPose,
    RadarMount,
    Scatterer,
    Scene,
    Trajectory,
    generate_trajectory,
    radar_phase_center,
    scattering_gain,
    wrap_angle,
)
from .signal import (
    SPEED_OF_LIGHT,
    FmcwParams,
    RangeCompressedMatrix,
    aperture_sampling_check,
    range_compress,
    rc_model,
    synthesize_dechirped,
)
from .navigation import (
    NavState,
    SensorMeasurement,
    SensorNoise,
    SensorRates,
    UkfConfig,
    ctra_predict,
    simulate_sensors,
    ukf_fuse,
)
from .focus import (
    Beam,
    FocusedImage,
    ImageGrid,
    backproject,
    beamwidth_for_resolution,
    look_angle,
    multi_beam_focus,
    spatial_filter,
    two_way_delay,
)
from .imaging import RgbComposite, magnitude_db, rgb_compose

__version__ = "0.1.0"

__all__ = [
    "Beam",
    "ConfigError",
    "CtraSegment",
    "FmcwParams",
    "FocusedImage",
    "ImageGrid",
    "NavState",
    "NumericalError",
    "PlatformPose",
    "RadarMount",
    "RangeCompressedMatrix",
    "RgbComposite",
    "Scatterer",
    "Scene",
    "SensorMeasurement",
    "SensorNoise",
    "SensorRates",
    "SPEED_OF_LIGHT",
    "Trajectory",
    "UkfConfig",
    "aperture_sampling_check",
    "backproject",
    "beamwidth_for_resolution",
    "ctra_predict",
    "generate_trajectory",
    "look_angle",
    "magnitude_db",
    "multi_beam_focus",
    "radar_phase_center",
    "range_compress",
    "rc_model",
    "rgb_compose",
    "scattering_gain",
    "simulate_sensors",
    "spatial_filter",
    "synthesize_dechirped",
    "two_way_delay",
    "ukf_fuse",
    "wrap_angle",
]
