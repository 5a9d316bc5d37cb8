"""imuforge: virtual 6-axis IMU synthesis and augmentation.

Simulates accelerometer and gyroscope traces from a parametric human
motion model (skeleton, joint orientations over time, sensor placement,
hardware noise/bias), and generates augmented training mini-batches via
parameter-space transforms (re-simulated, physically consistent) or
classic signal-space transforms, orchestrated by a probabilistic
sub-policy sampler with adaptive weights.
"""

__version__ = "0.1.0"

from .kinematics import (  # noqa: F401
    GRAVITY,
    HardwareProfile,
    Joint,
    MotionSequence,
    PlacementMap,
    SensorHardware,
    SensorPlacement,
    SensorTrace,
    Skeleton,
    forward_kinematics,
    forward_kinematics_sequence,
    stack_traces,
    synthesize_imu,
)
from .ppda import (  # noqa: F401
    MotionBundle,
    amplitude_scale,
    amplitude_warp,
    hardware_perturb,
    placement_perturb,
    placement_swap,
    speed_resample,
)
from .stda import (  # noqa: F401
    SignalWindow,
    WarpCurve,
    jitter,
    magnitude_scale,
    magnitude_warp,
    make_magnitude_curve,
    make_time_warp,
    rotate,
    time_scale,
    time_warp,
)
