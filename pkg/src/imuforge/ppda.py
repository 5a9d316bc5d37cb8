"""Parameter-space augmentations: transform the motion model, then re-simulate.

Instead of editing sensor signals, these transforms edit the model that
generates them: joint rotation amplitudes, playback speed, sensor
placement and hardware noise/bias. Re-synthesizing after the edit keeps
the output physically consistent; in particular the gravity component
of the accelerometer is never scaled, and angular rate and acceleration
co-vary correctly with movement speed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import quat, rng
from .kinematics import (
    HardwareProfile,
    MotionSequence,
    PlacementMap,
    SensorHardware,
    SensorPlacement,
    SensorTrace,
    Skeleton,
    synthesize_imu,
)
from .stda import WarpCurve, make_magnitude_curve

logger = logging.getLogger(__name__)


@dataclass
class MotionBundle:
    """The full parameter set for one subject/session."""

    body: Skeleton
    dynamics: MotionSequence
    placement: PlacementMap
    hardware: HardwareProfile
    subject_id: str = ""

    def __post_init__(self):
        if self.dynamics.num_joints != len(self.body):
            raise ValueError(
                f"dynamics has {self.dynamics.num_joints} joints, "
                f"skeleton has {len(self.body)}"
            )
        for sensor in self.placement.sensors:
            if not 0 <= sensor.joint < len(self.body):
                raise ValueError(
                    f"sensor {sensor.sensor_id!r} references joint index {sensor.joint}, "
                    f"skeleton has {len(self.body)} joints"
                )
            self.hardware.for_sensor(sensor.sensor_id)

    @property
    def num_samples(self) -> int:
        return self.dynamics.num_samples

    def restrict(self, start: int, size: int) -> "MotionBundle":
        """Copy of the bundle limited to samples [start, start + size)."""
        return replace(self, dynamics=self.dynamics.slice(start, start + size))

    def synthesize(self, seed: int) -> list[SensorTrace]:
        return synthesize_imu(self.body, self.dynamics, self.placement, self.hardware, seed)


def _scale_angles(
    dyn: MotionSequence, factors: np.ndarray, joint_mask: set[int] | None
) -> MotionSequence:
    """Scale per-sample rotation angles by factors (scalar or length T)."""
    theta, axis = quat.axis_angle(dyn.joint_orient)
    scaled = theta * np.asarray(factors, dtype=float).reshape(-1, 1)
    clipped = np.clip(scaled, 0.0, np.pi)
    overflow = int(np.count_nonzero(scaled != clipped))
    if overflow:
        logger.warning("amplitude scaling clamped %d joint angles to [0, pi]", overflow)
    orient = quat.from_axis_angle(clipped, axis)
    if joint_mask is not None:
        untouched = np.ones(dyn.num_joints, dtype=bool)
        untouched[list(joint_mask)] = False
        orient[:, untouched] = dyn.joint_orient[:, untouched]
    return replace(dyn, joint_orient=orient)


def amplitude_scale(
    dyn: MotionSequence,
    sigma: float,
    seed: int,
    joint_mask: set[int] | None = None,
    alpha: float | None = None,
) -> MotionSequence:
    """Scale every joint rotation angle by one factor alpha ~ N(1, sigma^2).

    Rotation axes and root translation are untouched; scaled angles are
    clamped to [0, pi]. alpha equal to 1 returns the input unchanged.
    """
    if alpha is None:
        alpha = rng.stream(seed, "amplitude-scale").normal(1.0, sigma)
    if alpha == 1.0:
        return replace(dyn)
    return _scale_angles(dyn, np.full(dyn.num_samples, alpha), joint_mask)


def amplitude_warp(
    dyn: MotionSequence,
    sigma: float,
    knots: int,
    seed: int,
    joint_mask: set[int] | None = None,
    curve: WarpCurve | None = None,
) -> MotionSequence:
    """Scale joint rotation angles by a smooth time-varying factor.

    One curve (shared by all joints) is drawn as in magnitude warping;
    a constant curve of c is identical to amplitude_scale(alpha=c).
    """
    if curve is None:
        curve = make_magnitude_curve(dyn.num_samples, sigma, knots, seed)
    if len(curve) != dyn.num_samples:
        raise ValueError("curve length does not match motion length")
    if np.all(curve.values == 1.0):
        return replace(dyn)
    return _scale_angles(dyn, curve.values, joint_mask)


def speed_resample(dyn: MotionSequence, warp: float | WarpCurve) -> MotionSequence:
    """Replay the motion at a different speed, keeping the window length.

    ``warp`` is either a uniform factor beta > 0 (source index t * beta,
    clamped to the end, so beta < 1 holds the tail) or a time-mode
    WarpCurve of the same length. Orientations are slerped between
    neighboring samples; root translation is interpolated linearly.
    """
    T = dyn.num_samples
    if isinstance(warp, WarpCurve):
        if warp.mode != "time":
            raise ValueError("speed_resample needs a time-mode curve")
        if len(warp) != T:
            raise ValueError("curve length does not match motion length")
        src = warp.values
    else:
        beta = float(warp)
        if beta <= 0:
            raise ValueError("beta must be positive")
        if beta == 1.0:
            return replace(dyn)
        src = np.arange(T, dtype=float) * beta
    s = np.clip(src, 0.0, T - 1.0)
    i0 = np.floor(s).astype(int)
    i1 = np.minimum(i0 + 1, T - 1)
    frac = s - i0

    orient = quat.slerp(dyn.joint_orient[i0], dyn.joint_orient[i1], frac[:, None])
    root = dyn.root_translation[i0] * (1.0 - frac[:, None]) + dyn.root_translation[i1] * frac[
        :, None
    ]
    return replace(dyn, joint_orient=orient, root_translation=root)


_AXIS_VECTORS = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}


def placement_perturb(
    placement: PlacementMap,
    orient_range_deg: float | tuple[float, float, float],
    seed: int,
    axial_range_deg: float | None = None,
    flip_axes: set[str] | None = None,
    flip_prob: float = 0.5,
) -> PlacementMap:
    """Randomly re-orient each sensor within bounded mounting tolerances.

    Per sensor and per axis, an offset angle is drawn once from
    U[-range, range] and composed (intrinsic z-y-x) onto the sensor
    orientation in its own frame. Optionally adds a larger rotation
    about the sensor x axis from U[-axial_range, axial_range], and
    discrete 180-degree flips about each axis in ``flip_axes`` (each
    flipped independently with probability ``flip_prob``). Positions
    are unchanged.
    """
    ranges = np.broadcast_to(np.deg2rad(np.asarray(orient_range_deg, dtype=float)), (3,))
    if np.any(ranges < 0):
        raise ValueError("orientation ranges must be >= 0")
    if axial_range_deg is not None and axial_range_deg < 0:
        raise ValueError("axial_range_deg must be >= 0")
    out = []
    for sensor in placement.sensors:
        gen = rng.stream(seed, "placement", sensor.sensor_id)
        az, ay, ax = gen.uniform(-ranges, ranges)
        offset = quat.from_euler_zyx(az, ay, ax)
        orientation = quat.multiply(sensor.orientation, offset)
        if axial_range_deg is not None:
            lim = np.deg2rad(axial_range_deg)
            orientation = quat.multiply(
                orientation, quat.from_axis_angle(gen.uniform(-lim, lim), _AXIS_VECTORS["x"])
            )
        if flip_axes:
            for axis_name in sorted(flip_axes):
                if axis_name not in _AXIS_VECTORS:
                    raise ValueError(f"unknown flip axis {axis_name!r}")
                if gen.uniform() < flip_prob:
                    orientation = quat.multiply(
                        orientation, quat.from_axis_angle(np.pi, _AXIS_VECTORS[axis_name])
                    )
        out.append(replace(sensor, orientation=quat.normalize(orientation)))
    return PlacementMap(out)


def placement_swap(bundle_a: MotionBundle, bundle_b: MotionBundle) -> MotionBundle:
    """Bundle A with bundle B's sensor placements, matched by joint name.

    Raises if any of B's sensors sits on a joint A's skeleton does not
    have; the error lists every unmatched sensor.
    """
    names_a = bundle_a.body.names
    names_b = bundle_b.body.names
    unmatched = [
        s.sensor_id for s in bundle_b.placement.sensors if names_b[s.joint] not in names_a
    ]
    if unmatched:
        raise ValueError(
            "placement swap failed, no matching joint for sensors: " + ", ".join(unmatched)
        )
    swapped = [
        replace(s, joint=bundle_a.body.index_of(names_b[s.joint]))
        for s in bundle_b.placement.sensors
    ]
    return replace(bundle_a, placement=PlacementMap(swapped))


def hardware_perturb(
    hardware: HardwareProfile, sigma_choice: float, bias_range: float, seed: int
) -> HardwareProfile:
    """Set a common noise level and redraw per-axis constant biases.

    ``sigma_choice`` is written to all axes of both modalities; biases
    are drawn once per sensor, modality and axis from
    U[-bias_range, bias_range].
    """
    if sigma_choice < 0 or bias_range < 0:
        raise ValueError("sigma_choice and bias_range must be >= 0")
    sensors = {}
    for sensor_id in hardware.sensors:
        gen = rng.stream(seed, "hardware", sensor_id)
        sigma = np.full(3, float(sigma_choice))
        sensors[sensor_id] = SensorHardware(
            accel_sigma=sigma.copy(),
            accel_bias=gen.uniform(-bias_range, bias_range, 3),
            gyro_sigma=sigma.copy(),
            gyro_bias=gen.uniform(-bias_range, bias_range, 3),
        )
    return HardwareProfile(sensors)
