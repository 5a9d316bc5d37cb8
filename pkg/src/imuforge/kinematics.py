"""Skeleton forward kinematics and virtual 6-axis IMU synthesis.

A motion model is described by four parameter groups: a skeleton (bone
topology and offsets), a motion sequence (per-joint orientation
quaternions plus root translation over time), a placement map (sensor
pose relative to a joint) and a hardware profile (per-axis noise sigma
and constant bias for each sensor's accelerometer and gyroscope).

Synthesis computes, per sensor, the world trajectory of the sensor
frame and differentiates it to produce what a strapped-down IMU would
measure: body-frame angular rate, and specific force (linear
acceleration minus gravity) expressed in the sensor frame, so a sensor
at rest reads +1 g on its up axis.

Units: meters, seconds, radians; accelerometer in m/s^2, gyroscope in
rad/s. World frame is right-handed with z up.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import quat, rng

GRAVITY = 9.80665
GRAVITY_WORLD = np.array([0.0, 0.0, -GRAVITY])

ROOT = -1


@dataclass
class Joint:
    name: str
    parent: int  # index of parent joint, ROOT (-1) for the root
    offset: np.ndarray  # (3,) bone offset from parent, parent rest frame, meters

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=float)
        if self.offset.shape != (3,) or not np.all(np.isfinite(self.offset)):
            raise ValueError(f"joint {self.name!r}: offset must be a finite 3-vector")


@dataclass
class Skeleton:
    joints: list[Joint]

    def __post_init__(self):
        if not self.joints:
            raise ValueError("skeleton has no joints")
        roots = [i for i, j in enumerate(self.joints) if j.parent == ROOT]
        if roots != [0]:
            raise ValueError("skeleton must have exactly one root at index 0")
        for i, j in enumerate(self.joints[1:], start=1):
            if not 0 <= j.parent < i:
                raise ValueError(
                    f"joint {j.name!r} at index {i}: parent index {j.parent} must precede it"
                )
        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise ValueError("joint names must be unique")

    def __len__(self) -> int:
        return len(self.joints)

    @property
    def names(self) -> list[str]:
        return [j.name for j in self.joints]

    def index_of(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(f"no joint named {name!r}")


@dataclass
class MotionSequence:
    """Joint orientations (relative to parent) and root translation over time."""

    sample_rate_hz: float
    root_translation: np.ndarray  # (T, 3) meters
    joint_orient: np.ndarray  # (T, J, 4) unit quaternions, scalar-first

    def __post_init__(self):
        self.root_translation = np.asarray(self.root_translation, dtype=float)
        self.joint_orient = np.asarray(self.joint_orient, dtype=float)
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.root_translation.ndim != 2 or self.root_translation.shape[1] != 3:
            raise ValueError("root_translation must have shape (T, 3)")
        if self.joint_orient.ndim != 3 or self.joint_orient.shape[2] != 4:
            raise ValueError("joint_orient must have shape (T, J, 4)")
        if self.joint_orient.shape[0] != self.root_translation.shape[0]:
            raise ValueError("root_translation and joint_orient disagree on T")
        if self.num_samples < 3:
            raise ValueError("motion needs at least 3 samples for differentiation")
        if not np.all(np.isfinite(self.root_translation)):
            raise ValueError("root_translation contains non-finite values")
        quat.require_unit(self.joint_orient, "joint_orient")

    @property
    def num_samples(self) -> int:
        return self.joint_orient.shape[0]

    @property
    def num_joints(self) -> int:
        return self.joint_orient.shape[1]

    def canonicalized(self) -> "MotionSequence":
        """Copy with quaternion signs hemisphere-aligned along time."""
        return replace(self, joint_orient=quat.hemisphere_align(self.joint_orient))

    def slice(self, start: int, stop: int) -> "MotionSequence":
        if not (0 <= start < stop <= self.num_samples):
            raise IndexError(f"slice [{start}:{stop}) out of range for T={self.num_samples}")
        return replace(
            self,
            root_translation=self.root_translation[start:stop].copy(),
            joint_orient=self.joint_orient[start:stop].copy(),
        )


@dataclass
class SensorPlacement:
    sensor_id: str
    joint: int
    position: np.ndarray  # (3,) offset from joint, joint frame, meters
    orientation: np.ndarray  # (4,) sensor frame relative to joint frame

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if self.position.shape != (3,) or not np.all(np.isfinite(self.position)):
            raise ValueError(f"sensor {self.sensor_id!r}: position must be a finite 3-vector")
        self.orientation = quat.require_unit(
            np.asarray(self.orientation, dtype=float), f"sensor {self.sensor_id!r} orientation"
        )


@dataclass
class PlacementMap:
    sensors: list[SensorPlacement]

    def __post_init__(self):
        ids = [s.sensor_id for s in self.sensors]
        if len(set(ids)) != len(ids):
            raise ValueError("sensor ids must be unique")

    def __len__(self) -> int:
        return len(self.sensors)

    @property
    def sensor_ids(self) -> list[str]:
        return [s.sensor_id for s in self.sensors]


@dataclass
class SensorHardware:
    """Per-axis noise sigma and constant bias for one sensor's two modalities."""

    accel_sigma: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_sigma: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("accel_sigma", "accel_bias", "gyro_sigma", "gyro_bias"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be a finite 3-vector")
            setattr(self, name, v)
        if np.any(self.accel_sigma < 0) or np.any(self.gyro_sigma < 0):
            raise ValueError("noise sigma must be componentwise >= 0")


@dataclass
class HardwareProfile:
    sensors: dict[str, SensorHardware]

    @classmethod
    def silent(cls, sensor_ids) -> "HardwareProfile":
        """Zero-noise, zero-bias profile for the given sensors."""
        return cls({sid: SensorHardware() for sid in sensor_ids})

    def for_sensor(self, sensor_id: str) -> SensorHardware:
        try:
            return self.sensors[sensor_id]
        except KeyError:
            raise KeyError(f"no hardware entry for sensor {sensor_id!r}") from None


@dataclass
class SensorTrace:
    """Simulated 6-axis output of one sensor."""

    sensor_id: str
    sample_rate_hz: float
    accel: np.ndarray  # (T, 3) m/s^2
    gyro: np.ndarray  # (T, 3) rad/s

    def __post_init__(self):
        self.accel = np.asarray(self.accel, dtype=float)
        self.gyro = np.asarray(self.gyro, dtype=float)
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.accel.shape != self.gyro.shape or self.accel.ndim != 2 or self.accel.shape[1] != 3:
            raise ValueError("accel and gyro must both have shape (T, 3)")
        if not (np.all(np.isfinite(self.accel)) and np.all(np.isfinite(self.gyro))):
            raise ValueError("trace contains non-finite values")

    @property
    def num_samples(self) -> int:
        return self.accel.shape[0]


def forward_kinematics_sequence(
    skel: Skeleton, motion: MotionSequence
) -> tuple[np.ndarray, np.ndarray]:
    """World positions (T, J, 3) and orientations (T, J, 4) for all joints."""
    if motion.num_joints != len(skel):
        raise ValueError(
            f"motion has {motion.num_joints} joints, skeleton has {len(skel)}"
        )
    T, J = motion.num_samples, motion.num_joints
    pos = np.empty((T, J, 3))
    orient = np.empty((T, J, 4))
    pos[:, 0] = motion.root_translation
    orient[:, 0] = motion.joint_orient[:, 0]
    for j in range(1, J):
        p = skel.joints[j].parent
        orient[:, j] = quat.multiply(orient[:, p], motion.joint_orient[:, j])
        pos[:, j] = pos[:, p] + quat.rotate_vector(orient[:, p], skel.joints[j].offset)
    return pos, quat.normalize(orient)


def forward_kinematics(
    skel: Skeleton, motion: MotionSequence, t: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-joint (world position, world orientation) at time index t."""
    if not 0 <= t < motion.num_samples:
        raise IndexError(f"time index {t} out of range for T={motion.num_samples}")
    pos, orient = forward_kinematics_sequence(skel, motion)
    return pos[t], orient[t]


def _second_difference(x: np.ndarray, dt: float) -> np.ndarray:
    """Central second derivative; boundary rows copy the nearest interior value."""
    d2 = np.empty_like(x)
    d2[1:-1] = (x[2:] - 2.0 * x[1:-1] + x[:-2]) / (dt * dt)
    d2[0] = d2[1]
    d2[-1] = d2[-2]
    return d2


def _first_difference(x: np.ndarray, dt: float) -> np.ndarray:
    """Central first derivative; one-sided first order at the boundaries."""
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / (2.0 * dt)
    d[0] = (x[1] - x[0]) / dt
    d[-1] = (x[-1] - x[-2]) / dt
    return d


def synthesize_imu(
    skel: Skeleton,
    motion: MotionSequence,
    placement: PlacementMap,
    hardware: HardwareProfile,
    seed: int,
) -> list[SensorTrace]:
    """Simulate all placed sensors for one motion.

    Deterministic: the same inputs and seed give bit-identical traces.
    Noise is drawn per sensor and modality from streams keyed by
    (seed, sensor_id, modality), so traces do not depend on sensor
    order or on other sensors being present.
    """
    if motion.num_samples < 3:
        raise ValueError("motion needs at least 3 samples")
    for sensor in placement.sensors:
        if not 0 <= sensor.joint < len(skel):
            raise ValueError(
                f"sensor {sensor.sensor_id!r} references joint index {sensor.joint}, "
                f"skeleton has {len(skel)} joints"
            )
    dt = 1.0 / motion.sample_rate_hz
    pos, orient = forward_kinematics_sequence(skel, motion)

    traces = []
    for sensor in placement.sensors:
        hw = hardware.for_sensor(sensor.sensor_id)
        joint_q = orient[:, sensor.joint]
        q_ws = quat.hemisphere_align(
            quat.normalize(quat.multiply(joint_q, sensor.orientation))
        )
        p = pos[:, sensor.joint] + quat.rotate_vector(joint_q, sensor.position)

        q_dot = _first_difference(q_ws, dt)
        gyro = 2.0 * quat.multiply(quat.conjugate(q_ws), q_dot)[:, 1:]

        p_ddot = _second_difference(p, dt)
        specific_force = quat.rotate_vector(quat.conjugate(q_ws), p_ddot - GRAVITY_WORLD)

        T = motion.num_samples
        accel_noise = rng.stream(seed, sensor.sensor_id, "accel").normal(0.0, 1.0, (T, 3))
        gyro_noise = rng.stream(seed, sensor.sensor_id, "gyro").normal(0.0, 1.0, (T, 3))
        accel = specific_force + hw.accel_bias + accel_noise * hw.accel_sigma
        gyro = gyro + hw.gyro_bias + gyro_noise * hw.gyro_sigma

        traces.append(
            SensorTrace(
                sensor_id=sensor.sensor_id,
                sample_rate_hz=motion.sample_rate_hz,
                accel=accel,
                gyro=gyro,
            )
        )
    return traces


def stack_traces(traces: list[SensorTrace]) -> np.ndarray:
    """(T, 6*S) channel matrix: accel xyz then gyro xyz, per sensor in order."""
    if not traces:
        raise ValueError("no traces to stack")
    lengths = {t.num_samples for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces disagree on length: {sorted(lengths)}")
    return np.concatenate([np.concatenate([t.accel, t.gyro], axis=1) for t in traces], axis=1)
