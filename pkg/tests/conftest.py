import numpy as np
import pytest

from imuforge import (
    HardwareProfile,
    Joint,
    MotionBundle,
    MotionSequence,
    PlacementMap,
    SensorPlacement,
    Skeleton,
)
from imuforge import quat


def random_unit_quats(gen: np.random.Generator, shape) -> np.ndarray:
    q = gen.normal(size=tuple(shape) + (4,))
    return quat.normalize(q)


def chain_skeleton(gen: np.random.Generator, joints: int) -> Skeleton:
    out = [Joint("j0", -1, [0.0, 0.0, 0.0])]
    for i in range(1, joints):
        out.append(Joint(f"j{i}", i - 1, gen.uniform(-0.5, 0.5, 3)))
    return Skeleton(out)


def static_bundle(gen: np.random.Generator, T: int = 16, joints: int = 3,
                  sensors: int = 2, rate: float = 100.0) -> MotionBundle:
    """Random constant-pose bundle with zero noise/bias."""
    skel = chain_skeleton(gen, joints)
    pose = random_unit_quats(gen, (joints,))
    orient = np.tile(pose, (T, 1, 1))
    root = np.tile(gen.uniform(-1, 1, 3), (T, 1))
    motion = MotionSequence(rate, root, orient).canonicalized()
    placements = [
        SensorPlacement(
            f"s{i}",
            int(gen.integers(0, joints)),
            gen.uniform(-0.2, 0.2, 3),
            random_unit_quats(gen, ()),
        )
        for i in range(sensors)
    ]
    pm = PlacementMap(placements)
    return MotionBundle(
        body=skel,
        dynamics=motion,
        placement=pm,
        hardware=HardwareProfile.silent(pm.sensor_ids),
        subject_id="static",
    )


def spin_bundle(omega: float = 3.0, radius: float = 0.2, rate: float = 100.0,
                T: int = 400) -> MotionBundle:
    """Single joint spinning about world z at a constant rate, sensor at
    (radius, 0, 0) in the joint frame; closed-form gyro (0, 0, omega) and
    centripetal acceleration omega^2 * radius toward the axis."""
    ts = np.arange(T) / rate
    qz = quat.from_axis_angle(omega * ts, np.tile([0.0, 0.0, 1.0], (T, 1)))
    motion = MotionSequence(rate, np.zeros((T, 3)), qz[:, None, :])
    skel = Skeleton([Joint("hub", -1, [0.0, 0.0, 0.0])])
    pm = PlacementMap([SensorPlacement("imu", 0, [radius, 0.0, 0.0], quat.identity())])
    return MotionBundle(
        body=skel,
        dynamics=motion,
        placement=pm,
        hardware=HardwareProfile.silent(pm.sensor_ids),
        subject_id="spin",
    )


def periodic_bundle(T: int = 80, period: int = 40, rate: float = 20.0,
                    peak_rate: float = 2.0) -> MotionBundle:
    """Planar joint whose angular rate is a raised cosine peaking at
    period/2 samples into each cycle (first peak at t = 20 for the
    defaults); two full cycles over T."""
    ts = np.arange(T)
    rate_profile = peak_rate * 0.5 * (1.0 - np.cos(2.0 * np.pi * ts / period))
    theta = np.concatenate([[0.0], np.cumsum(rate_profile[:-1])]) / rate
    qz = quat.from_axis_angle(theta, np.tile([0.0, 0.0, 1.0], (T, 1)))
    motion = MotionSequence(rate, np.zeros((T, 3)), qz[:, None, :])
    skel = Skeleton([Joint("hub", -1, [0.0, 0.0, 0.0])])
    pm = PlacementMap([SensorPlacement("imu", 0, [0.15, 0.0, 0.0], quat.identity())])
    return MotionBundle(
        body=skel,
        dynamics=motion,
        placement=pm,
        hardware=HardwareProfile.silent(pm.sensor_ids),
        subject_id="periodic",
    )


@pytest.fixture
def gen() -> np.random.Generator:
    return np.random.default_rng(20260808)
