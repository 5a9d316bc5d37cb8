"""Quaternion algebra on numpy arrays.

Conventions (used everywhere in this package):

- Quaternions are stored scalar-first as ``[w, x, y, z]`` in the last
  axis of a float array; all functions broadcast over leading axes.
- Composition is the Hamilton product; frames are right-handed.
- A vector ``v`` is rotated by ``q`` as ``q (0, v) q^-1``, i.e. ``q``
  maps local-frame vectors into the parent frame.
- ``q`` and ``-q`` encode the same rotation. Axis-angle decomposition
  canonicalizes to an angle in [0, pi] with the axis sign absorbing the
  direction; the axis for a near-zero angle defaults to (0, 0, 1).
"""

from __future__ import annotations

import numpy as np

UNIT_ATOL = 1e-6
ZERO_ANGLE = 1e-8
DEFAULT_AXIS = np.array([0.0, 0.0, 1.0])


class InvalidQuaternionError(ValueError):
    """Input quaternion (or axis) is not unit-norm."""


def identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def norm(q) -> np.ndarray:
    return np.linalg.norm(np.asarray(q, dtype=float), axis=-1)


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def require_unit(q, what: str = "quaternion") -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 4:
        raise InvalidQuaternionError(f"{what} must have 4 components, got shape {q.shape}")
    err = np.abs(np.linalg.norm(q, axis=-1) - 1.0)
    if np.any(err > UNIT_ATOL) or not np.all(np.isfinite(q)):
        raise InvalidQuaternionError(f"{what} is not unit-norm (max deviation {np.max(err):.3g})")
    return q


def multiply(a, b) -> np.ndarray:
    """Hamilton product a * b (broadcasts; no normalization)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = np.moveaxis(a, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def rotate_vector(q, v) -> np.ndarray:
    """Rotate vector(s) v by quaternion(s) q, broadcasting leading axes."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    # q (0,v) q^-1 expanded to two cross products (unit q assumed)
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def to_matrix(q) -> np.ndarray:
    """3x3 rotation matrix mapping local vectors into the parent frame."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1.0 - 2.0 * (yy + zz)
    m[..., 0, 1] = 2.0 * (xy - wz)
    m[..., 0, 2] = 2.0 * (xz + wy)
    m[..., 1, 0] = 2.0 * (xy + wz)
    m[..., 1, 1] = 1.0 - 2.0 * (xx + zz)
    m[..., 1, 2] = 2.0 * (yz - wx)
    m[..., 2, 0] = 2.0 * (xz - wy)
    m[..., 2, 1] = 2.0 * (yz + wx)
    m[..., 2, 2] = 1.0 - 2.0 * (xx + yy)
    return m


def axis_angle(q) -> tuple[np.ndarray, np.ndarray]:
    """Decompose unit quaternion(s) into (angle in [0, pi], unit axis).

    Angles below ``ZERO_ANGLE`` report the default axis (0, 0, 1).
    Raises InvalidQuaternionError for non-unit input.
    """
    q = require_unit(q)
    q = np.where(q[..., :1] < 0.0, -q, q)
    vec = q[..., 1:]
    vn = np.linalg.norm(vec, axis=-1)
    theta = 2.0 * np.arctan2(vn, q[..., 0])
    small = theta < ZERO_ANGLE
    safe = np.where(small, 1.0, vn)
    axis = vec / safe[..., None]
    axis = np.where(small[..., None], DEFAULT_AXIS, axis)
    return theta, axis


def from_axis_angle(theta, axis) -> np.ndarray:
    """Unit quaternion for a rotation of theta about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    an = np.linalg.norm(axis, axis=-1)
    if np.any(np.abs(an - 1.0) > UNIT_ATOL):
        raise InvalidQuaternionError("rotation axis is not unit-norm")
    theta = np.asarray(theta, dtype=float)
    half = 0.5 * theta
    return np.concatenate(
        [np.cos(half)[..., None], np.sin(half)[..., None] * axis], axis=-1
    )


def hemisphere_align(seq) -> np.ndarray:
    """Fix quaternion signs along axis 0 so consecutive dots are >= 0.

    Works on (T, 4) or (T, ..., 4) arrays; represents the same rotations.
    The first element of each chain is sign-normalized to w >= 0.
    Empty input passes through.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.size == 0:
        return seq.copy()
    out = seq.copy()
    dots = np.sum(out[:-1] * out[1:], axis=-1)
    flips = np.where(dots < 0.0, -1.0, 1.0)
    signs = np.concatenate([np.ones((1,) + dots.shape[1:]), np.cumprod(flips, axis=0)], axis=0)
    out *= signs[..., None]
    lead = np.where(out[0, ..., :1] < 0.0, -1.0, 1.0)
    out *= lead[None, ...]
    return out


def slerp(q0, q1, s) -> np.ndarray:
    """Geodesic interpolation at constant angular speed, shorter arc.

    s=0 returns q0 and s=1 returns q1 up to sign; s broadcasts.
    """
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    s = np.asarray(s, dtype=float)[..., None]
    dot = np.sum(q0 * q1, axis=-1, keepdims=True)
    q1 = np.where(dot < 0.0, -q1, q1)
    dot = np.clip(np.abs(dot), -1.0, 1.0)
    theta = np.arccos(dot)
    sin_theta = np.sin(theta)
    near = sin_theta < 1e-9
    safe_sin = np.where(near, 1.0, sin_theta)
    w0 = np.where(near, 1.0 - s, np.sin((1.0 - s) * theta) / safe_sin)
    w1 = np.where(near, s, np.sin(s * theta) / safe_sin)
    return normalize(w0 * q0 + w1 * q1)


def from_euler_zyx(az, ay, ax) -> np.ndarray:
    """Quaternion for intrinsic rotations about z, then y, then x (radians)."""
    qz = from_axis_angle(az, [0.0, 0.0, 1.0])
    qy = from_axis_angle(ay, [0.0, 1.0, 0.0])
    qx = from_axis_angle(ax, [1.0, 0.0, 0.0])
    return multiply(multiply(qz, qy), qx)


def to_euler_zyx(q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of from_euler_zyx; valid away from the ay = +-pi/2 singularity."""
    m = to_matrix(q)
    ay = np.arcsin(np.clip(-m[..., 2, 0], -1.0, 1.0))
    az = np.arctan2(m[..., 1, 0], m[..., 0, 0])
    ax = np.arctan2(m[..., 2, 1], m[..., 2, 2])
    return az, ay, ax
