"""Signal-space augmentations applied directly to IMU channel data.

Six classic time-series transforms: magnitude scaling/warping, time
scaling/warping, rotation and jitter. All are label-preserving; only
time scaling changes the window length. Each transform is deterministic
under a fixed seed, and sampled quantities can be forced through the
``alpha``/``curve``/``angles`` overrides for exact-value testing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import quat, rng


@dataclass
class SignalWindow:
    """One training window: (T, C) channel data with a class label.

    Channels come in triaxial groups (C divisible by 3); per sensor the
    order is accel xyz then gyro xyz.
    """

    data: np.ndarray
    sample_rate_hz: float
    label: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError("window data must have shape (T, C)")
        if self.data.shape[1] % 3 != 0:
            raise ValueError(f"channel count {self.data.shape[1]} not divisible by 3")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("window contains non-finite values")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")

    @property
    def num_samples(self) -> int:
        return self.data.shape[0]

    @property
    def num_channels(self) -> int:
        return self.data.shape[1]


@dataclass
class WarpCurve:
    """Length-T curve: per-step scale factors, or monotone source indices."""

    values: np.ndarray
    mode: str  # "magnitude" | "time"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("curve must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve contains non-finite values")
        if self.mode not in ("magnitude", "time"):
            raise ValueError(f"unknown curve mode {self.mode!r}")
        if self.mode == "time":
            T = len(self.values)
            if T < 2 or np.any(np.diff(self.values) < 0):
                raise ValueError("time curve must be nondecreasing")
            if abs(self.values[0]) > 1e-9 or abs(self.values[-1] - (T - 1)) > 1e-9:
                raise ValueError("time curve must run from 0 to T-1")

    def __len__(self) -> int:
        return len(self.values)


def make_magnitude_curve(T: int, sigma: float, knots: int, seed: int) -> WarpCurve:
    """Smooth random scale curve around 1.

    Knot values are drawn i.i.d. from N(1, sigma^2) at ``knots`` evenly
    spaced positions spanning [0, T-1] and joined by a natural cubic
    spline. sigma=0 gives the constant curve 1.
    """
    if T < 2:
        raise ValueError("curve length must be >= 2")
    if knots < 2:
        raise ValueError("need at least 2 knots")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    positions = np.linspace(0.0, T - 1.0, knots)
    values = rng.stream(seed, "magnitude-curve").normal(1.0, sigma, knots)
    spline = CubicSpline(positions, values, bc_type="natural")
    return WarpCurve(spline(np.arange(T, dtype=float)), mode="magnitude")


def make_time_warp(T: int, knots: int, max_speed_ratio: float, seed: int) -> WarpCurve:
    """Monotone source-index curve with smoothly varying playback speed.

    Per-knot speeds are drawn from U[1/r, r] with r = max_speed_ratio,
    spline-smoothed, clamped back to [1/r, r], integrated, and rescaled
    so the curve runs exactly from 0 to T-1.
    """
    if T < 2:
        raise ValueError("curve length must be >= 2")
    if knots < 2:
        raise ValueError("need at least 2 knots")
    if max_speed_ratio <= 1.0:
        raise ValueError("max_speed_ratio must exceed 1")
    r = float(max_speed_ratio)
    positions = np.linspace(0.0, T - 1.0, knots)
    speeds = rng.stream(seed, "time-warp").uniform(1.0 / r, r, knots)
    spline = CubicSpline(positions, speeds, bc_type="natural")
    profile = np.clip(spline(np.arange(T, dtype=float)), 1.0 / r, r)
    # trapezoidal cumulative time, pinned to the endpoints
    w = np.concatenate([[0.0], np.cumsum(0.5 * (profile[1:] + profile[:-1]))])
    w *= (T - 1.0) / w[-1]
    w[-1] = T - 1.0
    return WarpCurve(w, mode="time")


def _resample(data: np.ndarray, source_idx: np.ndarray) -> np.ndarray:
    """Linear interpolation of (T, C) rows at fractional source indices."""
    T = data.shape[0]
    s = np.clip(source_idx, 0.0, T - 1.0)
    i0 = np.floor(s).astype(int)
    i1 = np.minimum(i0 + 1, T - 1)
    frac = (s - i0)[:, None]
    return data[i0] * (1.0 - frac) + data[i1] * frac


def magnitude_scale(
    x: SignalWindow, sigma: float, seed: int, alpha: float | None = None
) -> SignalWindow:
    """Multiply every element by one factor alpha ~ N(1, sigma^2)."""
    if alpha is None:
        alpha = rng.stream(seed, "magnitude-scale").normal(1.0, sigma)
    return replace(x, data=x.data * alpha)


def magnitude_warp(
    x: SignalWindow,
    sigma: float,
    knots: int,
    seed: int,
    curve: WarpCurve | None = None,
) -> SignalWindow:
    """Multiply each time step by a smooth random factor around 1."""
    if curve is None:
        curve = make_magnitude_curve(x.num_samples, sigma, knots, seed)
    if len(curve) != x.num_samples:
        raise ValueError("curve length does not match window length")
    return replace(x, data=x.data * curve.values[:, None])


def time_scale(x: SignalWindow, beta: float) -> SignalWindow:
    """Uniformly stretch (beta < 1) or compress (beta > 1) along time.

    Output length is round(T / beta), half away from zero; sample t
    reads the source at index t * beta via linear interpolation. The
    nominal sample rate is kept; callers refit the window downstream.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    T = x.num_samples
    T_out = max(1, int(np.floor(T / beta + 0.5)))
    src = np.arange(T_out, dtype=float) * beta
    return replace(x, data=_resample(x.data, src))


def time_warp(
    x: SignalWindow,
    knots: int,
    max_speed_ratio: float,
    seed: int,
    curve: WarpCurve | None = None,
) -> SignalWindow:
    """Re-read the window along a monotone random time curve (length kept)."""
    if curve is None:
        curve = make_time_warp(x.num_samples, knots, max_speed_ratio, seed)
    if curve.mode != "time":
        raise ValueError("time_warp needs a time-mode curve")
    if len(curve) != x.num_samples:
        raise ValueError("curve length does not match window length")
    return replace(x, data=_resample(x.data, curve.values))


def rotate(
    x: SignalWindow,
    seed: int,
    range_deg: float = 180.0,
    angles: tuple[float, float, float] | None = None,
) -> SignalWindow:
    """Apply one random 3D rotation to every triaxial channel group.

    Euler angles are drawn per axis from U[-range_deg, range_deg] and
    composed intrinsically about z, then y, then x; the same rotation
    matrix is used at every time step and for every group.
    """
    if angles is None:
        lim = np.deg2rad(range_deg)
        angles = rng.stream(seed, "rotate").uniform(-lim, lim, 3)
    az, ay, ax = angles
    m = quat.to_matrix(quat.from_euler_zyx(az, ay, ax))
    groups = x.data.reshape(x.num_samples, -1, 3)
    rotated = np.einsum("ij,tnj->tni", m, groups)
    return replace(x, data=rotated.reshape(x.num_samples, -1))


def jitter(x: SignalWindow, sigma: float, seed: int) -> SignalWindow:
    """Add i.i.d. Gaussian noise N(0, sigma^2) to every element."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    noise = rng.stream(seed, "jitter").normal(0.0, sigma, x.data.shape)
    return replace(x, data=x.data + noise)


def fit_length(x: SignalWindow, T: int) -> SignalWindow:
    """Refit a window to exactly T samples: truncate, or pad by edge hold."""
    if T < 1:
        raise ValueError("target length must be >= 1")
    if x.num_samples == T:
        return x
    if x.num_samples > T:
        return replace(x, data=x.data[:T].copy())
    pad = np.repeat(x.data[-1:], T - x.num_samples, axis=0)
    return replace(x, data=np.concatenate([x.data, pad], axis=0))
