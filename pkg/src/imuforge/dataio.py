"""Serialization: bundle documents, CSV traces, windowing, wire frames.

All formats are platform-independent. Binary frames are little-endian
with fixed-width fields; text formats write floats with 17 significant
digits so values round-trip exactly.

Batch frame layout (all integers little-endian):

    offset  size  field
    0       4     magic "PPDA"
    4       2     format version (u16) = 1
    6       4     batch size N (u32)
    10      4     window length T (u32)
    14      4     channel count C (u32)
    18      2     dtype tag (u16) = 1, float32 little-endian
    20      4NTC  payload, N*T*C float32 values in C-order
    ..      4N    labels (u32 each)
    ..      4     CRC-32 over the payload bytes (u32)

Reward frame: magic "REWD", version (u16), count M (u32), then M pairs
of (sub-policy index u32, reward f32). Sub-policy announcement frame:
magic "POLI", version (u16), sub-policy index (u32). On streams and in
frame files, every frame is preceded by a u32 byte count.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from . import quat
from .kinematics import (
    HardwareProfile,
    Joint,
    MotionSequence,
    PlacementMap,
    SensorHardware,
    SensorPlacement,
    SensorTrace,
    Skeleton,
)
from .ppda import MotionBundle

BATCH_MAGIC = b"PPDA"
REWARD_MAGIC = b"REWD"
ANNOUNCE_MAGIC = b"POLI"
FORMAT_VERSION = 1
DTYPE_FLOAT32_LE = 1

_BATCH_HEADER = struct.Struct("<4sHIIIH")
_REWARD_HEADER = struct.Struct("<4sHI")
_ANNOUNCE = struct.Struct("<4sHI")

BUNDLE_FORMAT = "motion-bundle"
BUNDLE_VERSION = 1

CSV_HEADER = "t,ax,ay,az,gx,gy,gz"


class FrameError(ValueError):
    """Malformed binary frame."""


class BadMagicError(FrameError):
    pass


class BadVersionError(FrameError):
    pass


class BadDtypeError(FrameError):
    pass


class CrcMismatchError(FrameError):
    pass


class SchemaError(ValueError):
    """Bundle document violates the schema; message names the field."""


class LengthMismatchError(SchemaError):
    """Array lengths in a bundle document are inconsistent."""


class CsvFormatError(ValueError):
    """Malformed trace CSV; message cites the offending line."""


# ---------------------------------------------------------------------------
# Windowing

def window_starts(total: int, size: int, stride: int) -> list[int]:
    """Start indices of sliding windows; empty when total < size."""
    if size < 1 or stride < 1:
        raise ValueError("size and stride must be >= 1")
    if total < size:
        return []
    return list(range(0, total - size + 1, stride))


def window(data, size: int, stride: int) -> np.ndarray:
    """Stack sliding windows of ``data`` along a new leading axis."""
    data = np.asarray(data)
    starts = window_starts(data.shape[0], size, stride)
    if not starts:
        return np.empty((0, size) + data.shape[1:], dtype=data.dtype)
    return np.stack([data[s : s + size] for s in starts])


def majority_label(labels) -> int:
    """Most frequent class id; ties break toward the lowest id."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("empty label window")
    ids, counts = np.unique(labels, return_counts=True)
    return int(ids[np.argmax(counts)])  # np.unique sorts ids, argmax keeps the first max


def window_labels(labels, size: int, stride: int) -> np.ndarray:
    """Majority label of each sliding window over a per-sample label track."""
    wins = window(labels, size, stride)
    return np.array([majority_label(w) for w in wins], dtype=np.int64)


# ---------------------------------------------------------------------------
# Batch frames

def encode_batch(windows, labels) -> bytes:
    """Serialize (N, T, C) float data plus N labels into one frame."""
    arr = np.ascontiguousarray(np.asarray(windows, dtype=np.float32))
    if arr.ndim != 3:
        raise ValueError("batch must have shape (N, T, C)")
    labels = np.asarray(labels)
    if labels.shape != (arr.shape[0],):
        raise ValueError("labels length must match batch size")
    if labels.size and (np.any(labels < 0) or np.any(labels > 0xFFFFFFFF)):
        raise ValueError("labels must fit in u32")
    n, t, c = arr.shape
    payload = arr.astype("<f4").tobytes()
    header = _BATCH_HEADER.pack(BATCH_MAGIC, FORMAT_VERSION, n, t, c, DTYPE_FLOAT32_LE)
    label_bytes = labels.astype("<u4").tobytes()
    crc = struct.pack("<I", zlib.crc32(payload))
    return header + payload + label_bytes + crc


def decode_batch(frame: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of encode_batch; validates magic, version, dtype and CRC."""
    if len(frame) < _BATCH_HEADER.size:
        raise FrameError(f"frame truncated: {len(frame)} bytes")
    magic, version, n, t, c, dtype = _BATCH_HEADER.unpack_from(frame)
    if magic != BATCH_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise BadVersionError(f"unsupported version {version}")
    if dtype != DTYPE_FLOAT32_LE:
        raise BadDtypeError(f"unsupported dtype tag {dtype}")
    expected = _BATCH_HEADER.size + 4 * n * t * c + 4 * n + 4
    if len(frame) != expected:
        raise FrameError(f"frame is {len(frame)} bytes, header implies {expected}")
    off = _BATCH_HEADER.size
    payload = frame[off : off + 4 * n * t * c]
    off += len(payload)
    label_bytes = frame[off : off + 4 * n]
    off += len(label_bytes)
    (crc,) = struct.unpack_from("<I", frame, off)
    if crc != zlib.crc32(payload):
        raise CrcMismatchError("payload CRC mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(n, t, c)
    labels = np.frombuffer(label_bytes, dtype="<u4")
    return data.copy(), labels.copy()


def encode_rewards(pairs: list[tuple[int, float]]) -> bytes:
    body = b"".join(struct.pack("<If", int(i), float(r)) for i, r in pairs)
    return _REWARD_HEADER.pack(REWARD_MAGIC, FORMAT_VERSION, len(pairs)) + body


def decode_rewards(frame: bytes) -> list[tuple[int, float]]:
    if len(frame) < _REWARD_HEADER.size:
        raise FrameError(f"frame truncated: {len(frame)} bytes")
    magic, version, count = _REWARD_HEADER.unpack_from(frame)
    if magic != REWARD_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise BadVersionError(f"unsupported version {version}")
    expected = _REWARD_HEADER.size + 8 * count
    if len(frame) != expected:
        raise FrameError(f"frame is {len(frame)} bytes, header implies {expected}")
    return [
        struct.unpack_from("<If", frame, _REWARD_HEADER.size + 8 * i) for i in range(count)
    ]


def encode_announce(subpolicy_index: int) -> bytes:
    return _ANNOUNCE.pack(ANNOUNCE_MAGIC, FORMAT_VERSION, int(subpolicy_index))


def decode_announce(frame: bytes) -> int:
    if len(frame) != _ANNOUNCE.size:
        raise FrameError(f"announce frame must be {_ANNOUNCE.size} bytes")
    magic, version, index = _ANNOUNCE.unpack(frame)
    if magic != ANNOUNCE_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise BadVersionError(f"unsupported version {version}")
    return index


def frame_magic(frame: bytes) -> bytes:
    if len(frame) < 4:
        raise FrameError("frame shorter than a magic")
    return frame[:4]


def write_frame(stream, frame: bytes) -> None:
    """Write one length-prefixed frame to a binary file object."""
    stream.write(struct.pack("<I", len(frame)))
    stream.write(frame)


def read_frame(stream) -> bytes | None:
    """Read one length-prefixed frame; None at a clean end of stream."""
    prefix = stream.read(4)
    if not prefix:
        return None
    if len(prefix) < 4:
        raise FrameError("truncated length prefix")
    (length,) = struct.unpack("<I", prefix)
    frame = stream.read(length)
    if len(frame) != length:
        raise FrameError(f"truncated frame: expected {length} bytes, got {len(frame)}")
    return frame


def iter_frames(stream):
    while True:
        frame = read_frame(stream)
        if frame is None:
            return
        yield frame


# ---------------------------------------------------------------------------
# Bundle documents

def _field(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise SchemaError(f"missing field {where}{key}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"field {where}{key} has the wrong type")
    return value


def bundle_to_document(bundle: MotionBundle, labels) -> dict:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (bundle.num_samples,):
        raise LengthMismatchError(
            f"labels has length {labels.shape}, dynamics has T={bundle.num_samples}"
        )
    names = bundle.body.names
    return {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "subject_id": bundle.subject_id,
        "skeleton": [
            {
                "name": j.name,
                "parent": None if j.parent == -1 else names[j.parent],
                "offset": j.offset.tolist(),
            }
            for j in bundle.body.joints
        ],
        "dynamics": {
            "sample_rate_hz": bundle.dynamics.sample_rate_hz,
            "root_translation": bundle.dynamics.root_translation.tolist(),
            "joint_orientations": bundle.dynamics.joint_orient.tolist(),
        },
        "placement": [
            {
                "sensor_id": s.sensor_id,
                "joint": names[s.joint],
                "position": s.position.tolist(),
                "orientation": s.orientation.tolist(),
            }
            for s in bundle.placement.sensors
        ],
        "hardware": {
            sid: {
                "accel": {"sigma": hw.accel_sigma.tolist(), "bias": hw.accel_bias.tolist()},
                "gyro": {"sigma": hw.gyro_sigma.tolist(), "bias": hw.gyro_bias.tolist()},
            }
            for sid, hw in bundle.hardware.sensors.items()
        },
        "labels": labels.tolist(),
    }


def bundle_from_document(doc: dict) -> tuple[MotionBundle, np.ndarray]:
    if not isinstance(doc, dict):
        raise SchemaError("bundle document must be a JSON object")
    if doc.get("format") != BUNDLE_FORMAT:
        raise SchemaError(f"not a motion-bundle document: format={doc.get('format')!r}")
    if doc.get("version") != BUNDLE_VERSION:
        raise SchemaError(f"unsupported bundle version {doc.get('version')!r}")

    skeleton_doc = _field(doc, "skeleton", list, "")
    names = [_field(j, "name", str, f"skeleton[{i}].") for i, j in enumerate(skeleton_doc)]
    joints = []
    for i, j in enumerate(skeleton_doc):
        parent = _field(j, "parent", (str, type(None)), f"skeleton[{i}].")
        if parent is None:
            parent_index = -1
        else:
            if parent not in names[:i]:
                raise SchemaError(
                    f"field skeleton[{i}].parent: {parent!r} does not precede {names[i]!r}"
                )
            parent_index = names.index(parent)
        joints.append(
            Joint(
                name=names[i],
                parent=parent_index,
                offset=_field(j, "offset", list, f"skeleton[{i}]."),
            )
        )
    try:
        skeleton = Skeleton(joints)
    except ValueError as exc:
        raise SchemaError(f"field skeleton: {exc}") from exc

    dyn_doc = _field(doc, "dynamics", dict, "")
    try:
        dynamics = MotionSequence(
            sample_rate_hz=_field(dyn_doc, "sample_rate_hz", (int, float), "dynamics."),
            root_translation=_field(dyn_doc, "root_translation", list, "dynamics."),
            joint_orient=_field(dyn_doc, "joint_orientations", list, "dynamics."),
        )
    except (ValueError, quat.InvalidQuaternionError) as exc:
        raise SchemaError(f"field dynamics: {exc}") from exc
    if dynamics.num_joints != len(skeleton):
        raise LengthMismatchError(
            f"field dynamics.joint_orientations: {dynamics.num_joints} joints, "
            f"skeleton has {len(skeleton)}"
        )

    placement_doc = _field(doc, "placement", list, "")
    sensors = []
    for i, s in enumerate(placement_doc):
        joint_name = _field(s, "joint", str, f"placement[{i}].")
        if joint_name not in names:
            raise SchemaError(f"field placement[{i}].joint: unknown joint {joint_name!r}")
        try:
            sensors.append(
                SensorPlacement(
                    sensor_id=_field(s, "sensor_id", str, f"placement[{i}]."),
                    joint=names.index(joint_name),
                    position=_field(s, "position", list, f"placement[{i}]."),
                    orientation=_field(s, "orientation", list, f"placement[{i}]."),
                )
            )
        except (ValueError, quat.InvalidQuaternionError) as exc:
            raise SchemaError(f"field placement[{i}]: {exc}") from exc

    hardware_doc = _field(doc, "hardware", dict, "")
    hw_sensors = {}
    for sid, entry in hardware_doc.items():
        accel = _field(entry, "accel", dict, f"hardware.{sid}.")
        gyro = _field(entry, "gyro", dict, f"hardware.{sid}.")
        try:
            hw_sensors[sid] = SensorHardware(
                accel_sigma=_field(accel, "sigma", list, f"hardware.{sid}.accel."),
                accel_bias=_field(accel, "bias", list, f"hardware.{sid}.accel."),
                gyro_sigma=_field(gyro, "sigma", list, f"hardware.{sid}.gyro."),
                gyro_bias=_field(gyro, "bias", list, f"hardware.{sid}.gyro."),
            )
        except ValueError as exc:
            raise SchemaError(f"field hardware.{sid}: {exc}") from exc

    labels = np.asarray(_field(doc, "labels", list, ""), dtype=np.int64)
    if labels.shape != (dynamics.num_samples,):
        raise LengthMismatchError(
            f"field labels: length {labels.shape[0]}, dynamics has T={dynamics.num_samples}"
        )

    try:
        bundle = MotionBundle(
            body=skeleton,
            dynamics=dynamics,
            placement=PlacementMap(sensors),
            hardware=HardwareProfile(hw_sensors),
            subject_id=_field(doc, "subject_id", str, ""),
        )
    except (ValueError, KeyError) as exc:
        raise SchemaError(str(exc)) from exc
    return bundle, labels


def save_bundle(bundle: MotionBundle, labels, path) -> None:
    doc = bundle_to_document(bundle, labels)
    Path(path).write_text(json.dumps(doc) + "\n")


def load_bundle(path) -> tuple[MotionBundle, np.ndarray]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"bundle file is not valid JSON: {exc}") from exc
    return bundle_from_document(doc)


# ---------------------------------------------------------------------------
# CSV traces

def write_trace_csv(trace: SensorTrace, path) -> None:
    """One sensor block: header plus one row per sample, 17 digits."""
    lines = [CSV_HEADER]
    dt = 1.0 / trace.sample_rate_hz
    for i in range(trace.num_samples):
        row = [i * dt, *trace.accel[i], *trace.gyro[i]]
        lines.append(",".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> SensorTrace:
    """Read one sensor block; the sensor id is taken from the file stem."""
    path = Path(path)
    raw = path.read_text().splitlines()
    if not raw:
        raise CsvFormatError(f"{path.name}: file is empty")
    if raw[0].strip() != CSV_HEADER:
        raise CsvFormatError(f"{path.name} line 1: expected header {CSV_HEADER!r}")
    times, accel, gyro = [], [], []
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 7:
            raise CsvFormatError(f"{path.name} line {lineno}: expected 7 columns")
        try:
            values = [float(c) for c in cells]
        except ValueError:
            raise CsvFormatError(f"{path.name} line {lineno}: non-numeric cell") from None
        times.append(values[0])
        accel.append(values[1:4])
        gyro.append(values[4:7])
    if len(times) < 2:
        raise CsvFormatError(f"{path.name}: need at least 2 data rows")
    rate = 1.0 / (times[1] - times[0])
    return SensorTrace(
        sensor_id=path.stem,
        sample_rate_hz=rate,
        accel=np.array(accel),
        gyro=np.array(gyro),
    )
