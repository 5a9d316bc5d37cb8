import hashlib
import io
import json
from pathlib import Path

import numpy as np
import pytest

from imuforge import dataio
from imuforge.kinematics import SensorTrace
from tests.conftest import static_bundle

GOLDEN = Path(__file__).parent / "golden"

# pinned byte layouts; regenerate via tests/golden/generate.py on intentional change
BATCH_SMALL_SHA256 = "6a18701640e77df60eef192e74f97038a8c914fac55293b9e85d4a00b24c63a9"
BATCH_SMALL_PAYLOAD_SHA256 = "f178f019c4057104da3e6d734f1d568d43778c1219de682eb0e9844df5172ce7"
REWARDS_SMALL_SHA256 = "79bbb7670c88b08094b103418dc50130beb9ee06e90076eb3817e052aaff9754"
ANNOUNCE_SMALL_SHA256 = "432ca71d01403c3dd1b5417645da72a7748a6f752df4f48eacde7e6c3cc10ded"


class TestWindowing:
    def test_window_count_from_standard_configs(self):
        # (total, size, stride) -> expected count
        assert len(dataio.window_starts(200, 100, 25)) == 5
        assert len(dataio.window_starts(99, 100, 25)) == 0
        assert len(dataio.window_starts(60, 30, 15)) == 3
        assert len(dataio.window_starts(120, 60, 30)) == 3

    def test_window_stacks_views(self):
        data = np.arange(20).reshape(10, 2)
        wins = dataio.window(data, 4, 3)
        assert wins.shape == (3, 4, 2)
        np.testing.assert_array_equal(wins[1], data[3:7])

    def test_constant_labels_pass_through(self):
        labels = np.full(200, 7)
        np.testing.assert_array_equal(dataio.window_labels(labels, 100, 25), [7] * 5)

    def test_majority_with_tie_breaks_low(self):
        assert dataio.majority_label([2, 2, 1, 1]) == 1
        assert dataio.majority_label([3, 3, 0, 3]) == 3

    def test_invalid_size_rejected(self):
        with pytest.raises(ValueError):
            dataio.window_starts(10, 0, 1)


class TestBatchFrames:
    def test_round_trip_random_batch(self, gen):
        data = gen.normal(size=(4, 10, 6)).astype(np.float32)
        labels = gen.integers(0, 9, 4)
        frame = dataio.encode_batch(data, labels)
        out, out_labels = dataio.decode_batch(frame)
        np.testing.assert_array_equal(out, data)
        np.testing.assert_array_equal(out_labels, labels)

    def test_empty_batch_is_legal(self):
        frame = dataio.encode_batch(np.zeros((0, 5, 6)), np.array([], dtype=np.uint32))
        out, labels = dataio.decode_batch(frame)
        assert out.shape == (0, 5, 6)
        assert labels.shape == (0,)

    def test_single_bit_flip_detected(self, gen):
        data = gen.normal(size=(2, 8, 6)).astype(np.float32)
        frame = bytearray(dataio.encode_batch(data, [0, 1]))
        frame[40] ^= 0x01  # inside the payload
        with pytest.raises(dataio.CrcMismatchError):
            dataio.decode_batch(bytes(frame))

    def test_distinct_error_kinds(self, gen):
        frame = dataio.encode_batch(np.zeros((1, 3, 6)), [0])
        bad_magic = b"XXXX" + frame[4:]
        with pytest.raises(dataio.BadMagicError):
            dataio.decode_batch(bad_magic)
        bad_version = frame[:4] + b"\xff\x00" + frame[6:]
        with pytest.raises(dataio.BadVersionError):
            dataio.decode_batch(bad_version)
        bad_dtype = frame[:18] + b"\x02\x00" + frame[20:]
        with pytest.raises(dataio.BadDtypeError):
            dataio.decode_batch(bad_dtype)
        with pytest.raises(dataio.FrameError):
            dataio.decode_batch(frame[:10])

    def test_golden_frame_layout_is_stable(self):
        raw = (GOLDEN / "batch_small.bin").read_bytes()
        assert hashlib.sha256(raw).hexdigest() == BATCH_SMALL_SHA256
        data, labels = dataio.decode_batch(raw)
        assert data.shape == (2, 3, 6)
        assert data[0, 0, 0] == np.float32(9.80665)
        assert data[1, 2, 5] == np.float32(-0.5)
        assert data[1, 1, 2] == np.float32(112.0)
        np.testing.assert_array_equal(labels, [1, 3])
        assert hashlib.sha256(data.tobytes()).hexdigest() == BATCH_SMALL_PAYLOAD_SHA256
        # re-encoding reproduces the identical bytes
        assert dataio.encode_batch(data, labels) == raw

    def test_golden_empty_frame(self):
        raw = (GOLDEN / "batch_empty.bin").read_bytes()
        data, labels = dataio.decode_batch(raw)
        assert data.shape == (0, 5, 6) and labels.size == 0


class TestRewardAndAnnounceFrames:
    def test_reward_round_trip(self):
        pairs = [(5, 0.25), (9, -1.5)]
        out = dataio.decode_rewards(dataio.encode_rewards(pairs))
        assert [(i, pytest.approx(r)) for i, r in out] == pairs

    def test_reward_golden_bytes(self):
        raw = (GOLDEN / "rewards_small.bin").read_bytes()
        assert hashlib.sha256(raw).hexdigest() == REWARDS_SMALL_SHA256
        assert dataio.decode_rewards(raw) == [(5, 0.25), (9, -1.5)]

    def test_announce_round_trip(self):
        assert dataio.decode_announce(dataio.encode_announce(789)) == 789

    def test_announce_golden_bytes(self):
        raw = (GOLDEN / "announce_small.bin").read_bytes()
        assert hashlib.sha256(raw).hexdigest() == ANNOUNCE_SMALL_SHA256
        assert dataio.decode_announce(raw) == 7

    def test_reward_magic_checked(self):
        with pytest.raises(dataio.BadMagicError):
            dataio.decode_rewards((GOLDEN / "announce_small.bin").read_bytes())


class TestFraming:
    def test_length_prefixed_round_trip(self, gen):
        frames = [
            dataio.encode_announce(3),
            dataio.encode_batch(gen.normal(size=(2, 4, 6)).astype(np.float32), [1, 2]),
            dataio.encode_rewards([(3, 1.0)]),
        ]
        buf = io.BytesIO()
        for f in frames:
            dataio.write_frame(buf, f)
        buf.seek(0)
        assert list(dataio.iter_frames(buf)) == frames

    def test_truncated_stream_rejected(self):
        buf = io.BytesIO(b"\x10\x00\x00\x00abc")
        with pytest.raises(dataio.FrameError):
            dataio.read_frame(buf)


class TestBundleDocuments:
    def test_round_trip_preserves_everything(self, gen, tmp_path):
        bundle = static_bundle(gen)
        labels = gen.integers(0, 4, bundle.num_samples)
        path = tmp_path / "bundle.json"
        dataio.save_bundle(bundle, labels, path)
        loaded, loaded_labels = dataio.load_bundle(path)
        np.testing.assert_array_equal(loaded_labels, labels)
        assert loaded.subject_id == bundle.subject_id
        assert loaded.body.names == bundle.body.names
        np.testing.assert_array_equal(
            loaded.dynamics.joint_orient, bundle.dynamics.joint_orient
        )
        np.testing.assert_array_equal(
            loaded.dynamics.root_translation, bundle.dynamics.root_translation
        )
        assert loaded.dynamics.sample_rate_hz == bundle.dynamics.sample_rate_hz
        for a, b in zip(loaded.placement.sensors, bundle.placement.sensors):
            assert a.sensor_id == b.sensor_id and a.joint == b.joint
            np.testing.assert_array_equal(a.position, b.position)
            np.testing.assert_array_equal(a.orientation, b.orientation)
        for sid, hw in bundle.hardware.sensors.items():
            got = loaded.hardware.sensors[sid]
            np.testing.assert_array_equal(got.accel_sigma, hw.accel_sigma)
            np.testing.assert_array_equal(got.gyro_bias, hw.gyro_bias)

    def test_missing_placement_is_schema_error(self, gen, tmp_path):
        bundle = static_bundle(gen)
        doc = dataio.bundle_to_document(bundle, np.zeros(bundle.num_samples, dtype=int))
        del doc["placement"]
        with pytest.raises(dataio.SchemaError, match="placement"):
            dataio.bundle_from_document(doc)

    def test_label_length_mismatch_is_length_error(self, gen):
        bundle = static_bundle(gen)
        doc = dataio.bundle_to_document(bundle, np.zeros(bundle.num_samples, dtype=int))
        doc["labels"] = doc["labels"][:-3]
        with pytest.raises(dataio.LengthMismatchError, match="labels"):
            dataio.bundle_from_document(doc)

    def test_unknown_sensor_joint_is_schema_error(self, gen):
        bundle = static_bundle(gen)
        doc = dataio.bundle_to_document(bundle, np.zeros(bundle.num_samples, dtype=int))
        doc["placement"][0]["joint"] = "no_such_joint"
        with pytest.raises(dataio.SchemaError, match="no_such_joint"):
            dataio.bundle_from_document(doc)

    def test_golden_bundle_loads(self):
        bundle, labels = dataio.load_bundle(GOLDEN / "bundle_small.json")
        assert bundle.num_samples == 240
        assert bundle.placement.sensor_ids == ["wrist", "chest"]
        assert labels.shape == (240,)

    def test_bad_json_is_schema_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(dataio.SchemaError):
            dataio.load_bundle(path)


class TestTraceCsv:
    def test_round_trip(self, gen, tmp_path):
        trace = SensorTrace("imu_a", 100.0, gen.normal(size=(20, 3)), gen.normal(size=(20, 3)))
        path = tmp_path / "imu_a.csv"
        dataio.write_trace_csv(trace, path)
        loaded = dataio.read_trace_csv(path)
        assert loaded.sensor_id == "imu_a"
        np.testing.assert_array_equal(loaded.accel, trace.accel)
        np.testing.assert_array_equal(loaded.gyro, trace.gyro)
        assert loaded.sample_rate_hz == pytest.approx(100.0, rel=1e-12)

    def test_non_numeric_cell_cites_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        lines = [dataio.CSV_HEADER] + ["0,0,0,0,0,0,0"] * 3
        lines[2] = "0.01,0,zap,0,0,0,0"  # line 3 of the file... line numbering from 1
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(dataio.CsvFormatError, match="line 3"):
            dataio.read_trace_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(dataio.CsvFormatError):
            dataio.read_trace_csv(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("time,ax,ay,az,gx,gy,gz\n0,0,0,0,0,0,0\n")
        with pytest.raises(dataio.CsvFormatError, match="line 1"):
            dataio.read_trace_csv(path)
