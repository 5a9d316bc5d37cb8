"""Online augmentation: batch pipeline and the streaming socket server.

The pipeline turns one motion bundle into augmented mini-batches: per
round it samples a sub-policy, picks window slots, applies the
sub-policy to every window (in parallel across a worker pool) and
stacks the result. The server pushes each round over TCP as a
sub-policy announcement frame followed by a batch frame, and consumes
reward frames sent back by the client; weights are updated strictly
between rounds.

Everything is deterministic given the root seed: sub-policy draws,
window slots and per-window augmentation seeds are all derived from
(seed, round, slot), so two runs with the same inputs emit identical
bytes, and reward traffic influences sampling only.
"""

from __future__ import annotations

import json
import logging
import select
import socket
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dataio, policy, rng
from .kinematics import stack_traces
from .ppda import MotionBundle
from .stda import SignalWindow, fit_length

logger = logging.getLogger(__name__)


@dataclass
class PipelineSettings:
    mode: str  # "ppda" | "stda"
    window_size: int
    stride: int
    batch_size: int
    seed: int
    workers: int = 4

    def __post_init__(self):
        if self.mode not in ("ppda", "stda"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.window_size < 3:
            raise ValueError("window size must be >= 3")
        if self.stride < 1 or self.batch_size < 1 or self.workers < 1:
            raise ValueError("stride, batch size and workers must be >= 1")


class BatchPipeline:
    """Builds augmented mini-batches from one bundle under a policy."""

    def __init__(
        self,
        bundle: MotionBundle,
        labels: np.ndarray,
        config: policy.PolicyConfig,
        settings: PipelineSettings,
    ):
        if config.mode != settings.mode:
            raise ValueError(
                f"policy is for mode {config.mode!r}, pipeline runs {settings.mode!r}"
            )
        self.bundle = bundle
        self.config = config
        self.settings = settings
        self.starts = dataio.window_starts(
            bundle.num_samples, settings.window_size, settings.stride
        )
        if not self.starts:
            raise ValueError(
                f"bundle has {bundle.num_samples} samples, below window size "
                f"{settings.window_size}"
            )
        self.labels = dataio.window_labels(labels, settings.window_size, settings.stride)
        self._stda_matrix = None
        if settings.mode == "stda":
            traces = bundle.synthesize(rng.derive_seed(settings.seed, "baseline"))
            self._stda_matrix = stack_traces(traces)

    @property
    def num_windows(self) -> int:
        return len(self.starts)

    def _build_window(self, sp: policy.SubPolicy, slot: int, window_seed: int) -> SignalWindow:
        start = self.starts[slot]
        size = self.settings.window_size
        label = int(self.labels[slot])
        if self.settings.mode == "stda":
            win = SignalWindow(
                data=self._stda_matrix[start : start + size].copy(),
                sample_rate_hz=self.bundle.dynamics.sample_rate_hz,
                label=label,
            )
            out = policy.apply(sp, self.config, win, window_seed)
            return fit_length(out, size)
        return policy.apply(
            sp, self.config, (self.bundle, (start, size)), window_seed, label=label
        )

    def build_round(
        self, state: policy.PolicyState, round_index: int
    ) -> tuple[int, np.ndarray, np.ndarray]:
        """(sub-policy index, (N, T, C) data, labels) for one round."""
        seed = self.settings.seed
        sp_index = policy.sample(state, rng.derive_seed(seed, "round", round_index))
        sp = state.subpolicies[sp_index]
        slots = rng.stream(seed, "slots", round_index).integers(
            0, self.num_windows, self.settings.batch_size
        )
        seeds = [
            rng.derive_seed(seed, "window", round_index, position)
            for position in range(len(slots))
        ]
        if self.settings.workers > 1:
            with ThreadPoolExecutor(max_workers=self.settings.workers) as pool:
                windows = list(pool.map(self._build_window, [sp] * len(slots), slots, seeds))
        else:
            windows = [self._build_window(sp, s, ws) for s, ws in zip(slots, seeds)]
        data = np.stack([w.data for w in windows]).astype(np.float32)
        labels = np.array([w.label for w in windows], dtype=np.uint32)
        return sp_index, data, labels


class BatchServer:
    """Streams announcement + batch frames to one client over TCP."""

    def __init__(
        self,
        pipeline: BatchPipeline,
        state: policy.PolicyState,
        host: str = "127.0.0.1",
        port: int = 0,
        rounds: int = 0,  # 0 = until the client disconnects
        log_json: str | None = None,
    ):
        self.pipeline = pipeline
        self.state = state
        self.host = host
        self.rounds = rounds
        self.log_json = log_json
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(1)
        self.port = self._listener.getsockname()[1]

    def close(self) -> None:
        self._listener.close()

    def _drain_rewards(
        self, conn: socket.socket, buffer: bytearray, timeout: float = 0.0
    ) -> list[tuple[int, float]]:
        """Collect reward pairs from any complete frames already received.

        ``timeout`` applies to the first poll only; once the socket goes
        quiet the drain returns immediately.
        """
        rewards: list[tuple[int, float]] = []
        wait = timeout
        while True:
            readable, _, _ = select.select([conn], [], [], wait)
            wait = 0.0
            if not readable:
                break
            chunk = conn.recv(65536)
            if not chunk:
                break
            buffer.extend(chunk)
        while len(buffer) >= 4:
            (length,) = struct.unpack_from("<I", buffer)
            if len(buffer) < 4 + length:
                break
            frame = bytes(buffer[4 : 4 + length])
            del buffer[: 4 + length]
            if dataio.frame_magic(frame) != dataio.REWARD_MAGIC:
                raise dataio.BadMagicError(
                    f"unexpected client frame {dataio.frame_magic(frame)!r}"
                )
            for index, reward in dataio.decode_rewards(frame):
                logger.info("reward received: subpolicy=%d reward=%.6f", index, reward)
                rewards.append((index, reward))
        return rewards

    def _log_round(self, log_file, round_index: int, sp_index: int) -> None:
        if log_file is None:
            return
        record = {
            "round": round_index,
            "subpolicy": sp_index,
            "probabilities": self.state.probabilities.tolist(),
        }
        log_file.write(json.dumps(record) + "\n")
        log_file.flush()

    def serve(self) -> policy.PolicyState:
        """Accept one client and stream rounds; returns the final state."""
        log_file = open(self.log_json, "w") if self.log_json else None
        try:
            conn, peer = self._listener.accept()
            logger.info("client connected from %s:%d", *peer)
            buffer = bytearray()
            round_index = 0
            with conn:
                while self.rounds == 0 or round_index < self.rounds:
                    rewards = self._drain_rewards(conn, buffer)
                    if rewards:
                        self.state = policy.update_weights(self.state, rewards)
                    sp_index, data, labels = self.pipeline.build_round(self.state, round_index)
                    try:
                        payload = dataio.encode_announce(sp_index)
                        conn.sendall(struct.pack("<I", len(payload)) + payload)
                        frame = dataio.encode_batch(data, labels)
                        conn.sendall(struct.pack("<I", len(frame)) + frame)
                    except (BrokenPipeError, ConnectionResetError):
                        logger.info("client disconnected after %d rounds", round_index)
                        break
                    self._log_round(log_file, round_index, sp_index)
                    round_index += 1
                else:
                    # final drain so late rewards still reach the log/state
                    try:
                        rewards = self._drain_rewards(conn, buffer, timeout=0.25)
                        if rewards:
                            self.state = policy.update_weights(self.state, rewards)
                    except OSError:
                        pass
            logger.info("served %d rounds", round_index)
            return self.state
        finally:
            if log_file is not None:
                log_file.close()
            self.close()
