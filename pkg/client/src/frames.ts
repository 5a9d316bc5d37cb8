/**
 * Binary frame codecs for the imuforge batch stream.
 *
 * Batch frame ("PPDA"): version u16, N u32, T u32, C u32, dtype u16
 * (1 = float32), N*T*C float32 payload, N u32 labels, CRC-32 over the
 * payload. Announcement frame ("POLI"): version u16, sub-policy index
 * u32. Reward frame ("REWD"): version u16, count u32, then (index u32,
 * reward f32) pairs. All fields little-endian; on the wire every frame
 * is preceded by a u32 byte count.
 */

import { crc32 } from "./crc32.js";

export const BATCH_MAGIC = "PPDA";
export const REWARD_MAGIC = "REWD";
export const ANNOUNCE_MAGIC = "POLI";
export const FORMAT_VERSION = 1;
export const DTYPE_FLOAT32_LE = 1;

const BATCH_HEADER_SIZE = 20;
const ANNOUNCE_SIZE = 10;

export class FrameFormatError extends Error {}
export class CrcMismatchError extends FrameFormatError {}

export interface Batch {
  batchSize: number;
  windowLength: number;
  channels: number;
  data: Float32Array; // batchSize * windowLength * channels, C-order
  labels: Uint32Array;
}

export function frameMagic(frame: Buffer): string {
  if (frame.length < 4) {
    throw new FrameFormatError(`frame of ${frame.length} bytes has no magic`);
  }
  return frame.toString("ascii", 0, 4);
}

export function decodeBatchFrame(frame: Buffer): Batch {
  if (frame.length < BATCH_HEADER_SIZE) {
    throw new FrameFormatError(`batch frame truncated at ${frame.length} bytes`);
  }
  if (frameMagic(frame) !== BATCH_MAGIC) {
    throw new FrameFormatError(`bad magic ${frameMagic(frame)}`);
  }
  const version = frame.readUInt16LE(4);
  if (version !== FORMAT_VERSION) {
    throw new FrameFormatError(`unsupported version ${version}`);
  }
  const batchSize = frame.readUInt32LE(6);
  const windowLength = frame.readUInt32LE(10);
  const channels = frame.readUInt32LE(14);
  const dtype = frame.readUInt16LE(18);
  if (dtype !== DTYPE_FLOAT32_LE) {
    throw new FrameFormatError(`unsupported dtype tag ${dtype}`);
  }
  const count = batchSize * windowLength * channels;
  const expected = BATCH_HEADER_SIZE + 4 * count + 4 * batchSize + 4;
  if (frame.length !== expected) {
    throw new FrameFormatError(
      `batch frame is ${frame.length} bytes, header implies ${expected}`,
    );
  }
  const payload = frame.subarray(BATCH_HEADER_SIZE, BATCH_HEADER_SIZE + 4 * count);
  const storedCrc = frame.readUInt32LE(frame.length - 4);
  if (crc32(payload) !== storedCrc) {
    throw new CrcMismatchError("payload CRC mismatch");
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = payload.readFloatLE(4 * i);
  }
  const labels = new Uint32Array(batchSize);
  const labelsOffset = BATCH_HEADER_SIZE + 4 * count;
  for (let i = 0; i < batchSize; i++) {
    labels[i] = frame.readUInt32LE(labelsOffset + 4 * i);
  }
  return { batchSize, windowLength, channels, data, labels };
}

export function decodeAnnounceFrame(frame: Buffer): number {
  if (frame.length !== ANNOUNCE_SIZE) {
    throw new FrameFormatError(`announce frame must be ${ANNOUNCE_SIZE} bytes`);
  }
  if (frameMagic(frame) !== ANNOUNCE_MAGIC) {
    throw new FrameFormatError(`bad magic ${frameMagic(frame)}`);
  }
  const version = frame.readUInt16LE(4);
  if (version !== FORMAT_VERSION) {
    throw new FrameFormatError(`unsupported version ${version}`);
  }
  return frame.readUInt32LE(6);
}

export function encodeRewardFrame(pairs: Array<[number, number]>): Buffer {
  const frame = Buffer.alloc(10 + 8 * pairs.length);
  frame.write(REWARD_MAGIC, 0, "ascii");
  frame.writeUInt16LE(FORMAT_VERSION, 4);
  frame.writeUInt32LE(pairs.length, 6);
  pairs.forEach(([index, reward], i) => {
    frame.writeUInt32LE(index, 10 + 8 * i);
    frame.writeFloatLE(reward, 14 + 8 * i);
  });
  return frame;
}

export function lengthPrefixed(frame: Buffer): Buffer {
  const prefix = Buffer.alloc(4);
  prefix.writeUInt32LE(frame.length, 0);
  return Buffer.concat([prefix, frame]);
}

/** Reassembles length-prefixed frames from arbitrary stream chunks. */
export class FrameSplitter {
  private pending: Buffer = Buffer.alloc(0);

  push(chunk: Buffer): Buffer[] {
    this.pending = this.pending.length
      ? Buffer.concat([this.pending, chunk])
      : chunk;
    const frames: Buffer[] = [];
    while (this.pending.length >= 4) {
      const length = this.pending.readUInt32LE(0);
      if (this.pending.length < 4 + length) {
        break;
      }
      frames.push(this.pending.subarray(4, 4 + length));
      this.pending = this.pending.subarray(4 + length);
    }
    return frames;
  }

  get buffered(): number {
    return this.pending.length;
  }
}
