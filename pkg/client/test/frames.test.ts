import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { crc32 } from "../src/crc32.js";
import {
  CrcMismatchError,
  FrameFormatError,
  FrameSplitter,
  decodeAnnounceFrame,
  decodeBatchFrame,
  encodeRewardFrame,
  lengthPrefixed,
} from "../src/frames.js";

const GOLDEN = join(dirname(fileURLToPath(import.meta.url)), "..", "..", "tests", "golden");

// pinned alongside tests/test_dataio.py; regenerate via tests/golden/generate.py
const BATCH_SMALL_PAYLOAD_SHA256 =
  "f178f019c4057104da3e6d734f1d568d43778c1219de682eb0e9844df5172ce7";
const REWARDS_SMALL_SHA256 =
  "79bbb7670c88b08094b103418dc50130beb9ee06e90076eb3817e052aaff9754";

function golden(name: string): Buffer {
  return readFileSync(join(GOLDEN, name));
}

describe("crc32", () => {
  it("matches the standard check value", () => {
    expect(crc32(Buffer.from("123456789", "ascii"))).toBe(0xcbf43926);
  });

  it("matches the CRC stored by the producer", () => {
    const frame = golden("batch_small.bin");
    const payload = frame.subarray(20, frame.length - 4 - 8);
    expect(crc32(payload)).toBe(frame.readUInt32LE(frame.length - 4));
  });
});

describe("decodeBatchFrame", () => {
  it("decodes the pinned golden frame to the expected checksum", () => {
    const batch = decodeBatchFrame(golden("batch_small.bin"));
    expect(batch.batchSize).toBe(2);
    expect(batch.windowLength).toBe(3);
    expect(batch.channels).toBe(6);
    expect(Array.from(batch.labels)).toEqual([1, 3]);
    expect(batch.data[0]).toBeCloseTo(9.80665, 5);
    expect(batch.data[batch.data.length - 1]).toBe(-0.5);
    const bytes = Buffer.from(batch.data.buffer, batch.data.byteOffset, 4 * batch.data.length);
    const digest = createHash("sha256").update(bytes).digest("hex");
    expect(digest).toBe(BATCH_SMALL_PAYLOAD_SHA256);
  });

  it("accepts an empty batch", () => {
    const batch = decodeBatchFrame(golden("batch_empty.bin"));
    expect(batch.batchSize).toBe(0);
    expect(batch.data.length).toBe(0);
    expect(batch.labels.length).toBe(0);
  });

  it("rejects a single flipped payload bit", () => {
    const frame = Buffer.from(golden("batch_small.bin"));
    frame[24] ^= 0x01;
    expect(() => decodeBatchFrame(frame)).toThrow(CrcMismatchError);
  });

  it("rejects a bad magic", () => {
    const frame = Buffer.from(golden("batch_small.bin"));
    frame.write("XXXX", 0, "ascii");
    expect(() => decodeBatchFrame(frame)).toThrow(FrameFormatError);
  });

  it("rejects truncation", () => {
    const frame = golden("batch_small.bin").subarray(0, 30);
    expect(() => decodeBatchFrame(frame)).toThrow(FrameFormatError);
  });
});

describe("announce and reward frames", () => {
  it("decodes the golden announcement", () => {
    expect(decodeAnnounceFrame(golden("announce_small.bin"))).toBe(7);
  });

  it("encodes rewards byte-identically to the producer", () => {
    const frame = encodeRewardFrame([
      [5, 0.25],
      [9, -1.5],
    ]);
    const digest = createHash("sha256").update(frame).digest("hex");
    expect(digest).toBe(REWARDS_SMALL_SHA256);
    expect(frame.equals(golden("rewards_small.bin"))).toBe(true);
  });
});

describe("FrameSplitter", () => {
  it("reassembles frames across arbitrary chunk boundaries", () => {
    const frames = [
      golden("announce_small.bin"),
      golden("batch_small.bin"),
      golden("rewards_small.bin"),
    ];
    const stream = Buffer.concat(frames.map(lengthPrefixed));
    for (const chunkSize of [1, 3, 7, 64, stream.length]) {
      const splitter = new FrameSplitter();
      const out: Buffer[] = [];
      for (let at = 0; at < stream.length; at += chunkSize) {
        out.push(...splitter.push(stream.subarray(at, at + chunkSize)));
      }
      expect(out.length).toBe(3);
      out.forEach((frame, i) => expect(frame.equals(frames[i])).toBe(true));
      expect(splitter.buffered).toBe(0);
    }
  });
});
