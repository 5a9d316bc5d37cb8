export { crc32 } from "./crc32.js";
export {
  ANNOUNCE_MAGIC,
  BATCH_MAGIC,
  Batch,
  CrcMismatchError,
  DTYPE_FLOAT32_LE,
  FORMAT_VERSION,
  FrameFormatError,
  FrameSplitter,
  REWARD_MAGIC,
  decodeAnnounceFrame,
  decodeBatchFrame,
  encodeRewardFrame,
  lengthPrefixed,
} from "./frames.js";
export { BatchClient, BatchResult, ClientOptions } from "./client.js";
