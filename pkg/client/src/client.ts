/**
 * Synchronous-style client for the imuforge batch stream.
 *
 * The server pushes, per round, an announcement frame naming the
 * sub-policy it applied followed by one batch frame. nextBatch()
 * resolves with the decoded arrays once both have arrived (CRC
 * verified before anything is handed out); sendReward() pushes a
 * reward frame back for the adaptive sampler. One session per
 * connection; wrap it in your own prefetcher if you need pipelining.
 */

import * as net from "node:net";

import {
  ANNOUNCE_MAGIC,
  BATCH_MAGIC,
  Batch,
  FrameFormatError,
  FrameSplitter,
  decodeAnnounceFrame,
  decodeBatchFrame,
  encodeRewardFrame,
  frameMagic,
  lengthPrefixed,
} from "./frames.js";

export interface BatchResult extends Batch {
  /** Index of the sub-policy the server applied to this batch. */
  subpolicy: number;
  /** 0-based count of batches received on this session. */
  round: number;
}

export interface ClientOptions {
  host?: string;
  /** Reject nextBatch() if no frame arrives within this time. */
  receiveTimeoutMs?: number;
}

export class BatchClient {
  private socket: net.Socket;
  private splitter = new FrameSplitter();
  private queue: BatchResult[] = [];
  private waiting: Array<{
    resolve: (b: BatchResult) => void;
    reject: (err: Error) => void;
    timer: NodeJS.Timeout;
  }> = [];
  private announcedSubpolicy: number | null = null;
  private rounds = 0;
  private failure: Error | null = null;
  private ended = false;
  private readonly receiveTimeoutMs: number;

  private constructor(socket: net.Socket, options: ClientOptions) {
    this.socket = socket;
    this.receiveTimeoutMs = options.receiveTimeoutMs ?? 30_000;
    socket.on("data", (chunk) => this.onData(chunk));
    socket.on("error", (err) => this.fail(err));
    socket.on("close", () => {
      this.ended = true;
      this.fail(this.failure ?? new Error("connection closed"));
    });
  }

  static connect(port: number, options: ClientOptions = {}): Promise<BatchClient> {
    const host = options.host ?? "127.0.0.1";
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => {
        socket.off("error", reject);
        resolve(new BatchClient(socket, options));
      });
      socket.once("error", reject);
    });
  }

  private onData(chunk: Buffer): void {
    let frames: Buffer[];
    try {
      frames = this.splitter.push(chunk);
      for (const frame of frames) {
        this.onFrame(frame);
      }
    } catch (err) {
      this.fail(err as Error);
    }
  }

  private onFrame(frame: Buffer): void {
    const magic = frameMagic(frame);
    if (magic === ANNOUNCE_MAGIC) {
      this.announcedSubpolicy = decodeAnnounceFrame(frame);
      return;
    }
    if (magic !== BATCH_MAGIC) {
      throw new FrameFormatError(`unexpected server frame ${magic}`);
    }
    if (this.announcedSubpolicy === null) {
      throw new FrameFormatError("batch frame arrived without an announcement");
    }
    const batch = decodeBatchFrame(frame); // throws CrcMismatchError on corruption
    const result: BatchResult = {
      ...batch,
      subpolicy: this.announcedSubpolicy,
      round: this.rounds++,
    };
    this.announcedSubpolicy = null;
    const waiter = this.waiting.shift();
    if (waiter) {
      clearTimeout(waiter.timer);
      waiter.resolve(result);
    } else {
      this.queue.push(result);
    }
  }

  private fail(err: Error): void {
    if (!this.failure) {
      this.failure = err;
    }
    for (const waiter of this.waiting.splice(0)) {
      clearTimeout(waiter.timer);
      waiter.reject(this.failure);
    }
  }

  /** Resolves with the next decoded batch; rejects on corruption,
   * disconnect, or timeout. */
  nextBatch(): Promise<BatchResult> {
    const queued = this.queue.shift();
    if (queued) {
      return Promise.resolve(queued);
    }
    if (this.failure && this.queue.length === 0) {
      return Promise.reject(this.failure);
    }
    if (this.ended) {
      return Promise.reject(new Error("connection closed"));
    }
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        const i = this.waiting.findIndex((w) => w.timer === timer);
        if (i >= 0) {
          this.waiting.splice(i, 1);
        }
        reject(new Error(`no batch within ${this.receiveTimeoutMs} ms`));
      }, this.receiveTimeoutMs);
      this.waiting.push({ resolve, reject, timer });
    });
  }

  /** Report a reward observation for a sub-policy index. */
  sendReward(subpolicy: number, reward: number): void {
    this.sendRewards([[subpolicy, reward]]);
  }

  sendRewards(pairs: Array<[number, number]>): void {
    if (this.ended) {
      throw new Error("connection closed");
    }
    this.socket.write(lengthPrefixed(encodeRewardFrame(pairs)));
  }

  get received(): number {
    return this.rounds;
  }

  close(): void {
    this.socket.destroy();
  }
}
