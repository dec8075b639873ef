// Wire types shared with the session server: binary frames and JSON
// control commands.

export const HEADER_BYTES = 20;

export const ENCODING_RAW_F32 = 0;
export const ENCODING_RGB_U8 = 1;

export interface FrameMessage {
  step: number;
  width: number;
  height: number;
  channels: number;
  encoding: number;
  /** Raw float32 channel planes (encoding 0) or RGB bytes (encoding 1). */
  payload: Float32Array | Uint8Array;
}

export class FrameDecodeError extends Error {}

/** Decode one binary frame: 20-byte little-endian header (step, width,
 * height, channels, encoding as uint32) followed by the payload. */
export function decodeFrame(buffer: ArrayBuffer): FrameMessage {
  if (buffer.byteLength < HEADER_BYTES) {
    throw new FrameDecodeError(`frame shorter than header: ${buffer.byteLength} bytes`);
  }
  const head = new DataView(buffer, 0, HEADER_BYTES);
  const step = head.getUint32(0, true);
  const width = head.getUint32(4, true);
  const height = head.getUint32(8, true);
  const channels = head.getUint32(12, true);
  const encoding = head.getUint32(16, true);
  const body = buffer.slice(HEADER_BYTES);
  let payload: Float32Array | Uint8Array;
  let expected: number;
  if (encoding === ENCODING_RAW_F32) {
    expected = width * height * channels * 4;
    if (body.byteLength !== expected) {
      throw new FrameDecodeError(
        `raw frame payload ${body.byteLength} bytes, expected ${expected}`,
      );
    }
    payload = new Float32Array(body);
  } else if (encoding === ENCODING_RGB_U8) {
    expected = width * height * 3;
    if (body.byteLength !== expected) {
      throw new FrameDecodeError(
        `rgb frame payload ${body.byteLength} bytes, expected ${expected}`,
      );
    }
    payload = new Uint8Array(body);
  } else {
    throw new FrameDecodeError(`unknown frame encoding ${encoding}`);
  }
  return { step, width, height, channels, encoding, payload };
}

/** Encode a frame back to wire bytes (used by tests and fixtures). */
export function encodeFrame(frame: FrameMessage): ArrayBuffer {
  const body =
    frame.payload instanceof Float32Array
      ? new Uint8Array(frame.payload.buffer.slice(0))
      : frame.payload;
  const out = new ArrayBuffer(HEADER_BYTES + body.byteLength);
  const head = new DataView(out, 0, HEADER_BYTES);
  head.setUint32(0, frame.step, true);
  head.setUint32(4, frame.width, true);
  head.setUint32(8, frame.height, true);
  head.setUint32(12, frame.channels, true);
  head.setUint32(16, frame.encoding, true);
  new Uint8Array(out, HEADER_BYTES).set(body);
  return out;
}

// ---------------------------------------------------------------------------
// Control commands (JSON text messages over the same socket).
// ---------------------------------------------------------------------------

export type Command =
  | { op: "get_config" }
  | { op: "get_stats" }
  | { op: "set_param"; name: string; value: number; index?: number }
  | { op: "pause" }
  | { op: "resume" }
  | { op: "step"; count?: number }
  | {
      op: "paint";
      layer: "matter" | "food" | "wall";
      y: number;
      x: number;
      height: number;
      width: number;
      value: number;
      channel?: number;
    }
  | { op: "erase"; y: number; x: number; height: number; width: number }
  | {
      op: "inject_species";
      y: number;
      x: number;
      patch_side: number;
      params: number[];
    }
  | { op: "mutate"; y?: number; x?: number; radius?: number; sigma?: number };

export interface SessionConfig {
  width: number;
  height: number;
  channels: number;
  mode: string;
  embedding: boolean;
  s: number;
  dt: number;
  theta_A: number;
  n: number;
  h: number[];
  n_kernels: number;
  running: boolean;
  step: number;
  [key: string]: unknown;
}

export interface ServerEvent {
  event: string;
  id?: number;
  ok?: boolean;
  error?: string;
  config?: SessionConfig;
  [key: string]: unknown;
}
