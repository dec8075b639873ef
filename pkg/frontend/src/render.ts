// Frame rasterization: raw float planes -> RGBA pixels.  Channels map to
// distinct color components in composite mode; a single selected channel
// uses a perceptually-ordered single-hue ramp.  Scaling to screen size is
// nearest-neighbor (CSS image-rendering: pixelated on the canvas).

import { ENCODING_RAW_F32, ENCODING_RGB_U8, type FrameMessage } from "./protocol";

export interface ViewOptions {
  /** -1 renders the composite; >= 0 selects one channel. */
  channel: number;
  /** Value mapped to full brightness. */
  scale: number;
}

/** Per-channel base colors for composite display (RGB in [0,1]). */
const CHANNEL_COLORS: ReadonlyArray<readonly [number, number, number]> = [
  [0.25, 0.85, 1.0],
  [1.0, 0.55, 0.25],
  [0.65, 1.0, 0.45],
  [0.95, 0.4, 0.9],
];

function clamp01(x: number): number {
  return x < 0 ? 0 : x > 1 ? 1 : x;
}

/** Fill `rgba` (length width*height*4) from a frame. */
export function rasterize(
  frame: FrameMessage,
  rgba: Uint8ClampedArray,
  view: ViewOptions = { channel: -1, scale: 1.0 },
): void {
  const { width, height, channels } = frame;
  const cells = width * height;
  if (rgba.length !== cells * 4) {
    throw new Error(`rgba buffer is ${rgba.length} bytes, need ${cells * 4}`);
  }
  if (frame.encoding === ENCODING_RGB_U8) {
    const src = frame.payload as Uint8Array;
    for (let i = 0; i < cells; i++) {
      rgba[i * 4] = src[i * 3];
      rgba[i * 4 + 1] = src[i * 3 + 1];
      rgba[i * 4 + 2] = src[i * 3 + 2];
      rgba[i * 4 + 3] = 255;
    }
    return;
  }
  if (frame.encoding !== ENCODING_RAW_F32) {
    throw new Error(`cannot rasterize encoding ${frame.encoding}`);
  }
  const planes = frame.payload as Float32Array;
  const inv = view.scale > 0 ? 1 / view.scale : 1;
  for (let i = 0; i < cells; i++) {
    let r = 0;
    let g = 0;
    let b = 0;
    if (view.channel >= 0 && view.channel < channels) {
      const v = clamp01(planes[view.channel * cells + i] * inv);
      r = v;
      g = v * 0.92;
      b = v * 0.55;
    } else {
      for (let c = 0; c < channels; c++) {
        const v = clamp01(planes[c * cells + i] * inv);
        const color = CHANNEL_COLORS[c % CHANNEL_COLORS.length];
        r += v * color[0];
        g += v * color[1];
        b += v * color[2];
      }
    }
    rgba[i * 4] = Math.round(clamp01(r) * 255);
    rgba[i * 4 + 1] = Math.round(clamp01(g) * 255);
    rgba[i * 4 + 2] = Math.round(clamp01(b) * 255);
    rgba[i * 4 + 3] = 255;
  }
}

/** Draw a frame onto a canvas at native resolution. */
export function renderFrame(
  canvas: HTMLCanvasElement,
  frame: FrameMessage,
  view?: ViewOptions,
): void {
  if (canvas.width !== frame.width || canvas.height !== frame.height) {
    canvas.width = frame.width;
    canvas.height = frame.height;
  }
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const image = ctx.createImageData(frame.width, frame.height);
  rasterize(frame, image.data, view);
  ctx.putImageData(image, 0, 0);
}
