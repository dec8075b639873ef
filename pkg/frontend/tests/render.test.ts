import { describe, expect, it } from "vitest";

import { ENCODING_RAW_F32, ENCODING_RGB_U8 } from "../src/protocol";
import { rasterize } from "../src/render";

function raw(w: number, h: number, c: number, values: number[]) {
  return {
    step: 0,
    width: w,
    height: h,
    channels: c,
    encoding: ENCODING_RAW_F32,
    payload: Float32Array.from(values),
  };
}

describe("rasterize", () => {
  it("maps an all-zero frame to a uniform background", () => {
    const rgba = new Uint8ClampedArray(4 * 4 * 4);
    rasterize(raw(4, 4, 1, Array(16).fill(0)), rgba);
    for (let i = 0; i < 16; i++) {
      expect(rgba[i * 4]).toBe(0);
      expect(rgba[i * 4 + 1]).toBe(0);
      expect(rgba[i * 4 + 2]).toBe(0);
      expect(rgba[i * 4 + 3]).toBe(255);
    }
  });

  it("puts a single bright cell at the right address", () => {
    const values = Array(12).fill(0);
    values[1 * 4 + 2] = 1.0; // row 1, column 2 of a 4x3 grid
    const rgba = new Uint8ClampedArray(12 * 4);
    rasterize(raw(4, 3, 1, values), rgba);
    for (let i = 0; i < 12; i++) {
      const lit = rgba[i * 4] > 0 || rgba[i * 4 + 1] > 0 || rgba[i * 4 + 2] > 0;
      expect(lit).toBe(i === 6);
    }
  });

  it("renders two channels into distinct color components", () => {
    // Channel 0 lights cell 0; channel 1 lights cell 1.
    const values = [1, 0, 0, 0, /* ch1 */ 0, 1, 0, 0];
    const rgba = new Uint8ClampedArray(4 * 4);
    rasterize(raw(2, 2, 2, values), rgba, { channel: -1, scale: 1 });
    const cell0 = [rgba[0], rgba[1], rgba[2]];
    const cell1 = [rgba[4], rgba[5], rgba[6]];
    expect(cell0).not.toEqual(cell1);
    // channel 0 is blue-leaning, channel 1 red-leaning
    expect(cell0[2]).toBeGreaterThan(cell0[0]);
    expect(cell1[0]).toBeGreaterThan(cell1[2]);
  });

  it("selects a single channel when asked", () => {
    const values = [1, 0, 0, 0, /* ch1 */ 0, 1, 0, 0];
    const rgba = new Uint8ClampedArray(4 * 4);
    rasterize(raw(2, 2, 2, values), rgba, { channel: 1, scale: 1 });
    expect(rgba[0]).toBe(0); // channel 0's cell is dark
    expect(rgba[4]).toBeGreaterThan(0);
  });

  it("copies rgb payloads through unchanged", () => {
    const frame = {
      step: 0,
      width: 2,
      height: 1,
      channels: 3,
      encoding: ENCODING_RGB_U8,
      payload: new Uint8Array([10, 20, 30, 40, 50, 60]),
    };
    const rgba = new Uint8ClampedArray(2 * 4);
    rasterize(frame, rgba);
    expect(Array.from(rgba)).toEqual([10, 20, 30, 255, 40, 50, 60, 255]);
  });

  it("rejects a mismatched output buffer", () => {
    const rgba = new Uint8ClampedArray(3);
    expect(() => rasterize(raw(2, 2, 1, Array(4).fill(0)), rgba)).toThrow();
  });
});
