import { describe, expect, it } from "vitest";

import { brushCommand, canvasCell, sliderValue, SLIDERS } from "../src/controls";
import { injectCommand } from "../src/palette";
import type { SessionConfig } from "../src/protocol";
import { SessionStore } from "../src/store";

const config: SessionConfig = {
  width: 64, height: 64, channels: 1, mode: "flow", embedding: true,
  s: 0.65, dt: 0.2, theta_A: 2, n: 2, h: [0.3, 0.9], n_kernels: 2,
  running: true, step: 0,
};

describe("slider wiring", () => {
  it("keeps the temperature slider above the identity point", () => {
    const temperature = SLIDERS.find((s) => s.name === "s")!;
    expect(temperature.min).toBeGreaterThan(0.5);
    expect(temperature.max).toBe(2.0);
  });

  it("reads scalar and indexed values from the config mirror", () => {
    expect(sliderValue(config, SLIDERS[0])).toBe(0.65);
    expect(
      sliderValue(config, { name: "h", label: "", min: 0, max: 1, step: 0.01, index: 1 }),
    ).toBe(0.9);
  });
});

describe("brush", () => {
  it("turns one brush application into one rect paint command", () => {
    const store = new SessionStore();
    store.brush = { tool: "matter", radius: 1, value: 1.0 };
    const cmd = brushCommand(store, 10, 20);
    expect(cmd).toEqual({
      op: "paint", layer: "matter",
      y: 9, x: 19, height: 3, width: 3, value: 1.0,
    });
  });

  it("maps the erase tool to erase commands", () => {
    const store = new SessionStore();
    store.brush = { tool: "erase", radius: 0, value: 0 };
    expect(brushCommand(store, 5, 5)).toEqual({
      op: "erase", y: 5, x: 5, height: 1, width: 1,
    });
  });

  it("translates scaled canvas coordinates to cell indices", () => {
    // 64-cell canvas displayed at 512px: one cell is an 8px block.
    const cell = canvasCell(
      { width: 64, height: 64 },
      { left: 0, top: 0, width: 512, height: 512 },
      100,
      17,
    );
    expect(cell).toEqual({ y: 2, x: 12 });
  });
});

describe("species palette", () => {
  it("injects the selected preset centered on the clicked cell", () => {
    const store = new SessionStore();
    store.palette = [
      { name: "a", params: [0.1, 0.2], color: "#fff" },
      { name: "b", params: [0.9, 0.8], color: "#000" },
    ];
    store.selectedSpecies = 1;
    const cmd = injectCommand(store, 32, 40, 8);
    expect(cmd).toEqual({
      op: "inject_species", y: 28, x: 36, patch_side: 8, params: [0.9, 0.8],
    });
  });
});
