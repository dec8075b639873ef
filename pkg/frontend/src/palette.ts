// Species palette: named parameter-vector presets for injection into
// embedded worlds.  Colors match the injected patch's on-canvas hue only
// loosely; they identify palette entries, not simulation state.

import type { Command } from "./protocol";
import type { SessionStore, SpeciesPreset } from "./store";
import type { SendFn } from "./controls";

export function defaultPalette(nKernels: number): SpeciesPreset[] {
  const ramp = (lo: number, hi: number) =>
    Array.from({ length: nKernels }, (_, i) =>
      lo + ((hi - lo) * i) / Math.max(1, nKernels - 1),
    );
  return [
    { name: "uniform", params: Array(nKernels).fill(0.8), color: "#4dd8ff" },
    { name: "ascending", params: ramp(0.1, 1.0), color: "#ffa04d" },
    { name: "descending", params: ramp(1.0, 0.1), color: "#a0ff4d" },
  ];
}

export function injectCommand(
  store: SessionStore,
  y: number,
  x: number,
  patchSide = 8,
): Command {
  const preset = store.palette[store.selectedSpecies];
  return {
    op: "inject_species",
    y: y - Math.floor(patchSide / 2),
    x: x - Math.floor(patchSide / 2),
    patch_side: patchSide,
    params: preset.params,
  };
}

export function makePalette(store: SessionStore, send: SendFn): HTMLElement {
  void send;
  const box = document.createElement("div");
  box.className = "palette";
  const rebuild = () => {
    box.replaceChildren();
    store.palette.forEach((preset, i) => {
      const chip = document.createElement("button");
      chip.className = "chip" + (i === store.selectedSpecies ? " selected" : "");
      chip.style.setProperty("--chip-color", preset.color);
      chip.textContent = preset.name;
      chip.addEventListener("click", () => {
        store.selectedSpecies = i;
        rebuild();
      });
      box.append(chip);
    });
  };
  rebuild();
  return box;
}
