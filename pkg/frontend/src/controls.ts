// Control panel: every user action becomes exactly one control message.
// The displayed values come from the config mirror (server echo), never
// from the input's own state, so a rejected command leaves the UI at the
// server's value with an inline range hint.

import type { Command, ServerEvent, SessionConfig } from "./protocol";
import type { SessionStore } from "./store";

export type SendFn = (command: Command) => Promise<ServerEvent>;

export interface SliderSpec {
  name: string;
  label: string;
  min: number;
  max: number;
  step: number;
  index?: number;
}

// The reintegration square underfills a cell below s ~ 0.5 (0.5 is the
// exact identity), so the temperature slider starts just above it.
export const SLIDERS: SliderSpec[] = [
  { name: "s", label: "temperature (s)", min: 0.51, max: 2.0, step: 0.01 },
  { name: "dt", label: "time step (dt)", min: 0.01, max: 1.0, step: 0.01 },
  { name: "theta_A", label: "crowding threshold (θ)", min: 0.1, max: 20, step: 0.1 },
  { name: "n", label: "crowding exponent (n)", min: 1, max: 10, step: 0.5 },
];

export function sliderValue(config: SessionConfig, spec: SliderSpec): number {
  if (spec.index !== undefined) {
    const arr = config[spec.name];
    return Array.isArray(arr) ? Number(arr[spec.index]) : NaN;
  }
  return Number(config[spec.name]);
}

export function makeSlider(
  spec: SliderSpec,
  store: SessionStore,
  send: SendFn,
): HTMLElement {
  const row = document.createElement("label");
  row.className = "control-row";
  const text = document.createElement("span");
  text.textContent = spec.label;
  const input = document.createElement("input");
  input.type = "range";
  input.min = String(spec.min);
  input.max = String(spec.max);
  input.step = String(spec.step);
  const readout = document.createElement("output");
  const hint = document.createElement("small");
  hint.className = "hint";
  row.append(text, input, readout, hint);

  const refresh = () => {
    if (!store.config) return;
    const v = sliderValue(store.config, spec);
    input.value = String(v);
    readout.textContent = Number.isFinite(v) ? v.toFixed(2) : "—";
  };
  store.subscribe(refresh);
  refresh();

  input.addEventListener("change", async () => {
    hint.textContent = "";
    const reply = await send({
      op: "set_param",
      name: spec.name,
      value: Number(input.value),
      ...(spec.index !== undefined ? { index: spec.index } : {}),
    });
    if (reply.ok === false) {
      hint.textContent = reply.error ?? "rejected";
      refresh(); // snap back to the server's value
    }
  });
  return row;
}

export function makeKernelSliders(
  store: SessionStore,
  send: SendFn,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "kernel-sliders";
  let built = -1;
  const rebuild = () => {
    const n = store.config?.n_kernels ?? 0;
    if (n === built) return;
    built = n;
    box.replaceChildren();
    for (let i = 0; i < n; i++) {
      box.append(
        makeSlider(
          { name: "h", label: `kernel ${i} weight`, min: 0, max: 1, step: 0.01, index: i },
          store,
          send,
        ),
      );
    }
  };
  store.subscribe(rebuild);
  rebuild();
  return box;
}

export function makeTransportButtons(
  store: SessionStore,
  send: SendFn,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "buttons";
  const pause = document.createElement("button");
  const step = document.createElement("button");
  step.textContent = "step";
  const mutate = document.createElement("button");
  mutate.textContent = "mutate";
  box.append(pause, step, mutate);

  const refresh = () => {
    const running = store.config?.running ?? true;
    pause.textContent = running ? "pause" : "resume";
    step.disabled = running;
  };
  store.subscribe(refresh);
  refresh();

  pause.addEventListener("click", () => {
    void send({ op: store.config?.running ? "pause" : "resume" });
  });
  step.addEventListener("click", () => void send({ op: "step", count: 1 }));
  mutate.addEventListener("click", () => void send({ op: "mutate" }));
  return box;
}

/** Translate a pointer position on the scaled canvas to grid cell indices. */
export function canvasCell(
  canvas: { width: number; height: number },
  rect: { left: number; top: number; width: number; height: number },
  clientX: number,
  clientY: number,
): { y: number; x: number } {
  const x = Math.floor(((clientX - rect.left) / rect.width) * canvas.width);
  const y = Math.floor(((clientY - rect.top) / rect.height) * canvas.height);
  return { y, x };
}

/** One brush application = one rect paint (or erase) command. */
export function brushCommand(
  store: SessionStore,
  y: number,
  x: number,
): Command {
  const { tool, radius, value } = store.brush;
  const side = 2 * radius + 1;
  const y0 = y - radius;
  const x0 = x - radius;
  if (tool === "erase") {
    return { op: "erase", y: y0, x: x0, height: side, width: side };
  }
  return {
    op: "paint",
    layer: tool,
    y: y0,
    x: x0,
    height: side,
    width: side,
    value,
  };
}
