import { describe, expect, it } from "vitest";

import { ENCODING_RAW_F32, type SessionConfig } from "../src/protocol";
import { SessionStore } from "../src/store";

function frame(step: number) {
  return {
    step,
    width: 2,
    height: 2,
    channels: 1,
    encoding: ENCODING_RAW_F32,
    payload: new Float32Array(4).fill(step),
  };
}

const config = (extra: Partial<SessionConfig> = {}): SessionConfig => ({
  width: 2,
  height: 2,
  channels: 1,
  mode: "flow",
  embedding: false,
  s: 0.65,
  dt: 0.2,
  theta_A: 2.0,
  n: 2,
  h: [1, 1],
  n_kernels: 2,
  running: true,
  step: 0,
  ...extra,
});

describe("latest-frame policy", () => {
  it("hands the renderer only the newest frame when it falls behind", () => {
    const store = new SessionStore();
    // Renderer is slow: three frames arrive before one take.
    store.pushFrame(frame(1));
    store.pushFrame(frame(2));
    store.pushFrame(frame(3));
    expect(store.takeFrame()?.step).toBe(3);
    expect(store.takeFrame()).toBeNull();
    expect(store.droppedFrames).toBe(2);
  });

  it("never lets a stale frame overwrite a newer one", () => {
    const store = new SessionStore();
    store.pushFrame(frame(10));
    store.pushFrame(frame(4)); // out-of-order straggler
    expect(store.takeFrame()?.step).toBe(10);
    expect(store.newestStep).toBe(10);
  });
});

describe("config mirror", () => {
  it("updates only from server events", () => {
    const store = new SessionStore();
    expect(store.config).toBeNull();
    store.applyEvent({ event: "config-changed", config: config({ s: 1.0 }) });
    expect(store.config?.s).toBe(1.0);
    store.applyEvent({ event: "reply", ok: true, id: 3 });
    expect(store.config?.s).toBe(1.0); // untouched without a config payload
  });

  it("records rejections and clears them on the next accepted command", () => {
    const store = new SessionStore();
    store.applyEvent({
      event: "reply",
      ok: false,
      error: "s=99.0 outside sanctioned range [0.5, 2.0]",
    });
    expect(store.lastError).toContain("sanctioned range");
    store.applyEvent({ event: "reply", ok: true });
    expect(store.lastError).toBeNull();
  });

  it("notifies subscribers on both frames and events", () => {
    const store = new SessionStore();
    let calls = 0;
    const stop = store.subscribe(() => calls++);
    store.pushFrame(frame(1));
    store.applyEvent({ event: "config-changed", config: config() });
    stop();
    store.pushFrame(frame(2));
    expect(calls).toBe(2);
  });
});
