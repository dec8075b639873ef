// Client-side view of one live session.  The config mirror only changes
// when the server says so (config-changed events and command replies); the
// frame slot is latest-wins so a slow renderer never falls behind the
// stream.

import type { FrameMessage, ServerEvent, SessionConfig } from "./protocol";

export interface BrushState {
  tool: "matter" | "food" | "wall" | "erase";
  radius: number;
  value: number;
}

export interface SpeciesPreset {
  name: string;
  params: number[];
  color: string;
}

export type StoreListener = () => void;

export class SessionStore {
  config: SessionConfig | null = null;
  brush: BrushState = { tool: "matter", radius: 2, value: 1.0 };
  palette: SpeciesPreset[] = [];
  selectedSpecies = 0;
  lastError: string | null = null;

  private latest: FrameMessage | null = null;
  private latestStep = -1;
  private dropped = 0;
  private listeners = new Set<StoreListener>();

  subscribe(fn: StoreListener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  /** Stash an incoming frame; stale frames (older step) are ignored and a
   * not-yet-rendered frame is simply replaced. */
  pushFrame(frame: FrameMessage): void {
    if (frame.step < this.latestStep) return;
    if (this.latest !== null) this.dropped += 1;
    this.latest = frame;
    this.latestStep = frame.step;
    this.notify();
  }

  /** Hand the newest frame to the renderer exactly once. */
  takeFrame(): FrameMessage | null {
    const frame = this.latest;
    this.latest = null;
    return frame;
  }

  get newestStep(): number {
    return this.latestStep;
  }

  get droppedFrames(): number {
    return this.dropped;
  }

  /** Apply a server JSON event.  This is the only path that mutates the
   * config mirror. */
  applyEvent(event: ServerEvent): void {
    if (event.config !== undefined) {
      this.config = event.config;
    }
    if (event.ok === false && typeof event.error === "string") {
      this.lastError = event.error;
    } else if (event.event === "reply" && event.ok === true) {
      this.lastError = null;
    }
    this.notify();
  }
}
