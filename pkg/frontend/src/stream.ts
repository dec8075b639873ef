// WebSocket session link: binary messages are frames, text messages are
// JSON events.  Commands get an id so replies can settle their promises.

import {
  decodeFrame,
  FrameDecodeError,
  type Command,
  type ServerEvent,
} from "./protocol";
import type { SessionStore } from "./store";

export interface SessionLink {
  send(command: Command): Promise<ServerEvent>;
  close(): void;
}

/** The subset of WebSocket the link needs; tests supply a loopback fake.
 * Real WebSockets need a cast because their `onmessage` slot is declared
 * against the wider MessageEvent type. */
export interface SocketLike {
  binaryType: string;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  send(data: string): void;
  close(): void;
}

const COMMAND_TIMEOUT_MS = 10_000;

export function connectSession(
  socket: SocketLike,
  store: SessionStore,
  onBadFrame?: (message: string) => void,
): SessionLink {
  socket.binaryType = "arraybuffer";
  let nextId = 1;
  const pending = new Map<
    number,
    { resolve: (e: ServerEvent) => void; timer: ReturnType<typeof setTimeout> }
  >();

  socket.onmessage = (ev) => {
    if (ev.data instanceof ArrayBuffer) {
      try {
        store.pushFrame(decodeFrame(ev.data));
      } catch (err) {
        // A malformed frame is dropped; the stream stays up.
        if (err instanceof FrameDecodeError && onBadFrame) {
          onBadFrame(err.message);
        } else if (!(err instanceof FrameDecodeError)) {
          throw err;
        }
      }
      return;
    }
    const event = JSON.parse(String(ev.data)) as ServerEvent;
    if (event.event === "reply" && typeof event.id === "number") {
      const waiter = pending.get(event.id);
      if (waiter) {
        pending.delete(event.id);
        clearTimeout(waiter.timer);
        waiter.resolve(event);
      }
    }
    store.applyEvent(event);
  };

  socket.onclose = () => {
    for (const { resolve, timer } of pending.values()) {
      clearTimeout(timer);
      resolve({ event: "reply", ok: false, error: "connection closed" });
    }
    pending.clear();
  };

  return {
    send(command: Command): Promise<ServerEvent> {
      const id = nextId++;
      return new Promise((resolve) => {
        const timer = setTimeout(() => {
          pending.delete(id);
          resolve({ event: "reply", ok: false, error: "command timed out", id });
        }, COMMAND_TIMEOUT_MS);
        pending.set(id, { resolve, timer });
        socket.send(JSON.stringify({ ...command, id }));
      });
    },
    close(): void {
      socket.close();
    },
  };
}
