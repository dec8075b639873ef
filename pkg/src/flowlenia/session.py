"""Live sessions: a stepping loop with a between-steps command queue.

Each session owns one :class:`~flowlenia.sim.Simulation` and a worker
thread.  Commands arrive on a queue and are drained between steps, so every
frame is produced entirely under one configuration version.  Subscribers get
latest-frame semantics: a slow consumer never blocks the stepping loop, it
just skips to the newest frame.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from flowlenia.frames import FrameMessage, encode_frame, encode_frame_rgb
from flowlenia.render import composite_rgb
from flowlenia.sim import Simulation

COMMAND_TIMEOUT = 10.0


@dataclass
class Subscriber:
    """Latest-frame mailbox plus a queue of JSON events."""

    stride: int = 1
    rgb: bool = False          # server-side composite for thin clients
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _event: threading.Event = field(default_factory=threading.Event)
    _frame: FrameMessage | None = None
    _events: list = field(default_factory=list)

    def publish_frame(self, frame: FrameMessage) -> None:
        with self._lock:
            self._frame = frame
        self._event.set()

    def publish_event(self, event: dict) -> None:
        with self._lock:
            self._events.append(event)
        self._event.set()

    def poll(self, timeout: float | None = None):
        """Wait for news: returns (frame_or_None, [events])."""
        if not self._event.wait(timeout):
            return None, []
        with self._lock:
            frame, self._frame = self._frame, None
            events, self._events = self._events, []
            self._event.clear()
        return frame, events


class Session:
    """One simulation, one stepping thread, many subscribers."""

    def __init__(self, sim: Simulation):
        self.sim = sim
        self.running = False
        self._pending_steps = 0
        self._commands: queue.Queue = queue.Queue()
        self._subscribers: list[Subscriber] = []
        self._sub_lock = threading.Lock()
        self._alive = True
        self._wake = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    # -- public API ---------------------------------------------------------

    def submit(self, command: dict) -> dict:
        """Queue a command and wait for its reply (applied between steps)."""
        done = threading.Event()
        box: dict[str, Any] = {}

        def resolve(reply):
            box["reply"] = reply
            done.set()

        self._commands.put((command, resolve))
        self._wake.set()
        if not done.wait(COMMAND_TIMEOUT):
            return {"ok": False, "error": "command timed out"}
        return box["reply"]

    def subscribe(self, stride: int = 1, rgb: bool = False) -> Subscriber:
        sub = Subscriber(stride=max(1, int(stride)), rgb=bool(rgb))
        with self._sub_lock:
            self._subscribers.append(sub)
        # seed new subscribers with the current state immediately
        sub.publish_frame(self._encode(sub))
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        with self._sub_lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def close(self) -> None:
        self._alive = False
        self._wake.set()
        self._thread.join(timeout=5.0)

    # -- stepping loop --------------------------------------------------------

    def _loop(self) -> None:
        while self._alive:
            self._drain_commands()
            if not self._alive:
                break
            if self.running or self._pending_steps > 0:
                if self._pending_steps > 0:
                    self._pending_steps -= 1
                self.sim.step()
                self._broadcast_frame()
            else:
                self._wake.wait(timeout=0.05)
                self._wake.clear()

    def _drain_commands(self) -> None:
        while True:
            try:
                command, resolve = self._commands.get_nowait()
            except queue.Empty:
                return
            try:
                reply = self._apply(command)
            except ValueError as exc:
                reply = {"ok": False, "error": str(exc)}
            resolve(reply)

    def _encode(self, sub: Subscriber) -> FrameMessage:
        if sub.rgb:
            return encode_frame_rgb(self.sim.step_index,
                                    composite_rgb(self.sim.A))
        return encode_frame(self.sim.step_index, self.sim.A)

    def _broadcast_frame(self) -> None:
        step = self.sim.step_index
        cache: dict[bool, FrameMessage] = {}
        with self._sub_lock:
            subscribers = list(self._subscribers)
        for sub in subscribers:
            if step % sub.stride == 0:
                if sub.rgb not in cache:
                    cache[sub.rgb] = self._encode(sub)
                sub.publish_frame(cache[sub.rgb])

    def _broadcast_event(self, event: dict) -> None:
        with self._sub_lock:
            subscribers = list(self._subscribers)
        for sub in subscribers:
            sub.publish_event(event)

    # -- command handlers -----------------------------------------------------

    def _apply(self, command: dict) -> dict:
        op = command.get("op")
        sim = self.sim
        if op == "get_config":
            return {"ok": True, "config": self._config_view()}
        if op == "get_stats":
            report = sim.last_report
            return {
                "ok": True,
                "step": sim.step_index,
                "mass": [float(x) for x in sim.mass()],
                "max_displacement": None if report is None else report.max_displacement,
                "clamped_fraction": None if report is None else report.clamped_fraction,
            }
        if op == "set_param":
            sim.set_param(command["name"], command["value"],
                          index=command.get("index"))
            self._broadcast_event({"event": "config-changed",
                                   "config": self._config_view()})
            return {"ok": True, "name": command["name"],
                    "value": sim.get_param(command["name"],
                                           command.get("index"))}
        if op == "pause":
            self.running = False
            return {"ok": True, "running": False}
        if op == "resume":
            self.running = True
            return {"ok": True, "running": True}
        if op == "step":
            self._pending_steps += int(command.get("count", 1))
            return {"ok": True, "pending": self._pending_steps}
        if op == "paint":
            sim.paint(command.get("layer", "matter"),
                      int(command["y"]), int(command["x"]),
                      int(command.get("height", 1)), int(command.get("width", 1)),
                      float(command["value"]), channel=command.get("channel"))
            self._broadcast_frame_now()
            return {"ok": True, "mass": [float(x) for x in sim.mass()]}
        if op == "erase":
            sim.erase(int(command["y"]), int(command["x"]),
                      int(command.get("height", 1)), int(command.get("width", 1)))
            self._broadcast_frame_now()
            return {"ok": True, "mass": [float(x) for x in sim.mass()]}
        if op == "inject_species":
            sim.inject_species(int(command["y"]), int(command["x"]),
                               int(command["patch_side"]),
                               list(command["params"]))
            self._broadcast_frame_now()
            return {"ok": True}
        if op == "mutate":
            sim.mutate(radius=command.get("radius"), sigma=command.get("sigma"))
            return {"ok": True}
        raise ValueError(f"unknown op {op!r}")

    def _broadcast_frame_now(self) -> None:
        """Push the edited state even while paused."""
        cache: dict[bool, FrameMessage] = {}
        with self._sub_lock:
            subscribers = list(self._subscribers)
        for sub in subscribers:
            if sub.rgb not in cache:
                cache[sub.rgb] = self._encode(sub)
            sub.publish_frame(cache[sub.rgb])

    def _config_view(self) -> dict:
        sim = self.sim
        return {
            "width": sim.config.width,
            "height": sim.config.height,
            "channels": sim.config.channels,
            "mode": sim.config.mode,
            "embedding": sim.config.embedding,
            "s": sim.rules.s,
            "dt": sim.rules.dt,
            "theta_A": sim.rules.theta_A,
            "n": sim.rules.n,
            "h": [float(x) for x in sim.rules.h],
            "growths": [{"mu": g.mu, "sigma": g.sigma} for g in sim.rules.growths],
            "n_kernels": len(sim.rules.kernels),
            "running": self.running,
            "step": sim.step_index,
        }
