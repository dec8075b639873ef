import {
  brushCommand,
  canvasCell,
  makeKernelSliders,
  makeSlider,
  makeTransportButtons,
  SLIDERS,
} from "./controls";
import { defaultPalette, injectCommand, makePalette } from "./palette";
import { renderFrame } from "./render";
import { SessionStore } from "./store";
import { connectSession, type SocketLike } from "./stream";
import "./style.css";

async function boot(): Promise<void> {
  const app = document.getElementById("app")!;
  const params = new URLSearchParams(location.search);
  const seed = Number(params.get("seed") ?? "0");
  const stride = Number(params.get("stride") ?? "1");

  const created = await fetch("/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({
      width: Number(params.get("width") ?? "128"),
      height: Number(params.get("height") ?? "128"),
      channels: Number(params.get("channels") ?? "1"),
      embedding: params.get("embedding") === "1",
      seed,
    }),
  });
  if (!created.ok) {
    app.textContent = `session rejected: ${await created.text()}`;
    return;
  }
  const { id } = (await created.json()) as { id: string };

  const store = new SessionStore();
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const socket = new WebSocket(
    `${proto}://${location.host}/sessions/${id}/stream?stride=${stride}`,
  );
  const badge = document.createElement("div");
  badge.className = "error-badge";
  const link = connectSession(socket as unknown as SocketLike, store, (msg) => {
    badge.textContent = `bad frame dropped: ${msg}`;
  });
  await link.send({ op: "get_config" });
  store.palette = defaultPalette(store.config?.n_kernels ?? 0);

  const canvas = document.createElement("canvas");
  canvas.className = "world";

  // Decoupled render loop: take whatever frame is newest; skipped frames
  // were already dropped in the store.
  const paint = () => {
    const frame = store.takeFrame();
    if (frame) renderFrame(canvas, frame);
    requestAnimationFrame(paint);
  };
  requestAnimationFrame(paint);

  let dragging = false;
  canvas.addEventListener("pointerdown", (ev) => {
    const cell = canvasCell(canvas, canvas.getBoundingClientRect(), ev.clientX, ev.clientY);
    if (ev.shiftKey && store.config?.embedding) {
      void link.send(injectCommand(store, cell.y, cell.x));
      return;
    }
    dragging = true;
    void link.send(brushCommand(store, cell.y, cell.x));
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const cell = canvasCell(canvas, canvas.getBoundingClientRect(), ev.clientX, ev.clientY);
    void link.send(brushCommand(store, cell.y, cell.x));
  });
  window.addEventListener("pointerup", () => (dragging = false));

  window.addEventListener("keydown", (ev) => {
    if (ev.key === " ") {
      ev.preventDefault();
      void link.send({ op: store.config?.running ? "pause" : "resume" });
    } else if (ev.key === "s") {
      void link.send({ op: "step", count: 1 });
    }
  });

  const panel = document.createElement("aside");
  panel.className = "panel";
  const send = link.send.bind(link);
  panel.append(makeTransportButtons(store, send));
  for (const spec of SLIDERS) panel.append(makeSlider(spec, store, send));
  panel.append(makeKernelSliders(store, send));
  if (store.config?.embedding) panel.append(makePalette(store, send));

  const status = document.createElement("div");
  status.className = "status";
  store.subscribe(() => {
    status.textContent =
      `step ${store.config?.step ?? store.newestStep} · ` +
      `dropped ${store.droppedFrames}` +
      (store.lastError ? ` · ${store.lastError}` : "");
  });

  app.append(canvas, panel, status, badge);
}

void boot();
