/**
 * Browser entry point: session bootstrap, canvas interaction (pan/zoom,
 * rectangle + lasso selection), hotkey bulk labelling, audition and
 * export. All state changes flow through LabelStore -> ApiClient.
 */

import { ApiClient } from "./api.js";
import { PlaybackQueue } from "./audio.js";
import { colorFor, LABEL_COLORS, LABEL_HOTKEYS } from "./colors.js";
import { ScatterRenderer, panBy, toWorld, zoomAt } from "./scatter.js";
import { selectInPolygon, selectInRect, XY } from "./selection.js";
import { LabelStore } from "./store.js";

type Mode = "lasso" | "rect" | "pan";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "http://127.0.0.1:8765";
  const api = new ApiClient(baseUrl);

  const canvas = el<HTMLCanvasElement>("scatter");
  const status = el<HTMLDivElement>("status");
  const legend = el<HTMLDivElement>("legend");

  legend.innerHTML = Object.entries(LABEL_COLORS)
    .map(([label, color], i) =>
      `<span class="chip"><span class="dot" style="background:${color}"></span>` +
      `${i + 1}: ${label}</span>`)
    .join(" ") +
    `<span class="chip"><span class="dot" style="background:${colorFor(null)}"></span>` +
    `unlabelled</span>`;

  let sessionId = params.get("session");
  if (!sessionId) {
    const paths = (params.get("recordings") ?? "").split(",").filter(Boolean);
    if (paths.length === 0) {
      status.textContent =
        "No session. Open with ?session=<id> or ?recordings=/path/a.wav,/path/b.wav";
      return;
    }
    const info = await api.createSession(paths, Number(params.get("snippet_ms") ?? 500));
    sessionId = info.session_id;
  }

  const store = new LabelStore(api, sessionId);
  await store.refresh();
  const renderer = new ScatterRenderer(canvas, store.points);

  let mode: Mode = "lasso";
  let dragStart: XY | null = null;
  let lassoPath: XY[] = [];
  let rectCorner: XY | null = null;
  let playingId: string | null = null;

  const queue = new PlaybackQueue(
    (id) => api.audio(sessionId!, id),
    (wav) =>
      new Promise<void>((resolve, reject) => {
        const blob = new Blob([wav], { type: "audio/wav" });
        const url = URL.createObjectURL(blob);
        const audio = new Audio(url);
        audio.onended = () => {
          URL.revokeObjectURL(url);
          resolve();
        };
        audio.onerror = () => {
          URL.revokeObjectURL(url);
          reject(new Error("playback failed"));
        };
        void audio.play();
      }),
    {
      onStart: (id) => {
        playingId = id;
        draw();
      },
      onSkip: (id) => {
        status.textContent = `skipped ${id} (fetch failed)`;
      },
      onDone: () => {
        playingId = null;
        draw();
      },
    },
  );

  function draw(): void {
    renderer.draw(store.points, store.selection, {
      lasso: mode === "lasso" ? lassoPath : undefined,
      rect:
        mode === "rect" && rectCorner && dragStart
          ? { a: dragStart, b: rectCorner }
          : undefined,
      playingId,
    });
    const n = store.points.length;
    const labelled = store.labelled().size;
    status.textContent =
      `${n} snippets | ${labelled} labelled | ${store.selection.size} selected | ` +
      `history ${store.historyLen} | ${store.activeProjection}` +
      (store.lastError ? ` | error: ${store.lastError}` : "");
  }

  store.onChange(draw);

  canvas.addEventListener("mousedown", (ev) => {
    const p = { x: ev.offsetX, y: ev.offsetY };
    dragStart = p;
    if (mode === "lasso") lassoPath = [p];
    if (mode === "rect") rectCorner = p;
  });

  canvas.addEventListener("mousemove", (ev) => {
    if (!dragStart) return;
    const p = { x: ev.offsetX, y: ev.offsetY };
    if (mode === "pan") {
      renderer.viewport = panBy(renderer.viewport, p.x - dragStart.x, p.y - dragStart.y);
      dragStart = p;
    } else if (mode === "lasso") {
      lassoPath.push(p);
    } else if (mode === "rect") {
      rectCorner = p;
    }
    draw();
  });

  canvas.addEventListener("mouseup", () => {
    if (!dragStart) return;
    const vp = renderer.viewport;
    if (mode === "lasso" && lassoPath.length > 2) {
      const polygon = lassoPath.map((s) => toWorld(s, vp));
      store.setSelection(selectInPolygon(store.points, polygon).map((p) => p.id));
    } else if (mode === "rect" && rectCorner) {
      const a = toWorld(dragStart, vp);
      const b = toWorld(rectCorner, vp);
      store.setSelection(
        selectInRect(store.points, { x0: a.x, y0: a.y, x1: b.x, y1: b.y }).map((p) => p.id),
      );
    }
    dragStart = null;
    lassoPath = [];
    rectCorner = null;
    draw();
  });

  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    renderer.viewport = zoomAt(
      renderer.viewport,
      { x: ev.offsetX, y: ev.offsetY },
      ev.deltaY < 0 ? 1.15 : 1 / 1.15,
    );
    draw();
  });

  window.addEventListener("keydown", (ev) => {
    if (ev.key in LABEL_HOTKEYS) {
      void store.bulkLabel(LABEL_HOTKEYS[ev.key]);
    } else if (ev.key === "u") {
      void store.undo();
    } else if (ev.key === " ") {
      ev.preventDefault();
      if (queue.isRunning) {
        queue.stop();
      } else {
        const order = store.points
          .filter((p) => store.selection.has(p.id))
          .map((p) => p.id);
        void queue.play(order);
      }
    } else if (ev.key === "Escape") {
      queue.stop();
      store.clearSelection();
    } else if (ev.key === "l") {
      mode = "lasso";
      draw();
    } else if (ev.key === "r") {
      mode = "rect";
      draw();
    } else if (ev.key === "p") {
      mode = "pan";
      draw();
    } else if (ev.key === "t") {
      void store.switchProjection("tsne");
    } else if (ev.key === "c") {
      void store.switchProjection("pca");
    } else if (ev.key === "f") {
      renderer.refit(store.points);
      draw();
    } else if (ev.key === "e") {
      void api.exportZip(sessionId!).then((buf) => {
        const blob = new Blob([buf], { type: "application/zip" });
        const a = document.createElement("a");
        a.href = URL.createObjectURL(blob);
        a.download = `${sessionId}_labels.zip`;
        a.click();
        URL.revokeObjectURL(a.href);
      });
    }
  });

  draw();
}

void boot();
