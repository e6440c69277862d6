import { describe, expect, it } from "vitest";

import { ApiClient, Point } from "../src/api.js";
import { PlaybackQueue } from "../src/audio.js";
import { LabelStore } from "../src/store.js";

/** In-memory fake of the labelling service, mimicking its semantics
 * (append-only history, undo popping the last assignment). */
class FakeServer {
  labels = new Map<string, string>();
  history: Array<{ ids: string[]; label: string }> = [];
  failNextLabel = false;

  constructor(public pointIds: string[]) {}

  fetch = async (url: string | URL | Request, init?: RequestInit): Promise<Response> => {
    const u = String(url);
    const method = init?.method ?? "GET";
    if (method === "GET" && u.endsWith("/points")) {
      const points: Point[] = this.pointIds.map((id, i) => ({
        id,
        x: i,
        y: -i,
        t_start_s: i * 0.5,
        t_end_s: (i + 1) * 0.5,
        recording_id: "rec",
        label: this.labels.get(id) ?? null,
      }));
      return new Response(JSON.stringify(points), { status: 200 });
    }
    if (method === "POST" && u.endsWith("/labels")) {
      if (this.failNextLabel) {
        this.failNextLabel = false;
        return new Response(JSON.stringify({ detail: "boom" }), { status: 500 });
      }
      const body = JSON.parse(String(init?.body));
      this.history.push({ ids: body.snippet_ids, label: body.label });
      for (const id of body.snippet_ids) this.labels.set(id, body.label);
      return new Response(JSON.stringify({ history_len: this.history.length }), {
        status: 200,
      });
    }
    if (method === "POST" && u.endsWith("/undo")) {
      if (this.history.length === 0) {
        return new Response(JSON.stringify({ detail: "empty" }), { status: 409 });
      }
      this.history.pop();
      this.labels.clear();
      for (const ev of this.history) {
        for (const id of ev.ids) this.labels.set(id, ev.label);
      }
      return new Response(JSON.stringify({ history_len: this.history.length }), {
        status: 200,
      });
    }
    return new Response("not found", { status: 404 });
  };
}

function makeStore(server: FakeServer): LabelStore {
  const api = new ApiClient("http://fake", server.fetch as typeof fetch);
  return new LabelStore(api, "abc123def456");
}

describe("LabelStore", () => {
  it("bulk-labels the selection in one call and reconciles", async () => {
    const server = new FakeServer(["a", "b", "c", "d"]);
    const store = makeStore(server);
    await store.refresh();
    store.setSelection(["a", "c"]);
    await store.bulkLabel("clean_whisper");
    expect(server.history).toHaveLength(1);
    expect(server.history[0].ids).toEqual(["a", "c"]);
    const byId = new Map(store.points.map((p) => [p.id, p.label]));
    expect(byId.get("a")).toBe("clean_whisper");
    expect(byId.get("b")).toBeNull();
  });

  it("undo reverts to server state", async () => {
    const server = new FakeServer(["a", "b"]);
    const store = makeStore(server);
    await store.refresh();
    store.setSelection(["a", "b"]);
    await store.bulkLabel("noise");
    store.setSelection(["a"]);
    await store.bulkLabel("other");
    await store.undo();
    const byId = new Map(store.points.map((p) => [p.id, p.label]));
    expect(byId.get("a")).toBe("noise");
    expect(store.historyLen).toBe(1);
  });

  it("a failed mutation surfaces and optimistic state rolls back", async () => {
    const server = new FakeServer(["a"]);
    const store = makeStore(server);
    await store.refresh();
    server.failNextLabel = true;
    store.setSelection(["a"]);
    await store.bulkLabel("noise");
    expect(store.lastError).toContain("boom");
    expect(store.points[0].label).toBeNull(); // reconciled back
  });

  it("empty selection is a no-op", async () => {
    const server = new FakeServer(["a"]);
    const store = makeStore(server);
    await store.refresh();
    await store.bulkLabel("noise");
    expect(server.history).toHaveLength(0);
  });
});

describe("PlaybackQueue", () => {
  it("plays sequentially in selection order", async () => {
    const played: string[] = [];
    const queue = new PlaybackQueue(
      async (id) => new TextEncoder().encode(id).buffer,
      async (_wav, id) => {
        played.push(id);
      },
    );
    const done = await queue.play(["x", "y", "z"]);
    expect(played).toEqual(["x", "y", "z"]);
    expect(done).toEqual(["x", "y", "z"]);
  });

  it("stop halts before further fetches", async () => {
    const fetched: string[] = [];
    const queue = new PlaybackQueue(
      async (id) => {
        fetched.push(id);
        return new ArrayBuffer(1);
      },
      async () => {
        queue.stop();
      },
    );
    await queue.play(["a", "b", "c"]);
    expect(fetched).toEqual(["a"]);
  });

  it("skips failed fetches and continues", async () => {
    const skipped: string[] = [];
    const played: string[] = [];
    const queue = new PlaybackQueue(
      async (id) => {
        if (id === "bad") throw new Error("404");
        return new ArrayBuffer(1);
      },
      async (_wav, id) => {
        played.push(id);
      },
      { onSkip: (id) => skipped.push(id) },
    );
    await queue.play(["good1", "bad", "good2"]);
    expect(skipped).toEqual(["bad"]);
    expect(played).toEqual(["good1", "good2"]);
  });
});
