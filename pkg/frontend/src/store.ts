/**
 * Session view state. Every mutation goes through the API client and is
 * reconciled against the server afterwards: labels are applied
 * optimistically for instant recolor, then the authoritative point list
 * is re-fetched so the UI can never drift from what an export would say.
 */

import { ApiClient, Point } from "./api.js";

export type Listener = () => void;

export class LabelStore {
  points: Point[] = [];
  selection = new Set<string>();
  historyLen = 0;
  activeProjection: "pca" | "tsne" = "pca";
  lastError: string | null = null;

  private listeners: Listener[] = [];
  private mutex: Promise<unknown> = Promise.resolve();

  constructor(
    readonly api: ApiClient,
    readonly sessionId: string,
  ) {}

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  /** Server mutations are strictly sequential: each awaits the previous. */
  private serialize<T>(op: () => Promise<T>): Promise<T> {
    const next = this.mutex.then(op, op);
    this.mutex = next.catch(() => undefined);
    return next;
  }

  async refresh(): Promise<void> {
    this.points = await this.api.points(this.sessionId);
    this.selection = new Set(
      [...this.selection].filter((id) => this.points.some((p) => p.id === id)),
    );
    this.emit();
  }

  setSelection(ids: Iterable<string>): void {
    this.selection = new Set(ids);
    this.emit();
  }

  clearSelection(): void {
    this.selection.clear();
    this.emit();
  }

  /** Bulk-label the current selection: one API call with every id, an
   * optimistic recolor, then reconciliation against the server state. */
  bulkLabel(label: string): Promise<void> {
    const ids = [...this.selection];
    if (ids.length === 0) return Promise.resolve();
    return this.serialize(async () => {
      const chosen = new Set(ids);
      for (const p of this.points) {
        if (chosen.has(p.id)) p.label = label;
      }
      this.emit();
      try {
        this.historyLen = await this.api.assignLabels(this.sessionId, ids, label);
        this.lastError = null;
      } catch (err) {
        this.lastError = String(err);
      }
      await this.refresh(); // reconcile (also rolls back on failure)
    });
  }

  undo(): Promise<void> {
    return this.serialize(async () => {
      try {
        this.historyLen = await this.api.undo(this.sessionId);
        this.lastError = null;
      } catch (err) {
        this.lastError = String(err);
      }
      await this.refresh();
    });
  }

  /** Switch projection: background job on the server, poll to done, then
   * reload coordinates. */
  switchProjection(method: "pca" | "tsne", seed = 0, pollMs = 150): Promise<void> {
    return this.serialize(async () => {
      const jobId = await this.api.startProjection(this.sessionId, method, seed);
      for (;;) {
        const status = await this.api.pollProjection(this.sessionId, jobId);
        if (status.status === "done") break;
        if (status.status === "error") {
          this.lastError = status.detail ?? "projection failed";
          this.emit();
          return;
        }
        await new Promise((r) => setTimeout(r, pollMs));
      }
      this.activeProjection = method;
      await this.refresh();
    });
  }

  labelled(): Map<string, string> {
    const out = new Map<string, string>();
    for (const p of this.points) {
      if (p.label !== null) out.set(p.id, p.label);
    }
    return out;
  }
}
