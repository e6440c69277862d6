/**
 * Typed client for the labelling service. Every server interaction the UI
 * performs goes through this class; the request log makes that auditable.
 */

export interface Point {
  id: string;
  x: number;
  y: number;
  t_start_s: number;
  t_end_s: number;
  recording_id: string;
  label: string | null;
}

export interface SessionInfo {
  session_id: string;
  n_snippets: number;
  labels: string[];
}

export interface JobStatus {
  status: "running" | "done" | "error";
  method: string;
  detail?: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  readonly requestLog: string[] = [];

  constructor(private baseUrl: string, private fetchFn: typeof fetch = fetch) {}

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    this.requestLog.push(`${method} ${path.replace(/\/[0-9a-f]{12}(\/|$)/, "/{id}$1")}`);
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const parsed = await resp.json();
        if (parsed && typeof parsed.detail === "string") detail = parsed.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return resp;
  }

  async createSession(
    recordingPaths: string[],
    snippetMs = 500,
    projection: "pca" | "tsne" = "pca",
    seed = 0,
  ): Promise<SessionInfo> {
    const resp = await this.request("POST", "/sessions", {
      recording_paths: recordingPaths,
      snippet_ms: snippetMs,
      projection,
      seed,
    });
    return resp.json();
  }

  async points(sessionId: string): Promise<Point[]> {
    const resp = await this.request("GET", `/sessions/${sessionId}/points`);
    return resp.json();
  }

  async audio(sessionId: string, snippetId: string): Promise<ArrayBuffer> {
    const resp = await this.request(
      "GET",
      `/sessions/${sessionId}/audio/${encodeURIComponent(snippetId)}`,
    );
    return resp.arrayBuffer();
  }

  async assignLabels(
    sessionId: string,
    snippetIds: string[],
    label: string,
  ): Promise<number> {
    const resp = await this.request("POST", `/sessions/${sessionId}/labels`, {
      snippet_ids: snippetIds,
      label,
    });
    return (await resp.json()).history_len;
  }

  async undo(sessionId: string): Promise<number> {
    const resp = await this.request("POST", `/sessions/${sessionId}/undo`);
    return (await resp.json()).history_len;
  }

  async startProjection(
    sessionId: string,
    method: "pca" | "tsne",
    seed = 0,
  ): Promise<string> {
    const resp = await this.request("POST", `/sessions/${sessionId}/projection`, {
      method,
      seed,
    });
    return (await resp.json()).job_id;
  }

  async pollProjection(sessionId: string, jobId: string): Promise<JobStatus> {
    const resp = await this.request("GET", `/sessions/${sessionId}/projection/${jobId}`);
    return resp.json();
  }

  async exportZip(sessionId: string): Promise<ArrayBuffer> {
    const resp = await this.request("GET", `/sessions/${sessionId}/export`);
    return resp.arrayBuffer();
  }
}
