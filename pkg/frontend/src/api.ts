/** Typed client for the scribble-refinement HTTP service. */

import type { RevisionDoc, ServiceStroke, SessionDoc } from "./types.js";

/** Non-2xx response, carrying the parsed `detail` payload when present. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

async function parseOrThrow<T>(res: Response): Promise<T> {
  if (res.ok) {
    return (await res.json()) as T;
  }
  let detail: unknown;
  try {
    const body = (await res.json()) as { detail?: unknown };
    detail = body.detail ?? body;
  } catch {
    detail = res.statusText;
  }
  throw new ApiError(res.status, detail);
}

export class ScribbleApi {
  constructor(private readonly baseUrl = "") {}

  async createSession(
    image: Blob,
    filename: string,
    config?: Record<string, unknown>,
  ): Promise<SessionDoc> {
    const form = new FormData();
    form.append("image", image, filename);
    if (config !== undefined) {
      form.append("config", JSON.stringify(config));
    }
    const res = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: form,
    });
    return parseOrThrow<SessionDoc>(res);
  }

  async getSession(id: string): Promise<SessionDoc> {
    const res = await fetch(`${this.baseUrl}/sessions/${id}`);
    return parseOrThrow<SessionDoc>(res);
  }

  /** Submit strokes. At most one picker stroke is allowed; the guard runs
   * before any request is made. */
  async submitStrokes(id: string, strokes: ServiceStroke[]): Promise<RevisionDoc> {
    const pickers = strokes.filter((s) => s.kind === "picker").length;
    if (pickers > 1) {
      throw new RangeError("at most one red stroke per submission");
    }
    const res = await fetch(`${this.baseUrl}/sessions/${id}/strokes`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ strokes }),
    });
    return parseOrThrow<RevisionDoc>(res);
  }

  async undo(id: string): Promise<RevisionDoc> {
    const res = await fetch(`${this.baseUrl}/sessions/${id}/undo`, {
      method: "POST",
    });
    return parseOrThrow<RevisionDoc>(res);
  }

  /** Fetch a preview URL as returned in a session or revision document. */
  async fetchPreview(url: string): Promise<Blob> {
    const res = await fetch(`${this.baseUrl}${url}`);
    if (!res.ok) {
      throw new ApiError(res.status, res.statusText);
    }
    return res.blob();
  }
}
