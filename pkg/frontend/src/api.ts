/** Typed client for the session service. All geometry the studio displays
 * round-trips through these calls; the client never post-processes it. */

import type {
  CloudSummary,
  DerivedGeometry,
  OptimizationResult,
  OptimizeRequest,
  PlaneAdjustment,
  SearchSpaceSpec,
  SessionInfo,
  Stroke,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(detail);
  }
}

async function raise(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class StudioApi {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}/v1${path}`;
  }

  async createSession(): Promise<SessionInfo> {
    const r = await fetch(this.url("/sessions"), { method: "POST" });
    if (!r.ok) await raise(r);
    return r.json();
  }

  async getSession(sessionId: string): Promise<SessionInfo> {
    const r = await fetch(this.url(`/sessions/${sessionId}`));
    if (!r.ok) await raise(r);
    return r.json();
  }

  async uploadCloud(sessionId: string, ply: string | Uint8Array): Promise<CloudSummary> {
    const r = await fetch(this.url(`/sessions/${sessionId}/cloud`), {
      method: "PUT",
      headers: { "content-type": "application/octet-stream" },
      body: ply as BodyInit,
    });
    if (!r.ok) await raise(r);
    return r.json();
  }

  async putAnnotations(
    sessionId: string,
    strokes: Stroke[],
    searchspace: SearchSpaceSpec | null,
  ): Promise<DerivedGeometry> {
    const r = await fetch(this.url(`/sessions/${sessionId}/annotations`), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ strokes, searchspace }),
    });
    if (!r.ok) await raise(r);
    return r.json();
  }

  async startOptimize(sessionId: string, body: OptimizeRequest): Promise<SessionInfo> {
    const r = await fetch(this.url(`/sessions/${sessionId}/optimize`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!r.ok) await raise(r);
    return r.json();
  }

  async getResult(sessionId: string): Promise<OptimizationResult> {
    const r = await fetch(this.url(`/sessions/${sessionId}/result`));
    if (!r.ok) await raise(r);
    return r.json();
  }

  async patchSearchSpace(
    sessionId: string,
    adjustment: PlaneAdjustment,
  ): Promise<SearchSpaceSpec> {
    const r = await fetch(this.url(`/sessions/${sessionId}/searchspace`), {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(adjustment),
    });
    if (!r.ok) await raise(r);
    return r.json();
  }
}
