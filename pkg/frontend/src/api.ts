import type { SessionRequest, SessionView, WhatIfPreview } from "./types.js";

// Error categories the UI must render distinctly: a 409 means someone else
// moved the trial forward (reload), a 422 is a fixable input problem, and
// anything 5xx/network is out of the clinician's hands.
export type ApiErrorKind = "conflict" | "validation" | "server" | "network" | "not-found";

export class ApiError extends Error {
  kind: ApiErrorKind;
  status: number | null;

  constructor(kind: ApiErrorKind, status: number | null, message: string) {
    super(message);
    this.kind = kind;
    this.status = status;
  }
}

function classify(status: number): ApiErrorKind {
  if (status === 409) return "conflict";
  if (status === 422) return "validation";
  if (status === 404) return "not-found";
  return "server";
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(`${base}${path}`, init);
  } catch (err) {
    throw new ApiError("network", null, `service unreachable: ${String(err)}`);
  }
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = (await res.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(classify(res.status), res.status, detail);
  }
  return (await res.json()) as T;
}

export class TrialApi {
  constructor(public base: string) {}

  healthz(): Promise<{ status: string }> {
    return request(this.base, "/healthz");
  }

  createSession(body: SessionRequest): Promise<SessionView> {
    return request(this.base, "/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getSession(id: string): Promise<SessionView> {
    return request(this.base, `/sessions/${encodeURIComponent(id)}`);
  }

  recordCohort(id: string, dlt: number): Promise<SessionView> {
    return request(this.base, `/sessions/${encodeURIComponent(id)}/cohorts`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dlt }),
    });
  }

  whatIf(id: string, dlt: number): Promise<WhatIfPreview> {
    return request(this.base, `/sessions/${encodeURIComponent(id)}/whatif?dlt=${dlt}`);
  }

  finalize(id: string): Promise<{ selected_mtd: number }> {
    return request(this.base, `/sessions/${encodeURIComponent(id)}/finalize`, {
      method: "POST",
    });
  }
}
