/** Thin fetch client for the review API. The UI is read-only over findings;
 * the only write is POST /api/feedback. */

import type { FeedbackRecordDto, SummaryDto, TriageResultDto } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface FeedbackRequest {
  fingerprint: string;
  analyst_verdict: "true_positive" | "false_positive";
  note: string;
  analyst_id: string;
}

export interface FeedbackAck {
  position: number;
  record: FeedbackRecordDto;
}

async function parseError(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { error?: string };
    if (body.error) detail = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async loadFindings(): Promise<TriageResultDto[]> {
    const resp = await fetch(this.url("/api/findings"));
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as TriageResultDto[];
  }

  async loadFinding(fingerprint: string): Promise<TriageResultDto> {
    const resp = await fetch(this.url(`/api/findings/${encodeURIComponent(fingerprint)}`));
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as TriageResultDto;
  }

  async summary(): Promise<SummaryDto> {
    const resp = await fetch(this.url("/api/summary"));
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as SummaryDto;
  }

  async listFeedback(fingerprint?: string): Promise<FeedbackRecordDto[]> {
    const suffix = fingerprint ? `?fingerprint=${encodeURIComponent(fingerprint)}` : "";
    const resp = await fetch(this.url(`/api/feedback${suffix}`));
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as FeedbackRecordDto[];
  }

  async submitFeedback(request: FeedbackRequest): Promise<FeedbackAck> {
    const resp = await fetch(this.url("/api/feedback"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as FeedbackAck;
  }
}
