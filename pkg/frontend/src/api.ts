/** Typed fetch client for the review service; the UI's only data path. */

import type { AdjudicationRecord, ServiceError, TaskPayload, TaskSummary } from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly details: unknown;

  constructor(status: number, body: ServiceError) {
    super(body.message);
    this.code = body.code;
    this.status = status;
    this.details = body.details;
  }
}

export interface TaskPage {
  tasks: TaskSummary[];
  next_cursor: string | null;
}

export class ReviewApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly token: string | null = null,
  ) {}

  private headers(withBody: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (withBody) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      const error: ServiceError =
        body && typeof body === "object" && "code" in body
          ? (body as ServiceError)
          : { code: `http_${response.status}`, message: JSON.stringify(body), details: null };
      throw new ApiError(response.status, error);
    }
    return body as T;
  }

  listTasks(params: { status?: string; region?: string; cursor?: string; limit?: number } = {}):
      Promise<TaskPage> {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) query.set(key, String(value));
    }
    const suffix = query.toString() ? `?${query}` : "";
    return this.request<TaskPage>(`/tasks${suffix}`);
  }

  getTask(reportId: string): Promise<TaskPayload> {
    return this.request<TaskPayload>(`/tasks/${encodeURIComponent(reportId)}`);
  }

  adjudicate(reportId: string, expectedVersion: number, records: AdjudicationRecord[]):
      Promise<{ report_id: string; version: number }> {
    return this.request(`/tasks/${encodeURIComponent(reportId)}/adjudicate`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ expected_version: expectedVersion, records }),
    });
  }

  exportGroundTruth(region: string, grade: "test" | "three_state"):
      Promise<{ files: string[]; count: number }> {
    return this.request(`/export`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ region, grade }),
    });
  }
}
