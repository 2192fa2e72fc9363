import type {
  ApiErrorBody,
  CandidatesPayload,
  Report,
  SelectionEntry,
  Snapshot,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

async function asError(response: Response): Promise<ApiRequestError> {
  let body: Partial<ApiErrorBody> = {};
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; fall through to the generic message
  }
  return new ApiRequestError(
    response.status,
    body.code ?? `http_${response.status}`,
    body.message ?? `request failed with status ${response.status}`,
  );
}

/** Thin typed client over fetch; one method per endpoint. */
export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw await asError(response);
    }
    return (await response.json()) as T;
  }

  createCampaign(requirement: string, id?: string, config?: Record<string, unknown>) {
    return this.request<{ id: string; stage: string }>("POST", "/campaigns", {
      requirement,
      id: id || null,
      config: config ?? {},
    });
  }

  snapshot(id: string) {
    return this.request<Snapshot>("GET", `/campaigns/${id}`);
  }

  advance(id: string) {
    return this.request<{ status: string; job: string }>("POST", `/campaigns/${id}/advance`);
  }

  candidates(id: string, all = false) {
    const query = all ? "?all=true" : "";
    return this.request<CandidatesPayload>("GET", `/campaigns/${id}/candidates${query}`);
  }

  submitSelection(id: string, selections: SelectionEntry[]) {
    return this.request<{ stage: string; dimension: number }>(
      "POST",
      `/campaigns/${id}/selection`,
      { selections },
    );
  }

  runRounds(id: string, count: number, betaOverride?: number) {
    return this.request<{ status: string; job: string }>("POST", `/campaigns/${id}/rounds`, {
      count,
      beta_override: betaOverride ?? null,
    });
  }

  report(id: string) {
    return this.request<Report>("GET", `/campaigns/${id}/report`);
  }
}
