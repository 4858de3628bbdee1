/** Thin typed client for the manufacturer API; the UI never computes a
 * metric itself, it only round-trips these documents. */

import { MatrixDoc, ProblemSpecDraft, RecordDoc, TreeDoc } from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly reason: string,
              message: string) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<never> {
  let reason = "unknown";
  let message = resp.statusText;
  try {
    const body = await resp.json();
    reason = body?.detail?.reason ?? reason;
    message = body?.detail?.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(resp.status, reason, message);
}

export class ManufacturerClient {
  constructor(readonly baseUrl: string,
              private readonly fetcher: typeof fetch = fetch) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetcher(`${this.baseUrl}${path}`, init);
    if (!resp.ok) await parseError(resp);
    return resp.json() as Promise<T>;
  }

  createIteration(spec: ProblemSpecDraft): Promise<{ iteration_id: number }> {
    return this.request("/iterations", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(spec),
    });
  }

  listIterations(): Promise<{ iterations: number[] }> {
    return this.request("/iterations");
  }

  probe(iterationId: number): Promise<MatrixDoc> {
    return this.request(`/iterations/${iterationId}/probe`,
                        { method: "POST" });
  }

  generate(iterationId: number, perSupplier = false):
      Promise<{ records: RecordDoc[] }> {
    const flag = perSupplier ? "?per_supplier=true" : "";
    return this.request(`/iterations/${iterationId}/generate${flag}`,
                        { method: "POST" });
  }

  records(iterationId: number): Promise<{ records: RecordDoc[] }> {
    return this.request(`/iterations/${iterationId}/records`);
  }

  explain(iterationIds: number[], target = "cost"): Promise<TreeDoc> {
    return this.request("/explain", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ iteration_ids: iterationIds, target }),
    });
  }

  meshUrl(iterationId: number, recordId: string): string {
    return `${this.baseUrl}/iterations/${iterationId}/records/${recordId}/mesh`;
  }
}
