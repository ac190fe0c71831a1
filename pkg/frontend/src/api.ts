/** Typed client for the workspace service JSON API. */

import type {
  BiplotPayload,
  CaseDraft,
  CurvesPayload,
  GraphPayload,
  JobPayload,
  LoadingsPayload,
  MsnmPayload,
  OmedaPayload,
  RegistryPayload,
  ReportPayload,
  ScoresPayload,
} from "./types";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

async function parseError(resp: Response): Promise<never> {
  let message = `${resp.status}`;
  try {
    const body = (await resp.json()) as { error?: string };
    if (body.error) message = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(resp.status, message);
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async get<T>(path: string, params: Record<string, string | number | undefined> = {}): Promise<T> {
    const query = Object.entries(params)
      .filter(([, v]) => v !== undefined)
      .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
      .join("&");
    const resp = await fetch(this.base + path + (query ? `?${query}` : ""));
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  scores(pcs: [number, number], iteration?: number): Promise<ScoresPayload> {
    return this.get("/scores", { pcs: pcs.join(","), it: iteration });
  }

  loadings(pcs: [number, number], iteration?: number): Promise<LoadingsPayload> {
    return this.get("/loadings", { pcs: pcs.join(","), it: iteration });
  }

  biplot(pcs: [number, number], iteration?: number): Promise<BiplotPayload> {
    return this.get("/biplot", { pcs: pcs.join(","), it: iteration });
  }

  msnm(iteration?: number): Promise<MsnmPayload> {
    return this.get("/msnm", { it: iteration });
  }

  curves(iteration?: number): Promise<CurvesPayload> {
    return this.get("/curves", { it: iteration });
  }

  registry(): Promise<RegistryPayload> {
    return this.get("/registry");
  }

  report(caseId: string): Promise<ReportPayload> {
    return this.get("/report", { case: caseId });
  }

  graph(caseId: string, nodeMin = 0, edgeMin = 0): Promise<GraphPayload> {
    return this.get("/graph", { case: caseId, node_min: nodeMin, edge_min: edgeMin });
  }

  job(jobId: string): Promise<JobPayload> {
    return this.get(`/jobs/${jobId}`);
  }

  diagnose(group1: string[], group2: string[] | null = null): Promise<OmedaPayload> {
    return this.post("/diagnose", { group1, group2 });
  }

  deparse(caseRef: string | CaseDraft): Promise<{ job: JobPayload }> {
    return this.post("/deparse", { case: caseRef });
  }

  updateObservation(target: { case?: string; bins?: string[] }): Promise<{ iteration: number }> {
    return this.post("/update", { kind: "observation", ...target });
  }

  updateLog(caseId: string): Promise<{ job: JobPayload }> {
    return this.post("/update", { kind: "log", case: caseId });
  }
}
