import type {
  Diagnostic,
  ExecuteResponse,
  GraphPage,
  SourceSummary,
  VarSummary,
} from "./types.js";

/** Statement text was rejected by the parser or analyzer. */
export class QueryError extends Error {
  constructor(public readonly diagnostics: Diagnostic[]) {
    super(diagnostics.map((d) => `${d.line}:${d.col}: ${d.message}`).join("\n"));
  }
}

export class ApiError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function fail(res: Response): Promise<never> {
  let detail: unknown = res.statusText;
  try {
    detail = (await res.json()).detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  if (res.status === 400 && Array.isArray(detail)) {
    throw new QueryError(detail as Diagnostic[]);
  }
  throw new ApiError(res.status, typeof detail === "string" ? detail : JSON.stringify(detail));
}

export class ApiClient {
  constructor(public readonly baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) await fail(res);
    return (await res.json()) as T;
  }

  async createSession(): Promise<string> {
    const res = await fetch(this.baseUrl + "/sessions", { method: "POST" });
    if (!res.ok) await fail(res);
    return ((await res.json()) as { sessionId: string }).sessionId;
  }

  async execute(sessionId: string, text: string): Promise<ExecuteResponse> {
    const res = await fetch(`${this.baseUrl}/sessions/${sessionId}/execute`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
    if (!res.ok) await fail(res);
    return (await res.json()) as ExecuteResponse;
  }

  vars(sessionId: string): Promise<VarSummary[]> {
    return this.get(`/sessions/${sessionId}/vars`);
  }

  varPage(sessionId: string, name: string, page = 0): Promise<GraphPage> {
    return this.get(`/sessions/${sessionId}/vars/${encodeURIComponent(name)}?page=${page}`);
  }

  sources(): Promise<SourceSummary[]> {
    return this.get("/sources");
  }
}
