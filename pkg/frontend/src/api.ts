// Thin client for the session service. The server is the single source of
// truth for game state; this module never interprets rules.

import type {
  ActionJson,
  AgentInfo,
  CreateSessionResponse,
  ResultRecord,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public status: number,
    public legalActions: ActionJson[] | null = null,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<never> {
  let detail: unknown = null;
  try {
    detail = (await resp.json()).detail;
  } catch {
    /* non-JSON body */
  }
  if (detail && typeof detail === "object" && "legal_actions" in (detail as object)) {
    const d = detail as { message?: string; legal_actions: ActionJson[] };
    throw new ApiError(d.message ?? "rejected", resp.status, d.legal_actions);
  }
  throw new ApiError(typeof detail === "string" ? detail : `HTTP ${resp.status}`, resp.status);
}

export class SessionApi {
  constructor(public baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`);
    if (!resp.ok) await parseError(resp);
    return resp.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await parseError(resp);
    return resp.json() as Promise<T>;
  }

  listAgents(): Promise<{ agents: AgentInfo[] }> {
    return this.get("/agents");
  }

  createSession(opts: {
    agent_id: string;
    human_seat?: number;
    instruction_visible?: boolean;
    seed?: number;
  }): Promise<CreateSessionResponse> {
    return this.post("/sessions", opts);
  }

  view(sessionId: string): Promise<SessionView> {
    return this.get(`/sessions/${sessionId}/view`);
  }

  act(sessionId: string, action: ActionJson): Promise<{ view: SessionView }> {
    return this.post(`/sessions/${sessionId}/actions`, { action });
  }

  submitResult(sessionId: string, survey: number[] | null): Promise<ResultRecord> {
    return this.post(`/sessions/${sessionId}/result`, { survey });
  }

  eventsUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/events`;
  }
}
