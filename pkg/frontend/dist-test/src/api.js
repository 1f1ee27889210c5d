// Thin client for the session service. The server is the single source of
// truth for game state; this module never interprets rules.
export class ApiError extends Error {
    constructor(message, status, legalActions = null) {
        super(message);
        this.status = status;
        this.legalActions = legalActions;
    }
}
async function parseError(resp) {
    let detail = null;
    try {
        detail = (await resp.json()).detail;
    }
    catch {
        /* non-JSON body */
    }
    if (detail && typeof detail === "object" && "legal_actions" in detail) {
        const d = detail;
        throw new ApiError(d.message ?? "rejected", resp.status, d.legal_actions);
    }
    throw new ApiError(typeof detail === "string" ? detail : `HTTP ${resp.status}`, resp.status);
}
export class SessionApi {
    constructor(baseUrl) {
        this.baseUrl = baseUrl;
    }
    async get(path) {
        const resp = await fetch(`${this.baseUrl}${path}`);
        if (!resp.ok)
            await parseError(resp);
        return resp.json();
    }
    async post(path, body) {
        const resp = await fetch(`${this.baseUrl}${path}`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!resp.ok)
            await parseError(resp);
        return resp.json();
    }
    listAgents() {
        return this.get("/agents");
    }
    createSession(opts) {
        return this.post("/sessions", opts);
    }
    view(sessionId) {
        return this.get(`/sessions/${sessionId}/view`);
    }
    act(sessionId, action) {
        return this.post(`/sessions/${sessionId}/actions`, { action });
    }
    submitResult(sessionId, survey) {
        return this.post(`/sessions/${sessionId}/result`, { survey });
    }
    eventsUrl(sessionId) {
        return `${this.baseUrl}/sessions/${sessionId}/events`;
    }
}
