// Lobby + game wiring. The session id is kept in the URL hash so a refresh
// mid-game restores the board from GET /view.
import { ApiError, SessionApi } from "./api.js";
import { GameBoard } from "./ui.js";
export class App {
    constructor(api, root, statusLine) {
        this.api = api;
        this.root = root;
        this.statusLine = statusLine;
        this.board = null;
        this.sessionId = null;
        this.events = null;
    }
    async start() {
        const fromHash = this.root.ownerDocument.defaultView?.location.hash.slice(1);
        if (fromHash) {
            this.sessionId = fromHash;
            try {
                const view = await this.api.view(fromHash);
                this.mountBoard(view);
                return;
            }
            catch {
                this.sessionId = null; // stale hash: fall through to the lobby
            }
        }
        await this.renderLobby();
    }
    async renderLobby() {
        const doc = this.root.ownerDocument;
        this.root.textContent = "";
        const lobby = doc.createElement("div");
        lobby.setAttribute("data-testid", "lobby");
        let agents;
        try {
            agents = (await this.api.listAgents()).agents.filter((a) => a.env === "hanabi");
        }
        catch {
            const retry = doc.createElement("button");
            retry.setAttribute("data-testid", "lobby-retry");
            retry.textContent = "Service unreachable - retry";
            retry.addEventListener("click", () => void this.renderLobby());
            this.root.appendChild(retry);
            return;
        }
        const select = doc.createElement("select");
        select.setAttribute("data-testid", "agent-select");
        for (const agent of agents) {
            const option = doc.createElement("option");
            option.value = agent.id;
            option.textContent = `${agent.id} (${agent.method_id || agent.kind})`;
            select.appendChild(option);
        }
        const showInstruction = doc.createElement("input");
        showInstruction.type = "checkbox";
        showInstruction.setAttribute("data-testid", "condition-toggle");
        const label = doc.createElement("label");
        label.appendChild(showInstruction);
        label.appendChild(doc.createTextNode(" show the agent's training instruction"));
        const start = doc.createElement("button");
        start.setAttribute("data-testid", "start-game");
        start.textContent = "Start game";
        start.addEventListener("click", () => {
            void this.createSession(select.value, showInstruction.checked);
        });
        lobby.appendChild(select);
        lobby.appendChild(label);
        lobby.appendChild(start);
        this.root.appendChild(lobby);
    }
    async createSession(agentId, instructionVisible) {
        const created = await this.api.createSession({
            agent_id: agentId,
            human_seat: 1,
            instruction_visible: instructionVisible,
        });
        this.sessionId = created.session_id;
        const win = this.root.ownerDocument.defaultView;
        if (win)
            win.location.hash = created.session_id;
        this.mountBoard(created.view);
    }
    mountBoard(view) {
        this.board = new GameBoard(this.root, {
            onAction: (action) => void this.submit(action),
            onSurveySubmit: (answers) => void this.sendSurvey(answers),
        });
        this.board.render(view);
        this.subscribe();
    }
    subscribe() {
        const win = this.root.ownerDocument.defaultView;
        if (!win || !this.sessionId || typeof win.EventSource === "undefined")
            return;
        this.events?.close();
        this.events = new win.EventSource(this.api.eventsUrl(this.sessionId));
        this.events.onmessage = () => void this.refresh();
    }
    async refresh() {
        if (!this.sessionId || !this.board)
            return;
        this.board.render(await this.api.view(this.sessionId));
    }
    async submit(action) {
        if (!this.sessionId || !this.board)
            return;
        try {
            const resp = await this.api.act(this.sessionId, action);
            this.board.render(resp.view);
            this.statusLine.textContent = "";
        }
        catch (err) {
            if (err instanceof ApiError && err.legalActions) {
                this.statusLine.textContent =
                    `That move is not legal right now; legal: ${err.legalActions
                        .map((a) => `${a.kind}(${a.value})`).join(", ")}`;
                return;
            }
            throw err;
        }
    }
    async sendSurvey(answers) {
        if (!this.sessionId)
            return;
        await this.api.submitResult(this.sessionId, answers);
        this.statusLine.textContent = "Result recorded - thanks for playing.";
    }
}
export function boot(doc, baseUrl) {
    const root = doc.getElementById("app");
    const status = doc.getElementById("status-line");
    if (!root || !status)
        throw new Error("missing #app / #status-line mount points");
    const app = new App(new SessionApi(baseUrl), root, status);
    void app.start();
    return app;
}
