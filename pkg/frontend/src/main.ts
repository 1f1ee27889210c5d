// Lobby + game wiring. The session id is kept in the URL hash so a refresh
// mid-game restores the board from GET /view.

import { ApiError, SessionApi } from "./api.js";
import type { SessionView } from "./types.js";
import { GameBoard } from "./ui.js";

export class App {
  private board: GameBoard | null = null;
  private sessionId: string | null = null;
  private events: EventSource | null = null;

  constructor(
    private api: SessionApi,
    private root: HTMLElement,
    private statusLine: HTMLElement,
  ) {}

  async start(): Promise<void> {
    const fromHash = this.root.ownerDocument.defaultView?.location.hash.slice(1);
    if (fromHash) {
      this.sessionId = fromHash;
      try {
        const view = await this.api.view(fromHash);
        this.mountBoard(view);
        return;
      } catch {
        this.sessionId = null; // stale hash: fall through to the lobby
      }
    }
    await this.renderLobby();
  }

  private async renderLobby(): Promise<void> {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    const lobby = doc.createElement("div");
    lobby.setAttribute("data-testid", "lobby");

    let agents;
    try {
      agents = (await this.api.listAgents()).agents.filter((a) => a.env === "hanabi");
    } catch {
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

  async createSession(agentId: string, instructionVisible: boolean): Promise<void> {
    const created = await this.api.createSession({
      agent_id: agentId,
      human_seat: 1,
      instruction_visible: instructionVisible,
    });
    this.sessionId = created.session_id;
    const win = this.root.ownerDocument.defaultView;
    if (win) win.location.hash = created.session_id;
    this.mountBoard(created.view);
  }

  private mountBoard(view: SessionView): void {
    this.board = new GameBoard(this.root, {
      onAction: (action) => void this.submit(action),
      onSurveySubmit: (answers) => void this.sendSurvey(answers),
    });
    this.board.render(view);
    this.subscribe();
  }

  private subscribe(): void {
    const win = this.root.ownerDocument.defaultView as (Window & typeof globalThis) | null;
    if (!win || !this.sessionId || typeof win.EventSource === "undefined") return;
    this.events?.close();
    this.events = new win.EventSource(this.api.eventsUrl(this.sessionId));
    this.events.onmessage = () => void this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.sessionId || !this.board) return;
    this.board.render(await this.api.view(this.sessionId));
  }

  private async submit(action: { kind: string; value: number }): Promise<void> {
    if (!this.sessionId || !this.board) return;
    try {
      const resp = await this.api.act(this.sessionId, action as never);
      this.board.render(resp.view);
      this.statusLine.textContent = "";
    } catch (err) {
      if (err instanceof ApiError && err.legalActions) {
        this.statusLine.textContent =
          `That move is not legal right now; legal: ${err.legalActions
            .map((a) => `${a.kind}(${a.value})`).join(", ")}`;
        return;
      }
      throw err;
    }
  }

  private async sendSurvey(answers: [number, number] | null): Promise<void> {
    if (!this.sessionId) return;
    await this.api.submitResult(this.sessionId, answers);
    this.statusLine.textContent = "Result recorded - thanks for playing.";
  }
}

export function boot(doc: Document, baseUrl: string): App {
  const root = doc.getElementById("app");
  const status = doc.getElementById("status-line");
  if (!root || !status) throw new Error("missing #app / #status-line mount points");
  const app = new App(new SessionApi(baseUrl), root, status);
  void app.start();
  return app;
}
