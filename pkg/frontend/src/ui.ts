// DOM rendering and input gating for one game session per page.
//
// The server view is the only source of truth: every control is enabled
// strictly from the provided legal-action list, and the board re-renders
// from scratch on each new view.

import type { ActionJson, OwnCard, PartnerCard, SessionView } from "./types.js";

export interface UiHandlers {
  onAction(action: ActionJson): void;
  onSurveySubmit(answers: [number, number] | null): void;
}

export function actionKey(action: ActionJson): string {
  return `${action.kind}:${action.value}`;
}

export function legalSet(view: SessionView): Set<string> {
  return new Set((view.legal_actions ?? []).map(actionKey));
}

export function knowledgeBadge(card: OwnCard): string {
  const parts: string[] = [];
  if (card.knowledge.hinted_color && card.possible_colors.length === 1) {
    parts.push(card.possible_colors[0]);
  } else if (card.possible_colors.length > 1) {
    parts.push(`color? ${card.possible_colors.join("/")}`);
  } else if (card.possible_colors.length === 1) {
    parts.push(`${card.possible_colors[0]} (deduced)`);
  }
  if (card.knowledge.hinted_rank && card.possible_ranks.length === 1) {
    parts.push(`rank ${card.possible_ranks[0]}`);
  } else if (card.possible_ranks.length > 1) {
    parts.push(`rank? ${card.possible_ranks.join("/")}`);
  } else if (card.possible_ranks.length === 1) {
    parts.push(`rank ${card.possible_ranks[0]} (deduced)`);
  }
  return parts.join(", ") || "unknown";
}

function el(doc: Document, tag: string, attrs: Record<string, string> = {}, text = ""): HTMLElement {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

export class GameBoard {
  private surveyed = false;

  constructor(
    private root: HTMLElement,
    private handlers: UiHandlers,
  ) {}

  render(view: SessionView): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    const legal = legalSet(view);

    if (view.instruction !== undefined) {
      const banner = el(doc, "div", { class: "instruction-banner", "data-testid": "instruction" });
      banner.textContent = `Your partner was trained to follow: "${view.instruction}"`;
      this.root.appendChild(banner);
    }

    const status = el(doc, "div", { class: "status", "data-testid": "status" });
    status.textContent = view.status === "terminal"
      ? "Game over"
      : view.your_turn ? "Your turn" : "Partner is thinking";
    this.root.appendChild(status);

    const counters = el(doc, "div", { class: "counters" });
    counters.appendChild(el(doc, "span", { "data-testid": "tokens" }, `hints: ${view.hint_tokens}`));
    counters.appendChild(el(doc, "span", { "data-testid": "lives" }, `lives: ${view.lives}`));
    counters.appendChild(el(doc, "span", { "data-testid": "deck" }, `deck: ${view.deck_size}`));
    this.root.appendChild(counters);

    const fireworks = el(doc, "div", { class: "fireworks", "data-testid": "fireworks" });
    view.colors.forEach((color, i) => {
      fireworks.appendChild(el(doc, "span", { class: `stack ${color}` }, `${color}: ${view.fireworks[i]}`));
    });
    this.root.appendChild(fireworks);

    this.root.appendChild(this.renderPartner(doc, view, legal));
    this.root.appendChild(this.renderOwnHand(doc, view, legal));
    this.root.appendChild(this.renderLog(doc, view));
    if (view.status === "terminal" && view.result) {
      this.root.appendChild(this.renderResult(doc, view));
    }
  }

  private renderPartner(doc: Document, view: SessionView, legal: Set<string>): HTMLElement {
    const panel = el(doc, "div", { class: "partner", "data-testid": "partner-hand" });
    panel.appendChild(el(doc, "h3", {}, "Partner's hand (they cannot see it)"));
    for (const card of view.partner_hand) {
      const cardEl = el(doc, "div", { class: `card ${card.color}`, "data-testid": `partner-card-${card.position}` });
      cardEl.textContent = `${card.letter}: ${card.color} ${card.rank}`;
      if (card.knowledge.hinted_color || card.knowledge.hinted_rank) {
        cardEl.appendChild(el(doc, "span", { class: "hinted" }, " (hinted)"));
      }
      panel.appendChild(cardEl);
    }
    const hints = el(doc, "div", { class: "hints" });
    for (const [i, color] of view.colors.entries()) {
      const action: ActionJson = { kind: "hint_color", value: i };
      hints.appendChild(this.actionButton(doc, `hint ${color}`, action, legal, `hint-color-${i}`));
    }
    for (const rank of view.ranks) {
      const action: ActionJson = { kind: "hint_rank", value: rank };
      hints.appendChild(this.actionButton(doc, `hint rank ${rank}`, action, legal, `hint-rank-${rank}`));
    }
    panel.appendChild(hints);
    return panel;
  }

  private renderOwnHand(doc: Document, view: SessionView, legal: Set<string>): HTMLElement {
    const panel = el(doc, "div", { class: "own", "data-testid": "own-hand" });
    panel.appendChild(el(doc, "h3", {}, "Your hand (identities hidden)"));
    for (const card of view.own_hand) {
      const slot = el(doc, "div", { class: "card own-card", "data-testid": `own-card-${card.position}` });
      slot.appendChild(el(doc, "span", { class: "badge", title: knowledgeBadge(card) },
        `${card.letter} [${knowledgeBadge(card)}]`));
      slot.appendChild(this.actionButton(
        doc, "play", { kind: "play", value: card.position }, legal, `play-${card.position}`));
      slot.appendChild(this.actionButton(
        doc, "discard", { kind: "discard", value: card.position }, legal, `discard-${card.position}`));
      panel.appendChild(slot);
    }
    return panel;
  }

  private renderLog(doc: Document, view: SessionView): HTMLElement {
    const log = el(doc, "div", { class: "log", "data-testid": "action-log" });
    log.appendChild(el(doc, "h3", {}, "Moves"));
    const list = el(doc, "ol", {});
    for (const entry of view.action_log) {
      list.appendChild(el(doc, "li", {}, entry.text));
    }
    log.appendChild(list);
    return log;
  }

  private renderResult(doc: Document, view: SessionView): HTMLElement {
    const result = view.result!;
    const panel = el(doc, "div", { class: "result", "data-testid": "result-panel" });
    panel.appendChild(el(doc, "h3", {},
      result.lost ? `All lives lost - score 0 (had ${result.points_before_loss})`
                  : `Final score: ${result.score}`));
    const form = el(doc, "div", { class: "survey", "data-testid": "survey-form" });
    form.appendChild(el(doc, "p", {}, "1) The bot's strategy matched its instruction:"));
    const q1 = this.likert(doc, "survey-q1");
    form.appendChild(q1);
    form.appendChild(el(doc, "p", {}, "2) The instruction helped me collaborate:"));
    const q2 = this.likert(doc, "survey-q2");
    form.appendChild(q2);
    const submit = el(doc, "button", { "data-testid": "survey-submit" }, "Submit survey") as HTMLButtonElement;
    submit.addEventListener("click", () => {
      if (this.surveyed) return;
      const a1 = Number((q1 as HTMLSelectElement).value);
      const a2 = Number((q2 as HTMLSelectElement).value);
      if (a1 < 1 || a1 > 7 || a2 < 1 || a2 > 7) return; // blocked client-side
      this.surveyed = true;
      submit.disabled = true;
      this.handlers.onSurveySubmit([a1, a2] as [number, number]);
    });
    const skip = el(doc, "button", { "data-testid": "survey-skip" }, "Skip") as HTMLButtonElement;
    skip.addEventListener("click", () => {
      if (this.surveyed) return;
      this.surveyed = true;
      submit.disabled = true;
      skip.disabled = true;
      this.handlers.onSurveySubmit(null);
    });
    form.appendChild(submit);
    form.appendChild(skip);
    panel.appendChild(form);
    return panel;
  }

  private likert(doc: Document, testid: string): HTMLSelectElement {
    const select = el(doc, "select", { "data-testid": testid }) as HTMLSelectElement;
    for (let i = 1; i <= 7; i++) {
      select.appendChild(el(doc, "option", { value: String(i) }, String(i)));
    }
    select.value = "4";
    return select;
  }

  private actionButton(
    doc: Document,
    label: string,
    action: ActionJson,
    legal: Set<string>,
    testid: string,
  ): HTMLButtonElement {
    const button = el(doc, "button", { "data-testid": testid, class: "action" }) as HTMLButtonElement;
    button.textContent = label;
    button.disabled = !legal.has(actionKey(action));
    button.addEventListener("click", () => {
      if (!button.disabled) this.handlers.onAction(action);
    });
    return button;
  }
}
