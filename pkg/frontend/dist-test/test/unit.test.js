// Rendering and gating tests against a fixed view document (no server).
import assert from "node:assert/strict";
import { test } from "node:test";
import { JSDOM } from "jsdom";
import { GameBoard, actionKey, knowledgeBadge, legalSet } from "../src/ui.js";
function fixtureView(overrides = {}) {
    return {
        protocol_version: 1,
        session_id: "abc",
        you: 1,
        status: "active",
        current_player: 1,
        your_turn: true,
        fireworks: [1, 0],
        hint_tokens: 8,
        lives: 3,
        deck_size: 12,
        discards: [],
        partner_hand: [
            { position: 0, letter: "A", color: "red", rank: 1,
                knowledge: { color_mask: 3, rank_mask: 31, hinted_color: false, hinted_rank: false } },
            { position: 1, letter: "B", color: "green", rank: 2,
                knowledge: { color_mask: 3, rank_mask: 31, hinted_color: false, hinted_rank: false } },
        ],
        own_hand: [
            { position: 0, letter: "A",
                knowledge: { color_mask: 2, rank_mask: 1, hinted_color: true, hinted_rank: true },
                possible_colors: ["green"], possible_ranks: [1] },
            { position: 1, letter: "B",
                knowledge: { color_mask: 3, rank_mask: 30, hinted_color: false, hinted_rank: false },
                possible_colors: ["red", "green"], possible_ranks: [2, 3, 4, 5] },
        ],
        action_log: [
            { seat: 0, action: { kind: "hint_rank", value: 1 },
                text: "My partner told me that the rank of my card at position 'A' is one",
                touched: [0] },
        ],
        colors: ["red", "green"],
        ranks: [1, 2, 3, 4, 5],
        legal_actions: [
            { kind: "play", value: 0 },
            { kind: "play", value: 1 },
            { kind: "hint_color", value: 0 },
            { kind: "hint_rank", value: 1 },
        ],
        ...overrides,
    };
}
function mount(view) {
    const dom = new JSDOM("<div id='app'></div>");
    const root = dom.window.document.getElementById("app");
    const actions = [];
    const surveys = [];
    const board = new GameBoard(root, {
        onAction: (a) => actions.push(a),
        onSurveySubmit: (s) => surveys.push(s),
    });
    board.render(view);
    return { dom, root, actions, surveys, board };
}
test("legal actions enable exactly their buttons", () => {
    const view = fixtureView();
    const { root } = mount(view);
    const enabled = (id) => !root.querySelector(`[data-testid='${id}']`).disabled;
    assert.equal(enabled("play-0"), true);
    assert.equal(enabled("play-1"), true);
    assert.equal(enabled("discard-0"), false); // tokens full: not in the legal list
    assert.equal(enabled("hint-color-0"), true);
    assert.equal(enabled("hint-color-1"), false); // no green... not offered by server
    assert.equal(enabled("hint-rank-1"), true);
    assert.equal(enabled("hint-rank-3"), false);
});
test("hint buttons all disabled when it is not your turn", () => {
    const view = fixtureView({ your_turn: false, legal_actions: undefined });
    const { root } = mount(view);
    const buttons = root.querySelectorAll("button.action");
    assert.ok(buttons.length > 0);
    for (const b of buttons)
        assert.equal(b.disabled, true);
});
test("clicking an enabled button submits its action once", () => {
    const view = fixtureView();
    const { root, actions } = mount(view);
    root.querySelector("[data-testid='play-0']").click();
    assert.deepEqual(actions, [{ kind: "play", value: 0 }]);
    root.querySelector("[data-testid='discard-0']").click();
    assert.equal(actions.length, 1); // disabled button did nothing
});
test("own cards render knowledge badges, never identities", () => {
    const view = fixtureView();
    const { root } = mount(view);
    const own = root.querySelector("[data-testid='own-hand']").textContent;
    assert.match(own, /green/); // hinted knowledge is allowed
    assert.match(own, /rank 1/);
    const slot1 = root.querySelector("[data-testid='own-card-1']").textContent;
    assert.match(slot1, /rank\? 2\/3\/4\/5/);
});
test("knowledge badge summarizes masks", () => {
    assert.equal(knowledgeBadge({
        position: 0, letter: "A",
        knowledge: { color_mask: 1, rank_mask: 1, hinted_color: true, hinted_rank: true },
        possible_colors: ["red"], possible_ranks: [1],
    }), "red, rank 1");
});
test("instruction banner appears iff the view carries the instruction", () => {
    const withL = mount(fixtureView({ instruction: "If my partner tells me the 'color'..." }));
    assert.ok(withL.root.querySelector("[data-testid='instruction']"));
    const withoutL = mount(fixtureView());
    assert.equal(withoutL.root.querySelector("[data-testid='instruction']"), null);
});
test("action log renders the canonical sentences", () => {
    const { root } = mount(fixtureView());
    const log = root.querySelector("[data-testid='action-log']").textContent;
    assert.match(log, /My partner told me that the rank of my card at position 'A' is one/);
});
test("terminal view offers the survey; duplicate submits are blocked", () => {
    const view = fixtureView({
        status: "terminal", your_turn: false, legal_actions: undefined,
        result: { score: 7, lost: false, points_before_loss: 7 },
    });
    const { root, surveys } = mount(view);
    assert.ok(root.querySelector("[data-testid='result-panel']"));
    const q1 = root.querySelector("[data-testid='survey-q1']");
    const q2 = root.querySelector("[data-testid='survey-q2']");
    q1.value = "6";
    q2.value = "6";
    const submit = root.querySelector("[data-testid='survey-submit']");
    submit.click();
    submit.click();
    assert.deepEqual(surveys, [[6, 6]]);
});
test("survey can be skipped and records an absent answer", () => {
    const view = fixtureView({
        status: "terminal", your_turn: false, legal_actions: undefined,
        result: { score: 0, lost: true, points_before_loss: 3 },
    });
    const { root, surveys } = mount(view);
    root.querySelector("[data-testid='survey-skip']").click();
    assert.deepEqual(surveys, [null]);
});
test("actionKey and legalSet round-trip", () => {
    const view = fixtureView();
    const keys = legalSet(view);
    assert.ok(keys.has(actionKey({ kind: "play", value: 0 })));
    assert.ok(!keys.has(actionKey({ kind: "discard", value: 0 })));
});
