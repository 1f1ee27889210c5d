// End-to-end: drive a complete game through the UI against a live service.
//
// The test trains a small agent through the CLI (once, cached in a temp
// dir), starts the HTTP service, and then interacts exclusively through the
// browser client plus the documented endpoints. Every payload that arrives
// is screened: the human's own card identities must never appear, and the
// instruction text must appear iff the visibility condition is on.

import assert from "node:assert/strict";
import { after, before, test } from "node:test";
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { JSDOM } from "jsdom";

import { SessionApi } from "../src/api.js";
import { GameBoard } from "../src/ui.js";
import type { ActionJson, SessionView } from "../src/types.js";

const PORT = 8097;
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess | null = null;
let workdir: string;
const seenPayloads: string[] = [];

const realFetch = fetch;

function trackedFetch(input: string | URL | Request, init?: RequestInit): Promise<Response> {
  return realFetch(input, init).then(async (resp) => {
    const clone = resp.clone();
    try {
      seenPayloads.push(await clone.text());
    } catch {
      /* streaming bodies are fine to skip */
    }
    return resp;
  });
}

before(async () => {
  workdir = fs.mkdtempSync(path.join(os.tmpdir(), "instructrl-e2e-"));
  const agentsDir = path.join(workdir, "agents");
  fs.mkdirSync(agentsDir);
  const runConfig = path.join(workdir, "run.json");
  fs.writeFileSync(runConfig, JSON.stringify({
    env: { env_id: "hanabi", max_steps: 120, gamma: 0.99,
           variant: { num_colors: 2, hand_size: 2 } },
    learner: "value_net",
    instruction: "hanabi_color",
    backend: "oracle_color",
    lam: 0.25,
    updates: 40,
    batch_episodes: 8,
    hidden: [32],
    seed: 7,
  }));
  const train = spawnSync("python3", ["-m", "instructrl", "train",
    "--config", runConfig, "--out", agentsDir, "--method-id", "mini-color"],
    { stdio: "pipe", timeout: 600_000 });
  assert.equal(train.status, 0, `training failed: ${train.stderr}`);

  server = spawn("python3", ["-m", "instructrl", "serve",
    "--agents", agentsDir,
    "--results", path.join(workdir, "results.jsonl"),
    "--port", String(PORT)], { stdio: "pipe" });
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(`${BASE}/healthz`);
      if (resp.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("service did not come up");
});

after(() => {
  server?.kill();
});

function assertNoOwnCardLeak(payloadText: string): void {
  let doc: unknown;
  try {
    doc = JSON.parse(payloadText);
  } catch {
    return;
  }
  const scan = (node: unknown): void => {
    if (Array.isArray(node)) {
      node.forEach(scan);
      return;
    }
    if (node && typeof node === "object") {
      const record = node as Record<string, unknown>;
      if ("own_hand" in record && Array.isArray(record.own_hand)) {
        for (const slot of record.own_hand as Record<string, unknown>[]) {
          assert.ok(!("color" in slot), "own card leaked a color identity");
          assert.ok(!("rank" in slot), "own card leaked a rank identity");
        }
      }
      Object.values(record).forEach(scan);
    }
  };
  scan(doc);
}

async function playFullGame(instructionVisible: boolean): Promise<{
  finalView: SessionView;
  sawInstruction: boolean;
  record: { condition: string; survey: number[] | null };
}> {
  const dom = new JSDOM("<div id='app'></div><p id='status-line'></p>", { url: BASE });
  const doc = dom.window.document;
  (globalThis as Record<string, unknown>).fetch = trackedFetch;

  const api = new SessionApi(BASE);
  const agents = (await api.listAgents()).agents;
  assert.ok(agents.some((a) => a.id === "mini-color"));

  const created = await api.createSession({
    agent_id: "mini-color",
    human_seat: 1,
    instruction_visible: instructionVisible,
    seed: 12345,
  });
  let view = created.view;
  let sawInstruction = view.instruction !== undefined;

  let pendingAction: ActionJson | null = null;
  let surveyAnswers: [number, number] | null | undefined;
  const root = doc.getElementById("app")!;
  const board = new GameBoard(root, {
    onAction: (a) => { pendingAction = a; },
    onSurveySubmit: (s) => { surveyAnswers = s; },
  });

  let guard = 0;
  while (view.status === "active" && guard < 300) {
    guard += 1;
    board.render(view);
    if (view.instruction !== undefined) sawInstruction = true;
    // click the first enabled action button, exactly as a human could
    const buttons = Array.from(root.querySelectorAll("button.action")) as HTMLButtonElement[];
    const clickable = buttons.filter((b) => !b.disabled);
    assert.ok(clickable.length > 0, "UI offered no legal moves on the human's turn");
    pendingAction = null;
    clickable[0].click();
    assert.ok(pendingAction, "clicking an enabled control must submit an action");
    view = (await api.act(view.session_id, pendingAction!)).view;
  }
  assert.equal(view.status, "terminal");
  board.render(view);

  // survey through the rendered form
  const q1 = root.querySelector("[data-testid='survey-q1']") as HTMLSelectElement;
  const q2 = root.querySelector("[data-testid='survey-q2']") as HTMLSelectElement;
  q1.value = "6";
  q2.value = "6";
  (root.querySelector("[data-testid='survey-submit']") as HTMLButtonElement).click();
  assert.deepEqual(surveyAnswers, [6, 6]);
  const result = await api.submitResult(view.session_id, surveyAnswers!);

  for (const payload of seenPayloads) assertNoOwnCardLeak(payload);
  return { finalView: view, sawInstruction, record: result.record };
}

test("full game through the UI with the instruction visible", async () => {
  const { finalView, sawInstruction, record } = await playFullGame(true);
  assert.ok(sawInstruction, "instruction banner should be shown in the with-L condition");
  assert.equal(record.condition, "with_instruction");
  assert.deepEqual(record.survey, [6, 6]);
  assert.ok(finalView.result);
  const results = fs.readFileSync(path.join(workdir, "results.jsonl"), "utf8");
  assert.match(results, /"with_instruction"/);
});

test("without-L condition never shows the instruction", async () => {
  seenPayloads.length = 0;
  const { sawInstruction, record } = await playFullGame(false);
  assert.equal(sawInstruction, false);
  assert.equal(record.condition, "without_instruction");
  for (const payload of seenPayloads) {
    assert.ok(!payload.includes("If my partner tells me"),
      "instruction text leaked into a without-L payload");
  }
});
