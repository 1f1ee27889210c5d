"""HTTP game-session service for live human-vs-agent play.

Endpoints (all payloads JSON, every message carries ``protocol_version``):

* ``GET  /healthz`` - liveness probe.
* ``GET  /agents`` - available agent checkpoints.
* ``POST /sessions`` - create a session; body ``{agent_id, human_seat?,
  instruction_visible?, seed?}``. The agent plays its moves immediately
  whenever it is its turn, so the returned view is always the human's turn
  (or terminal).
* ``GET  /sessions/{id}/view`` - the human's redacted view. The human's own
  card identities never appear; only knowledge masks do.
* ``POST /sessions/{id}/actions`` - body ``{action}``; rejected with the
  legal action list when illegal or out of turn.
* ``POST /sessions/{id}/result`` - persist the outcome once terminal, with
  optional survey answers (two 1..7 integers); appended to a JSON-lines file.
* ``GET  /sessions/{id}/events`` - server-sent events, one per state change.

Sessions are in-memory and independent; each serializes its own mutations
under a lock. Agent inference is read-only over the loaded checkpoint.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .checkpoints import Checkpoint, build_policy, load_checkpoint
from .core import make_env
from .hanabi import COLOR_NAMES, knowledge_to_json
from .language import RANK_WORDS, describe_observation, letter
from .rng import STREAM_POLICY, make_rng

PROTOCOL_VERSION = 1


class CreateSessionRequest(BaseModel):
    agent_id: str
    human_seat: int = 1
    instruction_visible: bool = False
    seed: int | None = None


class ActionRequest(BaseModel):
    action: dict | int


class ResultRequest(BaseModel):
    survey: list[int] | None = None


@dataclass
class Session:
    id: str
    env: Any
    state: Any
    observations: Any
    agent_policy: Any
    agent_id: str
    human_seat: int
    instruction_visible: bool
    instruction_text: str | None
    seed: int
    action_log: list[dict] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    result_recorded: bool = False
    agent_rng: Any = None
    total_reward: float = 0.0

    @property
    def done(self) -> bool:
        if self.env.is_done(self.state):
            return True
        return self.state.steps >= self.env.config.max_steps


def _say_select_log_text(session: Session, player: int, action, viewer: int) -> str:
    if player == viewer:
        return "You quit" if action == 0 else f"You picked ball {action}"
    return f"Your partner announced {action}"


def _action_text_for_viewer(session: Session, record, viewer: int) -> str:
    """Log line for the viewer: canonical partner phrasing, or the mirrored
    first-person form for the viewer's own moves."""
    obs = session.env.observations(session.state)[1 - record.player]
    if record.player != viewer:
        return describe_observation("hanabi", obs)
    action = record.action
    if action.kind == "play":
        return f"You played your card at position '{letter(action.value)}'"
    if action.kind == "discard":
        return f"You discarded your card at position '{letter(action.value)}'"
    positions = ", ".join(f"'{letter(p)}'" for p in record.touched)
    if action.kind == "hint_color":
        return f"You told your partner about their {COLOR_NAMES[action.value]} cards (positions {positions})"
    return f"You told your partner about their rank-{RANK_WORDS[action.value - 1]} cards (positions {positions})"


def _push_event(session: Session, kind: str) -> None:
    session.events.append({
        "protocol_version": PROTOCOL_VERSION,
        "id": len(session.events),
        "type": kind,
        "current_player": None if session.done else session.env.acting_player(session.state),
        "done": session.done,
        "ts": time.time(),
    })


def _agent_moves(session: Session) -> None:
    """Let the agent play until it is the human's turn or the game ends."""
    while not session.done and session.env.acting_player(session.state) != session.human_seat:
        seat = session.env.acting_player(session.state)
        legal = session.env.legal_actions(session.state, seat)
        decision = session.agent_policy.decide(session.observations[seat], legal, session.agent_rng)
        session.state, reward, _, session.observations = session.env.step(session.state, decision.action)
        session.total_reward += reward
        if session.env.config.env_id == "say_select":
            session.action_log.append({
                "seat": seat,
                "action": session.env.action_to_json(decision.action),
                "text": _say_select_log_text(session, seat, decision.action, session.human_seat),
                "touched": [],
            })
        else:
            record = session.state.last_action
            session.action_log.append({
                "seat": seat,
                "action": session.env.action_to_json(record.action),
                "text": _action_text_for_viewer(session, record, session.human_seat),
                "touched": list(record.touched),
            })
        _push_event(session, "agent_move")


def session_view(session: Session) -> dict:
    """The human's redacted state document: partner hand face-up, own cards
    as knowledge masks only."""
    if session.env.config.env_id == "say_select":
        return _say_select_view(session)
    obs = session.observations[session.human_seat]
    rules = session.env.rules
    view: dict = {
        "protocol_version": PROTOCOL_VERSION,
        "session_id": session.id,
        "you": session.human_seat,
        "status": "terminal" if session.done else "active",
        "current_player": None if session.done else session.env.acting_player(session.state),
        "your_turn": (not session.done
                      and session.env.acting_player(session.state) == session.human_seat),
        "fireworks": list(obs.fireworks),
        "hint_tokens": obs.hint_tokens,
        "lives": obs.lives,
        "deck_size": obs.deck_size,
        "discards": [{"color": COLOR_NAMES[c.color], "rank": c.rank} for c in obs.discards],
        "partner_hand": [
            {"position": i, "letter": letter(i),
             "color": COLOR_NAMES[card.color], "rank": card.rank,
             "knowledge": knowledge_to_json(obs.partner_knowledge[i])}
            for i, card in enumerate(obs.partner_hand)
        ],
        "own_hand": [
            {"position": i, "letter": letter(i),
             "knowledge": knowledge_to_json(k),
             "possible_colors": [COLOR_NAMES[c] for c in k.possible_colors(rules.num_colors)],
             "possible_ranks": list(k.possible_ranks(rules.num_ranks))}
            for i, k in enumerate(obs.own_knowledge)
        ],
        "action_log": session.action_log,
        "colors": list(COLOR_NAMES[: rules.num_colors]),
        "ranks": list(range(1, rules.num_ranks + 1)),
    }
    if session.instruction_visible:
        view["instruction"] = session.instruction_text
    if view["your_turn"]:
        legal = session.env.legal_actions(session.state, session.human_seat)
        view["legal_actions"] = [session.env.action_to_json(a) for a in legal]
    if session.done:
        summary = session.env.terminal_summary(session.state)
        view["result"] = {
            "score": summary["score"],
            "lost": summary["bombed"],
            "points_before_loss": summary["points"],
        }
    return view


def _say_select_view(session: Session) -> dict:
    """Demo view for the announcement game: the human plays the blind seat."""
    obs = session.observations[session.human_seat]
    view: dict = {
        "protocol_version": PROTOCOL_VERSION,
        "session_id": session.id,
        "env": "say_select",
        "you": session.human_seat,
        "status": "terminal" if session.done else "active",
        "current_player": None if session.done else session.env.acting_player(session.state),
        "your_turn": (not session.done
                      and session.env.acting_player(session.state) == session.human_seat),
        "announcement_two_ago": obs.alice_prev2 or None,
        "previous_announcement": obs.alice_prev1 or None,
        "action_log": session.action_log,
    }
    if session.instruction_visible and session.instruction_text:
        view["instruction"] = session.instruction_text
    if view["your_turn"]:
        legal = session.env.legal_actions(session.state, session.human_seat)
        view["legal_actions"] = [session.env.action_to_json(a) for a in legal]
    if session.done:
        view["result"] = {"score": session.total_reward, "lost": False}
    return view


def create_app(agents_dir: str | None = None, results_path: str = "results.jsonl",
               agents: dict[str, Checkpoint] | None = None) -> FastAPI:
    app = FastAPI(title="instructrl session service")
    registry: dict[str, Checkpoint] = dict(agents or {})
    if agents_dir:
        for name in sorted(os.listdir(agents_dir)):
            if name.endswith(".ckpt.json"):
                registry[name[: -len(".ckpt.json")]] = load_checkpoint(os.path.join(agents_dir, name))
    sessions: dict[str, Session] = {}
    results_lock = threading.Lock()

    @app.get("/healthz")
    def healthz():
        return {"protocol_version": PROTOCOL_VERSION, "status": "ok",
                "agents": len(registry), "sessions": len(sessions)}

    @app.get("/agents")
    def list_agents():
        return {
            "protocol_version": PROTOCOL_VERSION,
            "agents": [
                {
                    "id": agent_id,
                    "env": ckpt.env.env_id,
                    "kind": ckpt.kind,
                    "method_id": ckpt.method_id,
                    "has_instruction": ckpt.prior is not None,
                }
                for agent_id, ckpt in registry.items()
            ],
        }

    def _get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, detail="unknown session")
        return session

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        ckpt = registry.get(req.agent_id)
        if ckpt is None:
            raise HTTPException(404, detail=f"unknown agent {req.agent_id!r}")
        if ckpt.env.env_id == "say_select" and req.human_seat != 1:
            raise HTTPException(400, detail="demo sessions put the human in the blind seat (1)")
        if req.human_seat not in (0, 1):
            raise HTTPException(400, detail="human_seat must be 0 or 1")
        seed = req.seed if req.seed is not None else int(uuid.uuid4().int % 2**32)
        env = make_env(ckpt.env)
        state, observations = env.reset(seed)
        instruction_text = ckpt.prior.instruction.text if ckpt.prior is not None else None
        session = Session(
            id=uuid.uuid4().hex[:12],
            env=env,
            state=state,
            observations=observations,
            agent_policy=(build_policy(ckpt, role=0) if ckpt.env.env_id == "say_select"
                          else build_policy(ckpt)),
            agent_id=req.agent_id,
            human_seat=req.human_seat,
            instruction_visible=req.instruction_visible,
            instruction_text=instruction_text,
            seed=seed,
            agent_rng=make_rng(seed, STREAM_POLICY, 1 - req.human_seat),
        )
        with session.lock:
            _agent_moves(session)
            sessions[session.id] = session
            return {"protocol_version": PROTOCOL_VERSION, "session_id": session.id,
                    "view": session_view(session)}

    @app.get("/sessions/{session_id}/view")
    def get_view(session_id: str):
        session = _get_session(session_id)
        with session.lock:
            return session_view(session)

    @app.post("/sessions/{session_id}/actions")
    def post_action(session_id: str, req: ActionRequest):
        session = _get_session(session_id)
        with session.lock:
            if session.done:
                raise HTTPException(409, detail="game is over")
            if session.env.acting_player(session.state) != session.human_seat:
                raise HTTPException(409, detail="not your turn")
            legal = session.env.legal_actions(session.state, session.human_seat)
            try:
                action = session.env.action_from_json(req.action)
            except (KeyError, ValueError, TypeError):
                action = None
            if action is None or action not in legal:
                return _rejection(session, legal)
            session.state, reward, _, session.observations = session.env.step(session.state, action)
            session.total_reward += reward
            if session.env.config.env_id == "say_select":
                session.action_log.append({
                    "seat": session.human_seat,
                    "action": session.env.action_to_json(action),
                    "text": _say_select_log_text(session, session.human_seat, action,
                                                 session.human_seat),
                    "touched": [],
                })
            else:
                record = session.state.last_action
                session.action_log.append({
                    "seat": session.human_seat,
                    "action": session.env.action_to_json(record.action),
                    "text": _action_text_for_viewer(session, record, session.human_seat),
                    "touched": list(record.touched),
                })
            _push_event(session, "human_move")
            _agent_moves(session)
            if session.done:
                _push_event(session, "end")
            return {"protocol_version": PROTOCOL_VERSION, "view": session_view(session)}

    def _rejection(session: Session, legal):
        raise HTTPException(
            409,
            detail={
                "message": "illegal action",
                "legal_actions": [session.env.action_to_json(a) for a in legal],
            },
        )

    @app.post("/sessions/{session_id}/result")
    def post_result(session_id: str, req: ResultRequest):
        session = _get_session(session_id)
        with session.lock:
            if not session.done:
                raise HTTPException(409, detail="session is not terminal")
            if session.result_recorded:
                raise HTTPException(409, detail="result already recorded")
            if req.survey is not None:
                if len(req.survey) != 2 or any(not 1 <= int(a) <= 7 for a in req.survey):
                    raise HTTPException(400, detail="survey must be two answers in 1..7")
            summary = session.env.terminal_summary(session.state)
            record = {
                "protocol_version": PROTOCOL_VERSION,
                "session_id": session.id,
                "agent_id": session.agent_id,
                "condition": "with_instruction" if session.instruction_visible else "without_instruction",
                "seed": session.seed,
                "score": summary.get("score", session.total_reward),
                "lost": summary.get("bombed", False),
                "survey": list(req.survey) if req.survey is not None else None,
                "ts": time.time(),
            }
            with results_lock:
                with open(results_path, "a") as fh:
                    fh.write(json.dumps(record) + "\n")
            session.result_recorded = True
            return {"protocol_version": PROTOCOL_VERSION, "record": record}

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str, since: int = 0):
        session = _get_session(session_id)

        def stream():
            cursor = since
            idle = 0.0
            while idle < 60.0:
                with session.lock:
                    pending = session.events[cursor:]
                if pending:
                    for event in pending:
                        yield f"data: {json.dumps(event)}\n\n"
                        cursor += 1
                        if event["type"] == "end":
                            return
                    idle = 0.0
                else:
                    time.sleep(0.05)
                    idle += 0.05

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def aggregate_results(path: str) -> dict:
    """Mean +- standard error of scores and loss counts per condition."""
    import numpy as np

    rows = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    out: dict = {}
    for condition in sorted({r["condition"] for r in rows}):
        scores = np.array([r["score"] for r in rows if r["condition"] == condition], dtype=float)
        lost = sum(1 for r in rows if r["condition"] == condition and r["lost"])
        surveys = [r["survey"] for r in rows if r["condition"] == condition and r["survey"]]
        entry = {
            "n": len(scores),
            "mean_score": float(scores.mean()),
            "stderr": float(scores.std(ddof=1) / len(scores) ** 0.5) if len(scores) > 1 else 0.0,
            "games_lost": lost,
        }
        if surveys:
            arr = np.array(surveys, dtype=float)
            entry["survey_means"] = [float(m) for m in arr.mean(axis=0)]
            entry["survey_stderr"] = [float(s) for s in arr.std(axis=0, ddof=1) / len(arr) ** 0.5] \
                if len(arr) > 1 else [0.0, 0.0]
        out[condition] = entry
    return out
