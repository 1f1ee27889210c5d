"""Environment contract and the seeded episode runner shared by both games.

Environments are two-player, turn-based, fully cooperative, and partially
observed. All stochasticity is consumed at ``reset`` (deals and assignments
are drawn up-front from the documented stream order in :mod:`instructrl.rng`),
so ``step`` is a pure function of ``(state, action)`` and traces replay
bit-exactly from their seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

from .errors import ConfigError, ContractViolation
from .rng import STREAM_POLICY, make_rng

NUM_PLAYERS = 2
TRACE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EnvConfig:
    """Environment selection plus the knobs shared by every environment.

    ``variant`` holds the per-environment configuration object
    (:class:`~instructrl.say_select.SaySelectVariant` or
    :class:`~instructrl.hanabi.HanabiConfig`).
    """

    env_id: str
    max_steps: int
    gamma: float
    variant: Any = None

    def __post_init__(self):
        if self.env_id not in ("say_select", "hanabi"):
            raise ConfigError(f"unknown env_id {self.env_id!r}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")


class Environment(Protocol):
    """Minimal surface every game exposes to the runner and learners."""

    config: EnvConfig

    def reset(self, seed: int): ...
    def step(self, state, action): ...
    def legal_actions(self, state, player: int): ...
    def acting_player(self, state) -> int: ...
    def observations(self, state): ...
    def is_done(self, state) -> bool: ...
    def terminal_summary(self, state) -> dict: ...
    def action_to_json(self, action) -> Any: ...
    def action_from_json(self, data): ...
    def observation_to_json(self, obs) -> Any: ...


# env_id -> factory(EnvConfig) -> Environment. Populated by the game modules.
ENV_REGISTRY: dict[str, Callable[[EnvConfig], Environment]] = {}


def register_env(env_id: str, factory: Callable[[EnvConfig], Environment]) -> None:
    ENV_REGISTRY[env_id] = factory


def make_env(config: EnvConfig) -> Environment:
    try:
        factory = ENV_REGISTRY[config.env_id]
    except KeyError:
        raise ConfigError(f"unknown env_id {config.env_id!r}") from None
    return factory(config)


@dataclass(frozen=True)
class Decision:
    """A policy's choice for one step.

    ``prior`` optionally carries the prior distribution the policy consulted,
    as probabilities aligned with the legal-action list it was given; the
    episode runner records it in the trace.
    """

    action: Any
    prior: tuple[float, ...] | None = None


class Policy(Protocol):
    def decide(self, observation, legal_actions, rng) -> Decision: ...


@dataclass(frozen=True)
class StepRecord:
    t: int
    player: int
    observation: Any
    action: Any
    reward: float
    prior: tuple[float, ...] | None


@dataclass
class EpisodeTrace:
    """Seeded, replayable record of one game.

    ``total_return`` is the discounted sum ``sum_t gamma^t * r_t`` over the
    recorded steps; ``undiscounted_return`` is the plain sum (the game score
    for Hanabi). ``terminal_reason`` is one of ``"done"``, ``"max_steps"``,
    or ``"illegal_action"`` (aborted episodes).
    """

    config: EnvConfig
    seed: int
    steps: list[StepRecord] = field(default_factory=list)
    final_observations: Any = None
    terminal_reason: str = "done"
    terminal_info: dict = field(default_factory=dict)
    aborted: bool = False

    @property
    def total_return(self) -> float:
        g = self.config.gamma
        return sum(rec.reward * g**rec.t for rec in self.steps)

    @property
    def undiscounted_return(self) -> float:
        return sum(rec.reward for rec in self.steps)

    @property
    def truncated(self) -> bool:
        return self.terminal_reason == "max_steps"

    def to_json(self) -> dict:
        env = make_env(self.config)
        return {
            "version": TRACE_SCHEMA_VERSION,
            "env": env_config_to_json(self.config),
            "seed": int(self.seed),
            "steps": [
                {
                    "t": rec.t,
                    "player": rec.player,
                    "observation": env.observation_to_json(rec.observation),
                    "action": env.action_to_json(rec.action),
                    "reward": rec.reward,
                    "prior": list(rec.prior) if rec.prior is not None else None,
                }
                for rec in self.steps
            ],
            "terminal_reason": self.terminal_reason,
            "terminal_info": self.terminal_info,
            "aborted": self.aborted,
            "total_return": self.total_return,
            "undiscounted_return": self.undiscounted_return,
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def run_episode(
    env: Environment,
    policies: Sequence[Policy],
    seed: int,
    record_prior: bool = True,
) -> EpisodeTrace:
    """Roll out one episode with one policy per player.

    Terminates on the environment's done flag or after ``config.max_steps``
    steps. A policy returning an illegal action aborts the episode; the
    returned trace is flagged ``aborted`` with reason ``"illegal_action"``.
    """
    if len(policies) != NUM_PLAYERS:
        raise ContractViolation(f"expected {NUM_PLAYERS} policies, got {len(policies)}")
    state, observations = env.reset(seed)
    rngs = [make_rng(seed, STREAM_POLICY, p) for p in range(NUM_PLAYERS)]
    trace = EpisodeTrace(config=env.config, seed=seed)

    t = 0
    while not env.is_done(state) and t < env.config.max_steps:
        player = env.acting_player(state)
        legal = env.legal_actions(state, player)
        decision = policies[player].decide(observations[player], legal, rngs[player])
        if decision.action not in legal:
            trace.terminal_reason = "illegal_action"
            trace.aborted = True
            trace.terminal_info = {"player": player, "action": repr(decision.action)}
            trace.final_observations = observations
            return trace
        obs_before = observations[player]
        state, reward, done, observations = env.step(state, decision.action)
        trace.steps.append(
            StepRecord(
                t=t,
                player=player,
                observation=obs_before,
                action=decision.action,
                reward=reward,
                prior=decision.prior if record_prior else None,
            )
        )
        t += 1

    trace.final_observations = observations
    trace.terminal_reason = "done" if env.is_done(state) else "max_steps"
    trace.terminal_info = env.terminal_summary(state)
    return trace


def replay_trace(env: Environment, trace: EpisodeTrace) -> bool:
    """Re-run a trace's actions from its seed and check every recorded step.

    Returns True when observations, rewards, and the terminal flag all
    reproduce; raises ContractViolation on the first divergence.
    """
    state, observations = env.reset(trace.seed)
    for rec in trace.steps:
        player = env.acting_player(state)
        if player != rec.player:
            raise ContractViolation(f"step {rec.t}: acting player diverged")
        if observations[player] != rec.observation:
            raise ContractViolation(f"step {rec.t}: observation diverged")
        state, reward, done, observations = env.step(state, rec.action)
        if reward != rec.reward:
            raise ContractViolation(f"step {rec.t}: reward diverged")
    if trace.terminal_reason == "done" and not env.is_done(state):
        raise ContractViolation("terminal flag diverged")
    return True


def env_config_to_json(config: EnvConfig) -> dict:
    data = {
        "env_id": config.env_id,
        "max_steps": config.max_steps,
        "gamma": config.gamma,
    }
    if config.variant is not None:
        data["variant"] = config.variant.to_json()
    return data


def env_config_from_json(data: dict) -> EnvConfig:
    from . import hanabi, say_select  # deferred: avoids an import cycle

    variant = None
    if data["env_id"] == "say_select":
        variant = say_select.SaySelectVariant.from_json(data.get("variant", {}))
    elif data["env_id"] == "hanabi":
        variant = hanabi.HanabiConfig.from_json(data.get("variant", {}))
    return EnvConfig(
        env_id=data["env_id"],
        max_steps=int(data["max_steps"]),
        gamma=float(data["gamma"]),
        variant=variant,
    )
