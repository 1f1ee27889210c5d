"""Regularized Q-learning: tabular (Say-Select) and small-network (Hanabi).

Updates use the one-step target ``r + g * Q(next, a')`` where ``a'`` is the
regularized argmax ``argmax_a Q(next, a) + lam * log prior(next, a)`` and
``g`` is the discount accumulated between the agent's consecutive decision
points (``gamma**2`` in the alternating Say-Select turn structure, ``gamma``
for the shared-parameter Hanabi self-play view, ``0`` at terminals).
Truncated episodes bootstrap on the final observation.

Transitions are extracted from episode traces; when regularization is
active, every non-terminal transition must carry the prior snapshot for its
next observation (recorded during rollout, or recomputed from the table for
truncation tails).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import EnvConfig, EpisodeTrace, make_env, run_episode
from .errors import ConfigError, ContractViolation
from .features import encode_observation, feature_size
from .hanabi import HanabiConfig, action_index, legal_actions_from_observation
from .nets import Adam, Mlp
from .policies import (
    HanabiPriorView,
    HanabiValuePolicy,
    SaySelectPriorView,
    SaySelectQPolicy,
)
from .prior import PriorIndex, PriorTable
from .rng import STREAM_INIT, STREAM_TRAIN, derive_seed, make_rng
from .say_select import ALICE_STATE_COUNT, BOB_STATE_COUNT, say_select_config
from .schedules import LambdaSchedule, anneal_lambda, constant


@dataclass
class TrainConfig:
    """One training run, fully determined by its seed (single-threaded)."""

    env: EnvConfig
    seed: int
    learner: str = "tabular_q"            # tabular_q | value_net | ppo
    updates: int = 400
    batch_episodes: int = 64              # episodes collected per update
    epsilon: float = 0.15
    lr: float = 0.02
    lam: LambdaSchedule = field(default_factory=lambda: constant(0.0))
    prior: PriorTable | None = None
    beta: float | None = None             # overrides the prior table's beta
    # network learner knobs
    hidden: tuple[int, ...] = (64, 64)
    replay_capacity: int = 60_000
    min_replay: int = 512
    train_batch: int = 128
    grad_steps: int = 8
    target_period: int = 10
    grad_clip: float = 5.0
    # ppo knobs
    clip_ratio: float = 0.2
    value_coef: float = 0.5
    ppo_epochs: int = 4
    checkpoint_period: int = 0            # 0 = no intermediate checkpoints
    table_init_sigma: float = 0.01        # tabular init noise; breaks early argmax ties

    def __post_init__(self):
        if self.learner not in ("tabular_q", "value_net", "ppo"):
            raise ConfigError(f"unknown learner {self.learner!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if self.updates < 1 or self.batch_episodes < 1:
            raise ConfigError("updates and batch_episodes must be >= 1")
        if self.lam.initial > 0 and self.prior is None:
            raise ConfigError("regularized training needs a prior table")


def say_select_train_config(
    seed: int,
    prior: PriorTable | None,
    lam: float = 0.25,
    updates: int = 400,
    env: EnvConfig | None = None,
) -> TrainConfig:
    """Reference Say-Select settings: epsilon 0.15, lr 0.02, 64-episode batches."""
    return TrainConfig(
        env=env or say_select_config(),
        seed=seed,
        learner="tabular_q",
        updates=updates,
        batch_episodes=64,
        epsilon=0.15,
        lr=0.02,
        lam=constant(lam),
        prior=prior,
    )


def mini_hanabi_train_config(
    seed: int,
    prior: PriorTable | None,
    lam: float = 0.3,
    updates: int = 3000,
    env: EnvConfig | None = None,
    learner: str = "value_net",
) -> TrainConfig:
    """Desk-scale mini-Hanabi settings.

    From-scratch training keeps the regularization weight constant: annealing
    it away lets the 2-color variant's structural preference for rank hints
    erode an instructed color convention before it can lock in.
    """
    from .hanabi import mini_hanabi_config

    return TrainConfig(
        env=env or mini_hanabi_config(),
        seed=seed,
        learner=learner,
        updates=updates,
        batch_episodes=8,
        epsilon=0.15,
        lr=1e-3,
        lam=constant(lam),
        prior=prior,
        hidden=(64, 64),
        grad_steps=8,
        train_batch=128,
        target_period=10,
    )


class TabularTransition(NamedTuple):
    obs: int
    act: int
    reward: float
    bootstrap: float                 # discount to the next decision; 0 at terminals
    next_obs: int | None
    next_logp: np.ndarray | None     # log prior over the full action set at next_obs


class NetTransition(NamedTuple):
    x: np.ndarray
    act: int
    reward: float
    bootstrap: float
    x_next: np.ndarray
    next_legal: np.ndarray           # action indices legal at the next observation
    next_logp: np.ndarray | None     # aligned with next_legal


def say_select_transitions(
    trace: EpisodeTrace,
    player: int,
    prior_view: SaySelectPriorView | None = None,
) -> list[TabularTransition]:
    """Per-agent transitions between the player's consecutive decision points."""
    gamma = trace.config.gamma
    steps = trace.steps
    own = [i for i, rec in enumerate(steps) if rec.player == player]
    out: list[TabularTransition] = []
    for n, i in enumerate(own):
        rec = steps[i]
        act = rec.action - 1 if player == 0 else rec.action  # Bob's action is its own column

        j = own[n + 1] if n + 1 < len(own) else None
        if j is not None:
            reward = sum(steps[u].reward * gamma ** (u - i) for u in range(i, j))
            nxt = steps[j]
            logp = None
            if nxt.prior is not None:
                logp = np.log(np.asarray(nxt.prior))
            elif prior_view is not None and player == 1:
                logp = prior_view.probs_and_logs(nxt.observation.alice_prev1)[1]
            out.append(TabularTransition(rec.observation.key(), act, reward,
                                         gamma ** (j - i), nxt.observation.key(), logp))
        else:
            total = len(steps)
            reward = sum(steps[u].reward * gamma ** (u - i) for u in range(i, total))
            if trace.truncated:
                final_obs = trace.final_observations[player]
                logp = None
                if prior_view is not None and player == 1 and final_obs.alice_prev1 != 0:
                    logp = prior_view.probs_and_logs(final_obs.alice_prev1)[1]
                out.append(TabularTransition(rec.observation.key(), act, reward,
                                             gamma ** (total - i), final_obs.key(), logp))
            else:
                out.append(TabularTransition(rec.observation.key(), act, reward, 0.0, None, None))
    return out


def instructq_update(
    q: np.ndarray,
    transitions,
    lam: float,
    lr: float,
) -> np.ndarray:
    """One batched tabular update; temporal-difference errors are averaged per
    (observation, action) cell and targets use the pre-update table."""
    err_sum: dict[tuple[int, int], float] = {}
    err_cnt: dict[tuple[int, int], int] = {}
    for t in transitions:
        if t.bootstrap != 0.0:
            row = q[t.next_obs]
            if lam != 0.0:
                if t.next_logp is None:
                    raise ContractViolation("transition is missing its prior snapshot")
                a2 = int(np.argmax(row + lam * t.next_logp))
            else:
                a2 = int(np.argmax(row))
            target = t.reward + t.bootstrap * row[a2]
        else:
            target = t.reward
        key = (t.obs, t.act)
        err_sum[key] = err_sum.get(key, 0.0) + (target - q[t.obs, t.act])
        err_cnt[key] = err_cnt.get(key, 0) + 1
    updated = q.copy()
    for (obs, act), total in err_sum.items():
        updated[obs, act] += lr * total / err_cnt[(obs, act)]
    return updated


@dataclass
class SaySelectResult:
    alice_q: np.ndarray
    bob_q: np.ndarray
    curve: list[dict]
    plateau_update: int | None
    config: TrainConfig


def detect_plateau(returns: list[float], window: int = 25, tol: float = 0.1) -> int | None:
    """First update whose trailing moving average stays within ``tol`` of the
    final moving average for the rest of training."""
    if len(returns) < 2 * window:
        return None
    ma = np.convolve(returns, np.ones(window) / window, mode="valid")
    final = ma[-1]
    off = np.nonzero(np.abs(ma - final) > tol)[0]
    start = 0 if len(off) == 0 else int(off[-1]) + 1
    return start + window - 1 if start < len(ma) else None


def train_say_select(cfg: TrainConfig) -> SaySelectResult:
    """Joint tabular training: Alice unregularized, Bob optionally regularized."""
    if cfg.env.env_id != "say_select":
        raise ConfigError("train_say_select needs a say_select environment")
    env = make_env(cfg.env)
    init_rng = make_rng(cfg.seed, STREAM_INIT)
    if cfg.table_init_sigma:
        alice_q = init_rng.normal(0.0, cfg.table_init_sigma, (ALICE_STATE_COUNT, 5))
        bob_q = init_rng.normal(0.0, cfg.table_init_sigma, (BOB_STATE_COUNT, 6))
    else:
        alice_q = np.zeros((ALICE_STATE_COUNT, 5))
        bob_q = np.zeros((BOB_STATE_COUNT, 6))
    prior_view = None
    if cfg.prior is not None:
        prior_view = SaySelectPriorView(PriorIndex(cfg.prior, beta=cfg.beta))
    lam0 = anneal_lambda(cfg.lam, 0)
    alice = SaySelectQPolicy(0, alice_q, lam=0.0, prior=None, epsilon=cfg.epsilon)
    bob = SaySelectQPolicy(1, bob_q, lam=lam0, prior=prior_view, epsilon=cfg.epsilon)

    curve: list[dict] = []
    episode = 0
    for u in range(cfg.updates):
        lam_u = anneal_lambda(cfg.lam, u)
        bob.lam = lam_u if prior_view is not None else 0.0
        traces = []
        for _ in range(cfg.batch_episodes):
            traces.append(run_episode(env, (alice, bob), derive_seed(cfg.seed, STREAM_TRAIN, episode)))
            episode += 1
        alice_trans = [t for tr in traces for t in say_select_transitions(tr, 0)]
        bob_trans = [t for tr in traces for t in say_select_transitions(tr, 1, prior_view)]
        alice_q = instructq_update(alice_q, alice_trans, 0.0, cfg.lr)
        bob_q = instructq_update(bob_q, bob_trans, bob.lam, cfg.lr)
        alice.q = alice_q
        bob.q = bob_q
        curve.append({
            "update": u,
            "lam": lam_u,
            "mean_return": float(np.mean([tr.undiscounted_return for tr in traces])),
        })
    plateau = detect_plateau([c["mean_return"] for c in curve])
    return SaySelectResult(alice_q, bob_q, curve, plateau, cfg)


# -- Hanabi value learner ------------------------------------------------------------


def hanabi_net_transitions(
    trace: EpisodeTrace,
    rules: HanabiConfig,
    prior_view: HanabiPriorView | None,
) -> list[NetTransition]:
    """Consecutive-step transitions for parameter-shared self-play."""
    gamma = trace.config.gamma
    steps = trace.steps
    xs = [encode_observation(rules, rec.observation) for rec in steps]
    legals = [legal_actions_from_observation(rules, rec.observation) for rec in steps]
    out: list[NetTransition] = []
    for i, rec in enumerate(steps):
        act = action_index(rules, rec.action)
        if i + 1 < len(steps):
            nxt = steps[i + 1]
            next_legal = np.array([action_index(rules, a) for a in legals[i + 1]])
            logp = None
            if nxt.prior is not None:
                logp = np.log(np.asarray(nxt.prior))
            elif prior_view is not None:
                logp = prior_view.probs_and_logs(nxt.observation, legals[i + 1])[1]
            out.append(NetTransition(xs[i], act, rec.reward, gamma, xs[i + 1], next_legal, logp))
        elif trace.truncated:
            final_obs = trace.final_observations[1 - rec.player]
            legal = legal_actions_from_observation(rules, final_obs)
            next_legal = np.array([action_index(rules, a) for a in legal])
            logp = prior_view.probs_and_logs(final_obs, legal)[1] if prior_view else None
            out.append(NetTransition(xs[i], act, rec.reward, gamma,
                                     encode_observation(rules, final_obs), next_legal, logp))
        else:
            out.append(NetTransition(xs[i], act, rec.reward, 0.0, xs[i], np.empty(0, dtype=int), None))
    return out


def instructq_update_net(
    net: Mlp,
    target_net: Mlp,
    batch: list[NetTransition],
    lam: float,
    optimizer: Adam,
) -> float:
    """One gradient step on the squared one-step error; returns the batch loss."""
    n = len(batch)
    x = np.stack([t.x for t in batch])
    x_next = np.stack([t.x_next for t in batch])
    q, cache = net.forward(x)
    q_next, _ = target_net.forward(x_next)
    targets = np.empty(n)
    for i, t in enumerate(batch):
        if t.bootstrap != 0.0:
            row = q_next[i][t.next_legal]
            if lam != 0.0:
                if t.next_logp is None:
                    raise ContractViolation("transition is missing its prior snapshot")
                a2 = int(np.argmax(row + lam * t.next_logp))
            else:
                a2 = int(np.argmax(row))
            targets[i] = t.reward + t.bootstrap * row[a2]
        else:
            targets[i] = t.reward
    rows = np.arange(n)
    acts = np.array([t.act for t in batch])
    err = q[rows, acts] - targets
    if not np.all(np.isfinite(err)):
        raise ContractViolation("non-finite temporal-difference error")
    dq = np.zeros_like(q)
    dq[rows, acts] = 2.0 * err / n
    grads_w, grads_b = net.backward(cache, dq)
    optimizer.step(net, grads_w, grads_b)
    return float(np.mean(err**2))


class ReplayBuffer:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.items: list[NetTransition] = []
        self.pos = 0

    def extend(self, transitions) -> None:
        for t in transitions:
            if len(self.items) < self.capacity:
                self.items.append(t)
            else:
                self.items[self.pos] = t
                self.pos = (self.pos + 1) % self.capacity

    def sample(self, rng: np.random.Generator, size: int) -> list[NetTransition]:
        idx = rng.integers(len(self.items), size=size)
        return [self.items[int(i)] for i in idx]

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class HanabiTrainResult:
    learner: str
    value_net: Mlp | None
    policy_net: Mlp | None
    curve: list[dict]
    checkpoints: list[dict]
    config: TrainConfig


def train_hanabi(cfg: TrainConfig) -> HanabiTrainResult:
    """Parameter-shared self-play training on Hanabi (value-based or PPO)."""
    if cfg.env.env_id != "hanabi":
        raise ConfigError("train_hanabi needs a hanabi environment")
    if cfg.learner == "ppo":
        from .ppo import train_hanabi_ppo

        return train_hanabi_ppo(cfg)
    if cfg.learner != "value_net":
        raise ConfigError("Hanabi training supports the value_net and ppo learners")
    return _train_hanabi_value(cfg)


def _train_hanabi_value(cfg: TrainConfig) -> HanabiTrainResult:
    env = make_env(cfg.env)
    rules: HanabiConfig = env.rules
    net = Mlp([feature_size(rules), *cfg.hidden, rules.num_actions], make_rng(cfg.seed, STREAM_INIT))
    target_net = net.copy()
    prior_view = None
    if cfg.prior is not None:
        prior_view = HanabiPriorView(PriorIndex(cfg.prior, beta=cfg.beta), rules)
    policy = HanabiValuePolicy(rules, net, lam=anneal_lambda(cfg.lam, 0),
                               prior=prior_view, epsilon=cfg.epsilon)
    optimizer = Adam(net, cfg.lr, clip_norm=cfg.grad_clip)
    replay = ReplayBuffer(cfg.replay_capacity)
    batch_rng = make_rng(cfg.seed, STREAM_TRAIN, 1)

    curve: list[dict] = []
    checkpoints: list[dict] = []
    episode = 0
    for u in range(cfg.updates):
        lam_u = anneal_lambda(cfg.lam, u)
        policy.lam = lam_u if prior_view is not None else 0.0
        traces = []
        for _ in range(cfg.batch_episodes):
            traces.append(run_episode(env, (policy, policy),
                                      derive_seed(cfg.seed, STREAM_TRAIN, 0, episode)))
            episode += 1
        for tr in traces:
            replay.extend(hanabi_net_transitions(tr, rules, prior_view))
        loss = None
        if len(replay) >= cfg.min_replay:
            for _ in range(cfg.grad_steps):
                loss = instructq_update_net(net, target_net,
                                            replay.sample(batch_rng, cfg.train_batch),
                                            policy.lam, optimizer)
        if (u + 1) % cfg.target_period == 0:
            target_net = net.copy()
        mean_score = float(np.mean([tr.terminal_info.get("score", 0) for tr in traces]))
        curve.append({"update": u, "lam": lam_u, "mean_score": mean_score, "loss": loss})
        if cfg.checkpoint_period and (u + 1) % cfg.checkpoint_period == 0:
            checkpoints.append({"update": u, "mean_score": mean_score,
                                "params": net.get_vector().copy()})
    return HanabiTrainResult("value_net", net, None, curve, checkpoints, cfg)
