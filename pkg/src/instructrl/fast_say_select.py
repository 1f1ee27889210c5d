"""Fast inlined Say-Select training loop.

Functionally the same protocol as the generic trace-based path (64-episode
batches, epsilon-greedy acting, per-pair-averaged batched updates through
:func:`instructrl.qlearn.instructq_update`), but with the episode loop
specialized to integer state and buffered Philox draws so that reference
training runs finish in seconds. Draw order, consumed from stream
``(seed, STREAM_TRAIN, 2)``:

    per episode: 1 uniform (ball count), 5 uniforms (slot priorities,
    argsorted into the +1 assignment), then per step 1 uniform for the
    epsilon test plus, when exploring, 1 uniform for the action index.

Runs are bit-reproducible for a fixed seed and single thread.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .prior import PriorIndex
from .qlearn import SaySelectResult, TabularTransition, TrainConfig, detect_plateau, instructq_update
from .rng import STREAM_INIT, STREAM_TRAIN, make_rng
from .say_select import ALICE_STATE_COUNT, BOB_STATE_COUNT
from .schedules import anneal_lambda


class _DrawBuffer:
    """Amortized uniform draws from one Philox stream."""

    def __init__(self, rng: np.random.Generator, block: int = 8192):
        self.rng = rng
        self.block = block
        self.buf = rng.random(block)
        self.pos = 0

    def next(self) -> float:
        if self.pos == self.block:
            self.buf = self.rng.random(self.block)
            self.pos = 0
        value = self.buf[self.pos]
        self.pos += 1
        return value


def train_say_select_fast(cfg: TrainConfig) -> SaySelectResult:
    if cfg.env.env_id != "say_select":
        raise ConfigError("needs a say_select environment")
    if cfg.env.variant is not None and cfg.env.variant.allow_zero_positive:
        k_low = 0
    else:
        k_low = 1
    gamma = cfg.env.gamma
    gamma2 = gamma * gamma
    horizon = cfg.env.max_steps
    epsilon = cfg.epsilon

    init_rng = make_rng(cfg.seed, STREAM_INIT)
    sigma = cfg.table_init_sigma
    alice_q = init_rng.normal(0.0, sigma, (ALICE_STATE_COUNT, 5)) if sigma else np.zeros((ALICE_STATE_COUNT, 5))
    bob_q = init_rng.normal(0.0, sigma, (BOB_STATE_COUNT, 6)) if sigma else np.zeros((BOB_STATE_COUNT, 6))

    bob_logp = None
    if cfg.prior is not None:
        index = PriorIndex(cfg.prior, beta=cfg.beta)
        texts = tuple(str(a) for a in range(6))
        bob_logp = np.stack([index.log_probs(str(a1), texts) for a1 in range(1, 6)])

    draws = _DrawBuffer(make_rng(cfg.seed, STREAM_TRAIN, 2))
    curve: list[dict] = []

    for u in range(cfg.updates):
        lam_u = anneal_lambda(cfg.lam, u) if cfg.prior is not None else 0.0
        alice_trans: list[TabularTransition] = []
        bob_trans: list[TabularTransition] = []
        batch_return = 0.0

        for _ in range(cfg.batch_episodes):
            k = k_low + int(draws.next() * (5 - k_low + 1))
            priorities = [draws.next() for _ in range(5)]
            order = sorted(range(5), key=priorities.__getitem__)
            balls = [0, 0, 0, 0, 0]
            for slot in order[:k]:
                balls[slot] = 1
            bits = sum(1 << i for i in range(5) if balls[i])

            prev2 = prev1 = 0          # Alice's announcement history
            last_bob = 0               # 0 none, 1..5 pick, 6 quit
            # pending transitions awaiting the agent's next decision point:
            # [obs_key, action_col, fractional reward so far]
            alice_pending = None
            bob_pending = None
            done = False
            ep_return = 0.0

            for t in range(horizon):
                if t % 2 == 0:
                    obs = bits * 7 + last_bob
                    if epsilon > 0.0 and draws.next() < epsilon:
                        col = int(draws.next() * 5)
                    else:
                        col = int(np.argmax(alice_q[obs]))
                    if alice_pending is not None:
                        alice_trans.append(TabularTransition(
                            alice_pending[0], alice_pending[1], alice_pending[2],
                            gamma2, obs, None))
                    alice_pending = [obs, col, 0.0]
                    prev2, prev1 = prev1, col + 1
                else:
                    obs = prev2 * 6 + prev1
                    if epsilon > 0.0 and draws.next() < epsilon:
                        act = int(draws.next() * 6)
                    else:
                        if lam_u != 0.0:
                            scores = bob_q[obs] + lam_u * bob_logp[prev1 - 1]
                        else:
                            scores = bob_q[obs]
                        act = int(np.argmax(scores))
                    if bob_pending is not None:
                        bob_trans.append(TabularTransition(
                            bob_pending[0], bob_pending[1], bob_pending[2],
                            gamma2, obs, bob_logp[prev1 - 1] if bob_logp is not None else None))
                    if act == 0:
                        bob_trans.append(TabularTransition(obs, 0, 0.0, 0.0, None, None))
                        if alice_pending is not None:
                            alice_trans.append(TabularTransition(
                                alice_pending[0], alice_pending[1], alice_pending[2],
                                0.0, None, None))
                            alice_pending = None
                        done = True
                        break
                    reward = 1 if balls[act - 1] else -1
                    balls[act - 1] = 0
                    bits &= ~(1 << (act - 1))
                    last_bob = act
                    ep_return += reward
                    bob_pending = [obs, act, float(reward)]
                    if alice_pending is not None:
                        alice_pending[2] += gamma * reward

            if not done:
                # horizon truncation: bootstrap both agents on their final
                # observation keys; the agent who moved last is one step from
                # the horizon, the other two steps.
                last_was_bob = horizon % 2 == 0
                if alice_pending is not None:
                    obs = bits * 7 + last_bob
                    alice_trans.append(TabularTransition(
                        alice_pending[0], alice_pending[1], alice_pending[2],
                        gamma2 if last_was_bob else gamma, obs, None))
                if bob_pending is not None:
                    obs = prev2 * 6 + prev1
                    bob_trans.append(TabularTransition(
                        bob_pending[0], bob_pending[1], bob_pending[2],
                        gamma if last_was_bob else gamma2, obs,
                        bob_logp[prev1 - 1] if bob_logp is not None else None))
            batch_return += ep_return

        alice_q = instructq_update(alice_q, alice_trans, 0.0, cfg.lr)
        bob_q = instructq_update(bob_q, bob_trans, lam_u, cfg.lr)
        curve.append({
            "update": u,
            "lam": lam_u,
            "mean_return": batch_return / cfg.batch_episodes,
        })

    plateau = detect_plateau([c["mean_return"] for c in curve])
    return SaySelectResult(alice_q, bob_q, curve, plateau, cfg)
