"""Clipped-surrogate policy optimization with a prior-anchoring penalty.

The per-step loss is

    -min(ratio * A, clip(ratio, 1-c, 1+c) * A)
        + lam * KL(pi(.|obs) || prior(.|obs))
        + value_coef * (V(obs) - return)**2

averaged over the batch. ``ratio`` compares the current policy to the
behavior policy that collected the step, the advantage is the one-step
temporal difference ``r + g*V(next) - V(obs)`` frozen at collection time,
and the value head regresses on discounted returns-to-go. Gradients are
computed analytically and are validated against central finite differences
in the test suite. With ``lam == 0`` the penalty term is skipped entirely,
reproducing the vanilla algorithm bit-exactly.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import EpisodeTrace, make_env, run_episode
from .errors import ConfigError, ContractViolation
from .features import encode_observation, feature_size
from .hanabi import HanabiConfig, action_index, legal_actions_from_observation
from .nets import Adam, Mlp
from .policies import HanabiPpoPolicy, HanabiPriorView
from .prior import PriorIndex
from .rng import STREAM_INIT, STREAM_TRAIN, derive_seed, make_rng
from .schedules import anneal_lambda


class PpoStep(NamedTuple):
    x: np.ndarray
    a_pos: int                      # position of the taken action in legal_idx
    legal_idx: np.ndarray
    behavior_prob: float
    prior: np.ndarray | None        # prior probabilities aligned with legal_idx
    advantage: float
    ret: float


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) for strictly positive q on p's support."""
    mask = p > 0
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask]))))


def policy_distribution(logits_row: np.ndarray, legal_idx: np.ndarray) -> np.ndarray:
    z = logits_row[legal_idx]
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def ppo_loss_and_grads(
    policy_net: Mlp,
    value_net: Mlp,
    steps: list[PpoStep],
    lam: float,
    clip_ratio: float = 0.2,
    value_coef: float = 0.5,
):
    """Batch loss plus analytic gradients for both networks."""
    n = len(steps)
    x = np.stack([s.x for s in steps])
    logits, cache_p = policy_net.forward(x)
    values, cache_v = value_net.forward(x)
    d_logits = np.zeros_like(logits)
    d_values = np.zeros_like(values)
    loss = 0.0

    for i, s in enumerate(steps):
        z = logits[i, s.legal_idx]
        zs = z - z.max()
        e = np.exp(zs)
        total = e.sum()
        pi = e / total
        log_pi = zs - np.log(total)

        ratio = pi[s.a_pos] / s.behavior_prob
        surrogate = ratio * s.advantage
        clipped = float(np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)) * s.advantage
        loss += -min(surrogate, clipped) / n

        # d(-min)/d(ratio): the unclipped branch when it attains the min,
        # otherwise the clip branch (whose slope vanishes outside the band).
        if surrogate <= clipped:
            d_ratio = -s.advantage
        elif 1.0 - clip_ratio < ratio < 1.0 + clip_ratio:
            d_ratio = -s.advantage
        else:
            d_ratio = 0.0
        onehot = np.zeros(len(pi))
        onehot[s.a_pos] = 1.0
        dz = d_ratio * ratio * (onehot - pi)

        if lam != 0.0:
            if s.prior is None:
                raise ContractViolation("regularized update is missing its prior snapshot")
            log_prior = np.log(s.prior)
            gap = log_pi - log_prior
            kl = float(np.sum(pi * gap))
            loss += lam * kl / n
            dz = dz + lam * pi * (gap - kl)

        d_logits[i, s.legal_idx] += dz / n

        err = values[i, 0] - s.ret
        loss += value_coef * err * err / n
        d_values[i, 0] = 2.0 * value_coef * err / n

    if not np.isfinite(loss):
        raise ContractViolation("non-finite loss")
    grads_p = policy_net.backward(cache_p, d_logits)
    grads_v = value_net.backward(cache_v, d_values)
    return loss, grads_p, grads_v


def instructppo_update(
    policy_net: Mlp,
    value_net: Mlp,
    steps: list[PpoStep],
    lam: float,
    opt_policy: Adam,
    opt_value: Adam,
    clip_ratio: float = 0.2,
    value_coef: float = 0.5,
) -> float:
    """One gradient step over the batch; returns the loss before the step."""
    loss, (gw_p, gb_p), (gw_v, gb_v) = ppo_loss_and_grads(
        policy_net, value_net, steps, lam, clip_ratio, value_coef
    )
    opt_policy.step(policy_net, gw_p, gb_p)
    opt_value.step(value_net, gw_v, gb_v)
    return loss


def ppo_steps_from_trace(
    trace: EpisodeTrace,
    rules: HanabiConfig,
    policy_net: Mlp,
    value_net: Mlp,
    prior_view: HanabiPriorView | None,
) -> list[PpoStep]:
    """Turn a sampled trace into update steps.

    Behavior probabilities are recomputed from the (unchanged) rollout
    parameters; advantages and value targets are frozen here, before any
    gradient step touches the networks.
    """
    gamma = trace.config.gamma
    steps = trace.steps
    xs = np.stack([encode_observation(rules, rec.observation) for rec in steps])
    logits, _ = policy_net.forward(xs)
    values = value_net.forward(xs)[0][:, 0]

    legal_sets = [legal_actions_from_observation(rules, rec.observation) for rec in steps]
    boot_value = 0.0
    if trace.truncated:
        final_obs = trace.final_observations[1 - steps[-1].player]
        boot_value = float(value_net.forward(encode_observation(rules, final_obs))[0][0])

    out: list[PpoStep] = []
    rets = np.zeros(len(steps))
    nxt = boot_value
    for i in reversed(range(len(steps))):
        rets[i] = steps[i].reward + gamma * nxt
        nxt = rets[i]

    for i, rec in enumerate(steps):
        legal = legal_sets[i]
        legal_idx = np.array([action_index(rules, a) for a in legal])
        pi = policy_distribution(logits[i], legal_idx)
        a_pos = legal.index(rec.action)
        if i + 1 < len(steps):
            v_next = values[i + 1]
        elif trace.truncated:
            v_next = boot_value
        else:
            v_next = 0.0
        advantage = rec.reward + gamma * v_next - values[i] if i + 1 < len(steps) or trace.truncated \
            else rec.reward - values[i]
        prior = None
        if rec.prior is not None:
            prior = np.asarray(rec.prior)
        elif prior_view is not None:
            prior = prior_view.probs_and_logs(rec.observation, legal)[0]
        out.append(PpoStep(xs[i], a_pos, legal_idx, float(pi[a_pos]), prior,
                           float(advantage), float(rets[i])))
    return out


def train_hanabi_ppo(cfg) -> "HanabiTrainResult":
    from .qlearn import HanabiTrainResult

    if cfg.env.env_id != "hanabi":
        raise ConfigError("train_hanabi_ppo needs a hanabi environment")
    env = make_env(cfg.env)
    rules: HanabiConfig = env.rules
    dim = feature_size(rules)
    policy_net = Mlp([dim, *cfg.hidden, rules.num_actions], make_rng(cfg.seed, STREAM_INIT))
    value_net = Mlp([dim, *cfg.hidden, 1], make_rng(cfg.seed, STREAM_INIT, 1))
    prior_view = None
    if cfg.prior is not None:
        prior_view = HanabiPriorView(PriorIndex(cfg.prior, beta=cfg.beta), rules)
    rollout = HanabiPpoPolicy(rules, policy_net, prior=prior_view, sample=True)
    opt_policy = Adam(policy_net, cfg.lr, clip_norm=cfg.grad_clip)
    opt_value = Adam(value_net, cfg.lr, clip_norm=cfg.grad_clip)

    curve: list[dict] = []
    checkpoints: list[dict] = []
    episode = 0
    for u in range(cfg.updates):
        lam_u = anneal_lambda(cfg.lam, u) if prior_view is not None else 0.0
        traces = []
        for _ in range(cfg.batch_episodes):
            traces.append(run_episode(env, (rollout, rollout),
                                      derive_seed(cfg.seed, STREAM_TRAIN, 0, episode)))
            episode += 1
        batch: list[PpoStep] = []
        for tr in traces:
            batch.extend(ppo_steps_from_trace(tr, rules, policy_net, value_net, prior_view))
        loss = None
        for _ in range(cfg.ppo_epochs):
            loss = instructppo_update(policy_net, value_net, batch, lam_u,
                                      opt_policy, opt_value, cfg.clip_ratio, cfg.value_coef)
        mean_score = float(np.mean([tr.terminal_info.get("score", 0) for tr in traces]))
        curve.append({"update": u, "lam": lam_u, "mean_score": mean_score, "loss": loss})
        if cfg.checkpoint_period and (u + 1) % cfg.checkpoint_period == 0:
            checkpoints.append({"update": u, "mean_score": mean_score,
                                "params": np.concatenate([policy_net.get_vector(),
                                                          value_net.get_vector()])})
    return HanabiTrainResult("ppo", value_net, policy_net, curve, checkpoints, cfg)
