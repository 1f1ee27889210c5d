"""Acting: the regularized argmax primitive and the policy objects.

``instructq_act`` implements epsilon-greedy selection over
``Q + lambda * log(prior)``. Ties break toward the lowest action index, the
explore/exploit draw happens before any index draw (documented rng order),
and with ``lam == 0`` the prior is not touched at all, so regularized and
vanilla runs consume identical random streams and produce bit-identical
trajectories.
"""

from __future__ import annotations

import numpy as np

from .core import Decision
from .errors import ContractViolation
from .features import encode_observation
from .hanabi import (
    HanabiAction,
    HanabiConfig,
    HanabiObservation,
    action_index,
    legal_actions_from_observation,
)
from .language import describe_action, render_observation, hanabi_observation_descriptor
from .prior import PriorIndex
from .say_select import AliceObservation, BobObservation


def instructq_act(
    q_values: np.ndarray,
    prior_probs: np.ndarray | None = None,
    lam: float = 0.0,
    epsilon: float = 0.0,
    rng: np.random.Generator | None = None,
    prior_log_probs: np.ndarray | None = None,
) -> int:
    """Pick a position among the candidate actions.

    ``q_values`` (and the prior arrays) are aligned with the caller's legal
    action list; the return value indexes into it.
    """
    n = len(q_values)
    if epsilon > 0.0:
        if rng is None:
            raise ContractViolation("exploration needs a generator")
        if rng.random() < epsilon:
            return int(rng.integers(n))
    if lam != 0.0:
        if prior_log_probs is None:
            if prior_probs is None:
                raise ContractViolation("lam > 0 requires a prior distribution")
            prior_log_probs = np.log(prior_probs)
        scores = q_values + lam * prior_log_probs
    else:
        scores = q_values
    return int(np.argmax(scores))


class RandomPolicy:
    """Uniform over legal actions."""

    def decide(self, observation, legal_actions, rng) -> Decision:
        return Decision(legal_actions[int(rng.integers(len(legal_actions)))])


# -- Say-Select --------------------------------------------------------------------------


class SaySelectPriorView:
    """Log-prior vectors over Bob's six actions, keyed by Alice's last announcement."""

    ACTION_TEXTS = tuple(str(a) for a in range(6))

    def __init__(self, index: PriorIndex):
        self.index = index

    def probs_and_logs(self, alice_prev1: int):
        if alice_prev1 == 0:
            raise ContractViolation("prior undefined before Alice's first announcement")
        return self.index.probs_and_logs(str(alice_prev1), self.ACTION_TEXTS)


class SaySelectQPolicy:
    """Tabular epsilon-greedy policy for either seat.

    Alice (role 0) indexes a (224, 5) table with actions 1..5 at columns
    0..4; Bob (role 1) indexes a (36, 6) table with action == column. The
    trainer reassigns ``q`` after each update and ``lam`` as it anneals.
    """

    def __init__(self, role: int, q: np.ndarray, lam: float = 0.0,
                 prior: SaySelectPriorView | None = None, epsilon: float = 0.0):
        self.role = role
        self.q = q
        self.lam = lam
        self.prior = prior
        self.epsilon = epsilon

    def decide(self, observation, legal_actions, rng) -> Decision:
        row = self.q[observation.key()]
        probs = logs = None
        if self.prior is not None and self.role == 1:
            probs, logs = self.prior.probs_and_logs(observation.alice_prev1)
        pos = instructq_act(row, lam=self.lam, epsilon=self.epsilon, rng=rng,
                            prior_log_probs=logs if self.lam != 0.0 else None)
        return Decision(legal_actions[pos], prior=tuple(probs) if probs is not None else None)


class ScriptedAlice:
    """Announces a +1 ball while one exists, then repeats her last announcement.

    Her observation does not include her own last announcement; when the
    partner follows the matching convention, his last pick equals it.
    """

    def decide(self, observation: AliceObservation, legal_actions, rng) -> Decision:
        positives = [i + 1 for i, v in enumerate(observation.balls) if v > 0]
        if positives:
            return Decision(positives[0])
        if 1 <= observation.last_bob <= 5:
            return Decision(observation.last_bob)
        return Decision(1)


class ScriptedBob:
    """Picks the announced ball; quits when the announcement repeats."""

    def decide(self, observation: BobObservation, legal_actions, rng) -> Decision:
        if observation.alice_prev1 != 0 and observation.alice_prev1 == observation.alice_prev2:
            return Decision(0)
        return Decision(observation.alice_prev1 if observation.alice_prev1 else 1)


# -- Hanabi ------------------------------------------------------------------------------


class HanabiPriorView:
    """Cached prior lookups keyed by (last-move descriptor, legal set)."""

    def __init__(self, index: PriorIndex, rules: HanabiConfig):
        self.index = index
        self.rules = rules
        self._obs_text: dict = {}
        self._act_text: dict[HanabiAction, str] = {}
        self._cache: dict = {}

    def probs_and_logs(self, obs: HanabiObservation, legal_actions):
        desc = hanabi_observation_descriptor(obs)
        key = (desc, legal_actions)
        hit = self._cache.get(key)
        if hit is None:
            obs_text = self._obs_text.get(desc)
            if obs_text is None:
                obs_text = self._obs_text[desc] = render_observation(desc)
            act_texts = []
            for action in legal_actions:
                text = self._act_text.get(action)
                if text is None:
                    text = self._act_text[action] = describe_action("hanabi", action)
                act_texts.append(text)
            hit = self._cache[key] = self.index.probs_and_logs(obs_text, act_texts)
        return hit


class HanabiValuePolicy:
    """Greedy/epsilon-greedy acting on a Q network, optionally regularized.

    With ``lam == 0`` the prior view is only consulted for trace records,
    never for the argmax.
    """

    def __init__(self, rules: HanabiConfig, net, lam: float = 0.0,
                 prior: HanabiPriorView | None = None, epsilon: float = 0.0,
                 record_prior: bool = True):
        self.rules = rules
        self.net = net
        self.lam = lam
        self.prior = prior
        self.epsilon = epsilon
        self.record_prior = record_prior

    def decide(self, observation: HanabiObservation, legal_actions, rng) -> Decision:
        x = encode_observation(self.rules, observation)
        q_all, _ = self.net.forward(x)
        legal_idx = [action_index(self.rules, a) for a in legal_actions]
        probs = logs = None
        if self.prior is not None:
            probs, logs = self.prior.probs_and_logs(observation, legal_actions)
        pos = instructq_act(q_all[legal_idx], lam=self.lam, epsilon=self.epsilon, rng=rng,
                            prior_log_probs=logs if self.lam != 0.0 else None)
        prior_rec = tuple(probs) if (probs is not None and self.record_prior) else None
        return Decision(legal_actions[pos], prior=prior_rec)


class HanabiPpoPolicy:
    """Softmax policy over legal actions; samples during training, argmax at eval."""

    def __init__(self, rules: HanabiConfig, net, prior: HanabiPriorView | None = None,
                 sample: bool = True, record_prior: bool = True):
        self.rules = rules
        self.net = net
        self.prior = prior
        self.sample = sample
        self.record_prior = record_prior

    def action_probs(self, observation: HanabiObservation, legal_actions) -> np.ndarray:
        x = encode_observation(self.rules, observation)
        logits, _ = self.net.forward(x)
        legal_idx = [action_index(self.rules, a) for a in legal_actions]
        z = logits[legal_idx]
        z = z - z.max()
        e = np.exp(z)
        return e / e.sum()

    def decide(self, observation: HanabiObservation, legal_actions, rng) -> Decision:
        pi = self.action_probs(observation, legal_actions)
        if self.sample:
            pos = int(rng.choice(len(legal_actions), p=pi))
        else:
            pos = int(np.argmax(pi))
        prior_rec = None
        if self.prior is not None and self.record_prior:
            prior_rec = tuple(self.prior.probs_and_logs(observation, legal_actions)[0])
        return Decision(legal_actions[pos], prior=prior_rec)


def adapt_policy(base: HanabiValuePolicy, prior: HanabiPriorView | None, lam: float) -> HanabiValuePolicy:
    """Post-hoc regularized view of a frozen Q policy: argmax(Q + lam*log prior).

    No training happens; the returned policy shares the base network. With
    ``lam == 0`` action choices are identical to the base greedy policy.
    """
    if lam != 0.0 and prior is None:
        raise ContractViolation("adaptation with lam > 0 needs a prior")
    return HanabiValuePolicy(base.rules, base.net, lam=lam, prior=prior, epsilon=0.0)


def legal_for(policy_rules: HanabiConfig, obs: HanabiObservation):
    return legal_actions_from_observation(policy_rules, obs)
