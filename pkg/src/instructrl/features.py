"""Hanabi observation encoding for the network learners.

Layout (in order; sizes for the mini variant in parentheses):

* own hand knowledge, per slot: color-possibility bits, rank-possibility
  bits, hinted-color flag, hinted-rank flag, slot-occupied flag (2 x 9)
* fireworks height one-hot per color (2 x 6)
* hint tokens one-hot (9)
* lives one-hot (4)
* partner hand, per slot: color one-hot, rank one-hot, occupied flag (2 x 8)
* partner's previous action one-hot over the action space, plus a
  "no action yet" slot (12)
* discard counts per (color, rank), divided by the copy count (10)
* remaining deck fraction (1)
"""

from __future__ import annotations

import numpy as np

from .hanabi import HanabiConfig, HanabiObservation, action_index


def feature_size(rules: HanabiConfig) -> int:
    c, r, h = rules.num_colors, rules.num_ranks, rules.hand_size
    return (
        h * (c + r + 3)
        + c * (r + 1)
        + rules.hint_tokens + 1
        + rules.lives + 1
        + h * (c + r + 1)
        + rules.num_actions + 1
        + c * r
        + 1
    )


def encode_observation(rules: HanabiConfig, obs: HanabiObservation) -> np.ndarray:
    c, r, h = rules.num_colors, rules.num_ranks, rules.hand_size
    x = np.zeros(feature_size(rules))
    i = 0

    for slot in range(h):
        if slot < len(obs.own_knowledge):
            k = obs.own_knowledge[slot]
            for color in range(c):
                x[i + color] = (k.color_mask >> color) & 1
            for rank in range(r):
                x[i + c + rank] = (k.rank_mask >> rank) & 1
            x[i + c + r] = float(k.hinted_color)
            x[i + c + r + 1] = float(k.hinted_rank)
            x[i + c + r + 2] = 1.0
        i += c + r + 3

    for color in range(c):
        x[i + obs.fireworks[color]] = 1.0
        i += r + 1

    x[i + obs.hint_tokens] = 1.0
    i += rules.hint_tokens + 1
    x[i + obs.lives] = 1.0
    i += rules.lives + 1

    for slot in range(h):
        if slot < len(obs.partner_hand):
            card = obs.partner_hand[slot]
            x[i + card.color] = 1.0
            x[i + c + card.rank - 1] = 1.0
            x[i + c + r] = 1.0
        i += c + r + 1

    if obs.last_action is None:
        x[i + rules.num_actions] = 1.0
    else:
        x[i + action_index(rules, obs.last_action.action)] = 1.0
    i += rules.num_actions + 1

    for card in obs.discards:
        x[i + card.color * r + card.rank - 1] += 1.0
    for color in range(c):
        for rank0 in range(r):
            x[i + color * r + rank0] /= rules.rank_counts[rank0]
    i += c * r

    x[i] = obs.deck_size / rules.deck_size
    return x
