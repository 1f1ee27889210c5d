"""Two-player Hanabi.

Standard tournament rules: hints consume a token and must touch at least one
card, discarding regains a token and is illegal at the token cap, playing a
card either extends its color's fireworks stack (+1 point; completing a
stack refunds a hint token) or costs a life, the third lost life ends the
game with a team score of 0, and once the deck runs out each player takes
exactly one final turn. The environment emits the bomb-out as a terminal
correction reward of minus the points collected so far, so the sum of step
rewards always equals the official score.

Hands are ordered oldest-first; position 0 is the oldest card (letter 'A' in
language descriptions) and draws enter at the newest end. Positions relabel
when a card leaves the hand.

The default configuration is the full 5-color game (50-card deck, maximum
score 25). ``HanabiConfig.mini()`` is a 2-color, 2-card-hand variant small
enough for desk-scale training; its 20-card deck tops out at a score of 10.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import NamedTuple

from .core import EnvConfig, register_env
from .errors import ConfigError, ContractViolation, IllegalAction
from .rng import STREAM_ENV, make_rng

COLOR_NAMES = ("red", "green", "blue", "yellow", "white")
NUM_PLAYERS = 2


@dataclass(frozen=True)
class HanabiConfig:
    num_colors: int = 5
    num_ranks: int = 5
    rank_counts: tuple[int, ...] = (3, 2, 2, 2, 1)
    hand_size: int = 5
    hint_tokens: int = 8
    lives: int = 3
    final_round: bool = True        # one extra turn per player once the deck is empty
    end_on_perfect: bool = True     # stop as soon as every stack is complete

    def __post_init__(self):
        if not 1 <= self.num_colors <= len(COLOR_NAMES):
            raise ConfigError(f"num_colors must be in [1, {len(COLOR_NAMES)}]")
        if len(self.rank_counts) != self.num_ranks:
            raise ConfigError("rank_counts must have one entry per rank")
        if any(c < 1 for c in self.rank_counts):
            raise ConfigError("every rank needs at least one copy")
        if not 1 <= self.hand_size <= 5:
            raise ConfigError("hand_size must be in [1, 5]")
        if self.deck_size < NUM_PLAYERS * self.hand_size:
            raise ConfigError("deck too small to deal the opening hands")

    @property
    def deck_size(self) -> int:
        return self.num_colors * sum(self.rank_counts)

    @property
    def max_score(self) -> int:
        return self.num_colors * self.num_ranks

    @property
    def num_actions(self) -> int:
        return 2 * self.hand_size + self.num_colors + self.num_ranks

    @staticmethod
    def mini() -> "HanabiConfig":
        return HanabiConfig(num_colors=2, hand_size=2)

    def to_json(self) -> dict:
        return {
            "num_colors": self.num_colors,
            "num_ranks": self.num_ranks,
            "rank_counts": list(self.rank_counts),
            "hand_size": self.hand_size,
            "hint_tokens": self.hint_tokens,
            "lives": self.lives,
            "final_round": self.final_round,
            "end_on_perfect": self.end_on_perfect,
        }

    @staticmethod
    def from_json(data: dict) -> "HanabiConfig":
        base = HanabiConfig()
        return HanabiConfig(
            num_colors=int(data.get("num_colors", base.num_colors)),
            num_ranks=int(data.get("num_ranks", base.num_ranks)),
            rank_counts=tuple(data.get("rank_counts", base.rank_counts)),
            hand_size=int(data.get("hand_size", base.hand_size)),
            hint_tokens=int(data.get("hint_tokens", base.hint_tokens)),
            lives=int(data.get("lives", base.lives)),
            final_round=bool(data.get("final_round", base.final_round)),
            end_on_perfect=bool(data.get("end_on_perfect", base.end_on_perfect)),
        )


def hanabi_config(
    variant: HanabiConfig | None = None,
    max_steps: int = 200,
    gamma: float = 0.99,
) -> EnvConfig:
    return EnvConfig(env_id="hanabi", max_steps=max_steps, gamma=gamma, variant=variant or HanabiConfig())


def mini_hanabi_config(max_steps: int = 120, gamma: float = 0.99) -> EnvConfig:
    return hanabi_config(HanabiConfig.mini(), max_steps=max_steps, gamma=gamma)


class Card(NamedTuple):
    color: int
    rank: int  # 1-based


@dataclass(frozen=True)
class CardKnowledge:
    color_mask: int
    rank_mask: int
    hinted_color: bool = False
    hinted_rank: bool = False

    def possible_colors(self, num_colors: int) -> tuple[int, ...]:
        return tuple(c for c in range(num_colors) if self.color_mask >> c & 1)

    def possible_ranks(self, num_ranks: int) -> tuple[int, ...]:
        return tuple(r for r in range(1, num_ranks + 1) if self.rank_mask >> (r - 1) & 1)


def fresh_knowledge(config: HanabiConfig) -> CardKnowledge:
    return CardKnowledge(
        color_mask=(1 << config.num_colors) - 1,
        rank_mask=(1 << config.num_ranks) - 1,
    )


@dataclass(frozen=True)
class HanabiAction:
    kind: str   # play | discard | hint_color | hint_rank
    value: int  # hand position, color index, or rank

    def __post_init__(self):
        if self.kind not in ("play", "discard", "hint_color", "hint_rank"):
            raise ConfigError(f"unknown action kind {self.kind!r}")


def action_index(config: HanabiConfig, action: HanabiAction) -> int:
    """Dense action id: plays, discards, color hints, rank hints."""
    h = config.hand_size
    if action.kind == "play":
        return action.value
    if action.kind == "discard":
        return h + action.value
    if action.kind == "hint_color":
        return 2 * h + action.value
    return 2 * h + config.num_colors + (action.value - 1)


def action_from_index(config: HanabiConfig, index: int) -> HanabiAction:
    h = config.hand_size
    if index < h:
        return HanabiAction("play", index)
    if index < 2 * h:
        return HanabiAction("discard", index - h)
    if index < 2 * h + config.num_colors:
        return HanabiAction("hint_color", index - 2 * h)
    if index < config.num_actions:
        return HanabiAction("hint_rank", index - 2 * h - config.num_colors + 1)
    raise ConfigError(f"action index {index} out of range")


@dataclass(frozen=True)
class ActionRecord:
    """What happened on the most recent move, as both players saw it."""

    player: int
    action: HanabiAction
    touched: tuple[int, ...] = ()       # hinted positions in the recipient's hand
    card: Card | None = None            # identity of the played/discarded card
    success: bool | None = None         # play outcome


@dataclass(frozen=True)
class HanabiState:
    deck: tuple[Card, ...]              # remaining draw pile, front card drawn first
    hands: tuple[tuple[Card, ...], ...]
    knowledge: tuple[tuple[CardKnowledge, ...], ...]
    fireworks: tuple[int, ...]          # top rank per color, 0 = empty stack
    discards: tuple[Card, ...]
    hint_tokens: int
    lives: int
    current: int
    last_action: ActionRecord | None
    final_countdown: int | None         # turns left once the deck is empty
    steps: int
    done: bool
    bombed: bool

    @property
    def points(self) -> int:
        return sum(self.fireworks)

    @property
    def score(self) -> int:
        """Official score: points collected, zeroed when the team bombs out."""
        return 0 if self.bombed else self.points


@dataclass(frozen=True)
class HanabiObservation:
    player: int
    own_knowledge: tuple[CardKnowledge, ...]
    partner_hand: tuple[Card, ...]
    partner_knowledge: tuple[CardKnowledge, ...]
    fireworks: tuple[int, ...]
    hint_tokens: int
    lives: int
    discards: tuple[Card, ...]
    deck_size: int
    last_action: ActionRecord | None
    current: int
    steps: int


def full_deck(config: HanabiConfig) -> list[Card]:
    return [
        Card(color, rank)
        for color in range(config.num_colors)
        for rank in range(1, config.num_ranks + 1)
        for _ in range(config.rank_counts[rank - 1])
    ]


def played_cards(config: HanabiConfig, fireworks) -> list[Card]:
    return [Card(c, r) for c in range(config.num_colors) for r in range(1, fireworks[c] + 1)]


class HanabiEnv:
    def __init__(self, config: EnvConfig):
        self.config = config
        self.rules: HanabiConfig = config.variant or HanabiConfig()

    # -- setup ---------------------------------------------------------------

    def reset(self, seed: int):
        rng = make_rng(seed, STREAM_ENV)
        deck = full_deck(self.rules)
        order = rng.permutation(len(deck))
        shuffled = [deck[int(i)] for i in order]
        state = self.initial_state(tuple(shuffled))
        return state, self.observations(state)

    def initial_state(self, deck: tuple[Card, ...]) -> HanabiState:
        """Deal from an explicit deck order (cards dealt alternately, player 0 first)."""
        rules = self.rules
        if Counter(deck) != Counter(full_deck(rules)):
            raise ConfigError("deck is not a permutation of the full deck")
        hands: list[list[Card]] = [[], []]
        for i in range(NUM_PLAYERS * rules.hand_size):
            hands[i % NUM_PLAYERS].append(deck[i])
        remaining = tuple(deck[NUM_PLAYERS * rules.hand_size:])
        know = tuple(tuple(fresh_knowledge(rules) for _ in hand) for hand in hands)
        return HanabiState(
            deck=remaining,
            hands=tuple(tuple(h) for h in hands),
            knowledge=know,
            fireworks=(0,) * rules.num_colors,
            discards=(),
            hint_tokens=rules.hint_tokens,
            lives=rules.lives,
            current=0,
            last_action=None,
            final_countdown=NUM_PLAYERS if (rules.final_round and not remaining) else None,
            steps=0,
            done=False,
            bombed=False,
        )

    # -- queries ---------------------------------------------------------------

    def acting_player(self, state: HanabiState) -> int:
        return state.current

    def is_done(self, state: HanabiState) -> bool:
        return state.done

    def legal_actions(self, state: HanabiState, player: int):
        if state.done:
            raise ContractViolation("game is over")
        if player != state.current:
            raise ContractViolation(f"player {player} is not acting")
        rules = self.rules
        hand = state.hands[player]
        partner = state.hands[1 - player]
        actions = [HanabiAction("play", p) for p in range(len(hand))]
        if state.hint_tokens < rules.hint_tokens:
            actions += [HanabiAction("discard", p) for p in range(len(hand))]
        if state.hint_tokens > 0:
            partner_colors = {c.color for c in partner}
            partner_ranks = {c.rank for c in partner}
            actions += [HanabiAction("hint_color", c) for c in range(rules.num_colors) if c in partner_colors]
            actions += [HanabiAction("hint_rank", r) for r in range(1, rules.num_ranks + 1) if r in partner_ranks]
        return tuple(actions)

    def legal_actions_for_observation(self, obs: HanabiObservation):
        return legal_actions_from_observation(self.rules, obs)

    def observations(self, state: HanabiState):
        return tuple(
            HanabiObservation(
                player=p,
                own_knowledge=state.knowledge[p],
                partner_hand=state.hands[1 - p],
                partner_knowledge=state.knowledge[1 - p],
                fireworks=state.fireworks,
                hint_tokens=state.hint_tokens,
                lives=state.lives,
                discards=state.discards,
                deck_size=len(state.deck),
                last_action=state.last_action,
                current=state.current,
                steps=state.steps,
            )
            for p in range(NUM_PLAYERS)
        )

    # -- dynamics ---------------------------------------------------------------

    def step(self, state: HanabiState, action: HanabiAction):
        if state.done:
            raise IllegalAction("game is over")
        if action not in self.legal_actions(state, state.current):
            raise IllegalAction(f"{action} is illegal here")

        rules = self.rules
        player = state.current
        hands = [list(h) for h in state.hands]
        knowledge = [list(k) for k in state.knowledge]
        deck = list(state.deck)
        discards = list(state.discards)
        fireworks = list(state.fireworks)
        tokens = state.hint_tokens
        lives = state.lives
        reward = 0
        record: ActionRecord

        if action.kind in ("play", "discard"):
            card = hands[player].pop(action.value)
            del knowledge[player][action.value]
            if action.kind == "play":
                if card.rank == fireworks[card.color] + 1:
                    fireworks[card.color] += 1
                    reward = 1
                    if card.rank == rules.num_ranks and tokens < rules.hint_tokens:
                        tokens += 1  # completing a stack refunds a token
                    record = ActionRecord(player, action, card=card, success=True)
                else:
                    lives -= 1
                    discards.append(card)
                    record = ActionRecord(player, action, card=card, success=False)
            else:
                discards.append(card)
                tokens += 1
                record = ActionRecord(player, action, card=card)
            if deck:
                hands[player].append(deck.pop(0))
                knowledge[player].append(fresh_knowledge(rules))
        else:
            tokens -= 1
            partner = 1 - player
            touched = []
            for pos, card in enumerate(hands[partner]):
                k = knowledge[partner][pos]
                if action.kind == "hint_color":
                    bit = 1 << action.value
                    if card.color == action.value:
                        touched.append(pos)
                        k = replace(k, color_mask=bit, hinted_color=True)
                    else:
                        k = replace(k, color_mask=k.color_mask & ~bit)
                else:
                    bit = 1 << (action.value - 1)
                    if card.rank == action.value:
                        touched.append(pos)
                        k = replace(k, rank_mask=bit, hinted_rank=True)
                    else:
                        k = replace(k, rank_mask=k.rank_mask & ~bit)
                knowledge[partner][pos] = k
            record = ActionRecord(player, action, touched=tuple(touched))

        done = False
        bombed = False
        if lives == 0:
            done = True
            bombed = True
            reward -= sum(fireworks)  # terminal correction: total return equals official score (0)
        elif rules.end_on_perfect and sum(fireworks) == rules.max_score:
            done = True

        countdown = state.final_countdown
        if not done:
            if countdown is not None:
                countdown -= 1
                if countdown == 0:
                    done = True
            elif not deck:
                if rules.final_round:
                    countdown = NUM_PLAYERS
                else:
                    done = True

        new = HanabiState(
            deck=tuple(deck),
            hands=tuple(tuple(h) for h in hands),
            knowledge=tuple(tuple(k) for k in knowledge),
            fireworks=tuple(fireworks),
            discards=tuple(discards),
            hint_tokens=tokens,
            lives=lives,
            current=1 - player,
            last_action=record,
            final_countdown=countdown,
            steps=state.steps + 1,
            done=done,
            bombed=bombed,
        )
        return new, reward, done, self.observations(new)

    def terminal_summary(self, state: HanabiState) -> dict:
        return {
            "score": state.score,
            "points": state.points,
            "bombed": state.bombed,
            "lives_remaining": state.lives,
            "deck_remaining": len(state.deck),
        }

    # -- serialization ---------------------------------------------------------------

    def action_to_json(self, action: HanabiAction):
        return {"kind": action.kind, "value": action.value}

    def action_from_json(self, data) -> HanabiAction:
        return HanabiAction(kind=data["kind"], value=int(data["value"]))

    def observation_to_json(self, obs: HanabiObservation):
        return {
            "player": obs.player,
            "own_knowledge": [knowledge_to_json(k) for k in obs.own_knowledge],
            "partner_hand": [list(c) for c in obs.partner_hand],
            "partner_knowledge": [knowledge_to_json(k) for k in obs.partner_knowledge],
            "fireworks": list(obs.fireworks),
            "hint_tokens": obs.hint_tokens,
            "lives": obs.lives,
            "discards": [list(c) for c in obs.discards],
            "deck_size": obs.deck_size,
            "last_action": action_record_to_json(obs.last_action),
            "current": obs.current,
            "steps": obs.steps,
        }


def knowledge_to_json(k: CardKnowledge) -> dict:
    return {
        "color_mask": k.color_mask,
        "rank_mask": k.rank_mask,
        "hinted_color": k.hinted_color,
        "hinted_rank": k.hinted_rank,
    }


def action_record_to_json(record: ActionRecord | None) -> dict | None:
    if record is None:
        return None
    return {
        "player": record.player,
        "action": {"kind": record.action.kind, "value": record.action.value},
        "touched": list(record.touched),
        "card": list(record.card) if record.card is not None else None,
        "success": record.success,
    }


def legal_actions_from_observation(rules: HanabiConfig, obs: HanabiObservation):
    """Legal actions reconstructed from a player's own observation.

    Must agree with :meth:`HanabiEnv.legal_actions` on the underlying state;
    the test suite cross-checks the two on random rollouts.
    """
    hand_len = len(obs.own_knowledge)
    actions = [HanabiAction("play", p) for p in range(hand_len)]
    if obs.hint_tokens < rules.hint_tokens:
        actions += [HanabiAction("discard", p) for p in range(hand_len)]
    if obs.hint_tokens > 0:
        partner_colors = {c.color for c in obs.partner_hand}
        partner_ranks = {c.rank for c in obs.partner_hand}
        actions += [HanabiAction("hint_color", c) for c in range(rules.num_colors) if c in partner_colors]
        actions += [HanabiAction("hint_rank", r) for r in range(1, rules.num_ranks + 1) if r in partner_ranks]
    return tuple(actions)


# -- card knowledge classification ---------------------------------------------------


def classify_knowledge(
    config: HanabiConfig,
    knowledge: CardKnowledge,
    visible: Counter,
) -> str:
    """Classify what a player knows about one of their own cards.

    Combines direct hint masks with counting: a (color, rank) candidate is
    ruled out once every copy of it is visible to the player (partner's hand,
    discard pile, and the cards already played). Returns one of ``"both"``,
    ``"only_color"``, ``"only_rank"``, ``"none"``.
    """
    pairs = [
        (c, r)
        for c in knowledge.possible_colors(config.num_colors)
        for r in knowledge.possible_ranks(config.num_ranks)
        if visible[Card(c, r)] < config.rank_counts[r - 1]
    ]
    if not pairs:
        raise ContractViolation("no consistent identity for card; corrupt state")
    colors = {c for c, _ in pairs}
    ranks = {r for _, r in pairs}
    if len(colors) == 1 and len(ranks) == 1:
        return "both"
    if len(colors) == 1:
        return "only_color"
    if len(ranks) == 1:
        return "only_rank"
    return "none"


def visible_counter(config: HanabiConfig, partner_hand, discards, fireworks) -> Counter:
    counts: Counter = Counter(partner_hand)
    counts.update(discards)
    counts.update(played_cards(config, fireworks))
    return counts


def card_knowledge_class(env: HanabiEnv, state: HanabiState, player: int, position: int) -> str:
    if not 0 <= position < len(state.hands[player]):
        raise ContractViolation(f"position {position} not in hand")
    visible = visible_counter(env.rules, state.hands[1 - player], state.discards, state.fireworks)
    return classify_knowledge(env.rules, state.knowledge[player][position], visible)


def knowledge_class_from_observation(config: HanabiConfig, obs: HanabiObservation, position: int) -> str:
    if not 0 <= position < len(obs.own_knowledge):
        raise ContractViolation(f"position {position} not in hand")
    visible = visible_counter(config, obs.partner_hand, obs.discards, obs.fireworks)
    return classify_knowledge(config, obs.own_knowledge[position], visible)


register_env("hanabi", HanabiEnv)
