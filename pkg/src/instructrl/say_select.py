"""The Say-Select game.

Five balls sit on the table, each worth +1 or -1. Alice sees every ball's
value; blind-folded Bob does not. Players alternate single moves: Alice
announces a number from 1 to 5, then Bob either picks a ball (collecting its
value for the team, after which the ball is put back worth -1) or quits,
ending the game. Alice observes the ball values and Bob's previous move; Bob
observes only Alice's last two announcements.

Actions are plain integers. Alice: 1..5 (the announced number). Bob: 0 to
quit, 1..5 to pick the corresponding ball.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import EnvConfig, register_env
from .errors import ContractViolation, IllegalAction
from .rng import STREAM_ENV, make_rng

NONE = 0          # sentinel for "no announcement yet" in histories
BOB_QUIT = 0
LAST_BOB_NONE = 0
LAST_BOB_QUIT = 6  # last_bob encoding: 0 none, 1..5 pick, 6 quit

NUM_BALLS = 5
ALICE_ACTIONS = tuple(range(1, NUM_BALLS + 1))
BOB_ACTIONS = tuple(range(0, NUM_BALLS + 1))

ALICE_STATE_COUNT = 2**NUM_BALLS * 7   # ball pattern x last Bob move
BOB_STATE_COUNT = 6 * 6                # Alice's last two announcements


@dataclass(frozen=True)
class SaySelectVariant:
    """Game knobs. ``allow_zero_positive`` widens the +1-ball count to {0..5}."""

    allow_zero_positive: bool = False

    def to_json(self) -> dict:
        return {"allow_zero_positive": self.allow_zero_positive}

    @staticmethod
    def from_json(data: dict) -> "SaySelectVariant":
        return SaySelectVariant(allow_zero_positive=bool(data.get("allow_zero_positive", False)))


def say_select_config(
    max_steps: int = 20,
    gamma: float = 0.99,
    allow_zero_positive: bool = False,
) -> EnvConfig:
    """Default Say-Select configuration.

    The game has no natural horizon if Bob never quits, so episodes truncate
    at ``max_steps`` single-agent moves; optimal play is unaffected because
    repeat picks only lose points.
    """
    return EnvConfig(
        env_id="say_select",
        max_steps=max_steps,
        gamma=gamma,
        variant=SaySelectVariant(allow_zero_positive=allow_zero_positive),
    )


@dataclass(frozen=True)
class SaySelectState:
    balls: tuple[int, ...]        # 5 values in {+1, -1}
    alice_prev2: int              # Alice's announcement two of her moves back (0 = none)
    alice_prev1: int              # Alice's most recent announcement (0 = none)
    last_bob: int                 # 0 none, 1..5 pick, 6 quit
    phase: int                    # 0 Alice to act, 1 Bob to act
    steps: int
    done: bool


@dataclass(frozen=True)
class AliceObservation:
    balls: tuple[int, ...]
    last_bob: int

    def key(self) -> int:
        """Dense index into Alice's 224-entry observation space."""
        bits = sum(1 << i for i, v in enumerate(self.balls) if v > 0)
        return bits * 7 + self.last_bob


@dataclass(frozen=True)
class BobObservation:
    alice_prev2: int
    alice_prev1: int

    def key(self) -> int:
        """Dense index into Bob's 36-entry observation space."""
        return self.alice_prev2 * 6 + self.alice_prev1


class SaySelectEnv:
    def __init__(self, config: EnvConfig):
        self.config = config
        self.variant: SaySelectVariant = config.variant or SaySelectVariant()

    def reset(self, seed: int):
        rng = make_rng(seed, STREAM_ENV)
        low = 0 if self.variant.allow_zero_positive else 1
        k = int(rng.integers(low, NUM_BALLS + 1))
        order = rng.permutation(NUM_BALLS)
        balls = [-1] * NUM_BALLS
        for i in order[:k]:
            balls[int(i)] = 1
        state = SaySelectState(
            balls=tuple(balls),
            alice_prev2=NONE,
            alice_prev1=NONE,
            last_bob=LAST_BOB_NONE,
            phase=0,
            steps=0,
            done=False,
        )
        return state, self.observations(state)

    def observations(self, state: SaySelectState):
        return (
            AliceObservation(balls=state.balls, last_bob=state.last_bob),
            BobObservation(alice_prev2=state.alice_prev2, alice_prev1=state.alice_prev1),
        )

    def acting_player(self, state: SaySelectState) -> int:
        return state.phase

    def is_done(self, state: SaySelectState) -> bool:
        return state.done

    def legal_actions(self, state: SaySelectState, player: int):
        if state.done:
            raise ContractViolation("game is over")
        if player != state.phase:
            raise ContractViolation(f"player {player} is not acting in phase {state.phase}")
        return ALICE_ACTIONS if player == 0 else BOB_ACTIONS

    def step(self, state: SaySelectState, action):
        if state.done:
            raise IllegalAction("game is over")
        action = int(action)
        if state.phase == 0:
            if not 1 <= action <= NUM_BALLS:
                raise IllegalAction(f"Alice must announce 1..5, got {action}")
            new = SaySelectState(
                balls=state.balls,
                alice_prev2=state.alice_prev1,
                alice_prev1=action,
                last_bob=state.last_bob,
                phase=1,
                steps=state.steps + 1,
                done=False,
            )
            return new, 0, False, self.observations(new)

        if not 0 <= action <= NUM_BALLS:
            raise IllegalAction(f"Bob must pick 1..5 or quit (0), got {action}")
        if action == BOB_QUIT:
            new = SaySelectState(
                balls=state.balls,
                alice_prev2=state.alice_prev2,
                alice_prev1=state.alice_prev1,
                last_bob=LAST_BOB_QUIT,
                phase=0,
                steps=state.steps + 1,
                done=True,
            )
            return new, 0, True, self.observations(new)

        reward = state.balls[action - 1]
        balls = list(state.balls)
        balls[action - 1] = -1  # picked balls return to the table worth -1
        new = SaySelectState(
            balls=tuple(balls),
            alice_prev2=state.alice_prev2,
            alice_prev1=state.alice_prev1,
            last_bob=action,
            phase=0,
            steps=state.steps + 1,
            done=False,
        )
        return new, reward, False, self.observations(new)

    def terminal_summary(self, state: SaySelectState) -> dict:
        return {"quit": state.last_bob == LAST_BOB_QUIT}

    def action_to_json(self, action):
        return int(action)

    def action_from_json(self, data):
        return int(data)

    def observation_to_json(self, obs):
        if isinstance(obs, AliceObservation):
            return {"role": "alice", "balls": list(obs.balls), "last_bob": obs.last_bob}
        return {"role": "bob", "alice_prev2": obs.alice_prev2, "alice_prev1": obs.alice_prev1}


register_env("say_select", SaySelectEnv)
