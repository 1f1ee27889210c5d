"""Language surface of the games: canonical sentences, prompts, enumeration.

Every observation a prior can condition on and every action it can score has
one canonical English rendering. Hanabi observations describe the partner's
most recent move (hand positions as letters, oldest card = 'A'; ranks
spelled out; hint sentences list the touched positions). Hanabi actions
carry their position letter for play/discard, while all color hints share
one sentence and all rank hints share another. Say-Select renders Alice's
most recent announcement as a digit and Bob's actions as "0" (quit) through
"5".

The renderings are invertible; :func:`parse_observation_text` and
:func:`parse_action_text` recover the structured descriptor, which is what
the rule-based oracle backends operate on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ConfigError, ContractViolation
from .hanabi import COLOR_NAMES, HanabiAction, HanabiConfig, HanabiObservation
from .say_select import BobObservation

RANK_WORDS = ("one", "two", "three", "four", "five")
POSITION_LETTERS = "ABCDE"

TEMPLATE_COMPLETION = "completion_style"
TEMPLATE_QA = "qa_style"


@dataclass(frozen=True)
class Instruction:
    """An instruction text plus the prompt template it is used with."""

    id: str
    text: str
    template: str
    tag: str = ""

    def __post_init__(self):
        if not self.text:
            raise ConfigError("instruction text must be non-empty")
        if self.template not in (TEMPLATE_COMPLETION, TEMPLATE_QA):
            raise ConfigError(f"unknown template {self.template!r}")


INSTRUCTIONS: dict[str, Instruction] = {
    inst.id: inst
    for inst in (
        Instruction(
            id="say_select",
            text="I should select the same number as my partner",
            template=TEMPLATE_COMPLETION,
            tag="say_select",
        ),
        Instruction(
            id="hanabi_color",
            text=(
                "If my partner tells me the 'color' of some of my cards, I should 'play'"
                " those specific cards. If my partner does something else, e.g. discards"
                " their card or tells me the 'rank' of my cards, then I may 'hint color'"
                " to my partner"
            ),
            template=TEMPLATE_QA,
            tag="color/original",
        ),
        Instruction(
            id="hanabi_rank",
            text=(
                "If my partner tells me the 'rank' of some of my cards, I should 'play'"
                " those specific cards. If my partner does something else, e.g. discards"
                " their card or tells me the 'color' of my cards, then I may 'hint rank'"
                " to my partner"
            ),
            template=TEMPLATE_QA,
            tag="rank/original",
        ),
        Instruction(
            id="hanabi_color_simple",
            text=(
                "If my partner told me the color of some of my cards, I should play"
                " those specific cards. Otherwise, I should hint color to my partner"
            ),
            template=TEMPLATE_QA,
            tag="color/simple",
        ),
        Instruction(
            id="hanabi_rank_simple",
            text=(
                "If my partner told me the rank of some of my cards, I should play"
                " those specific cards. Otherwise, I should hint rank to my partner"
            ),
            template=TEMPLATE_QA,
            tag="rank/simple",
        ),
    )
}


def get_instruction(ref: str | Instruction) -> Instruction:
    if isinstance(ref, Instruction):
        return ref
    try:
        return INSTRUCTIONS[ref]
    except KeyError:
        raise ConfigError(f"unknown instruction id {ref!r}") from None


# -- structured descriptors ------------------------------------------------------------

OBS_NULL = "null"
OBS_PLAY = "play"
OBS_DISCARD = "discard"
OBS_HINT_COLOR = "hint_color"
OBS_HINT_RANK = "hint_rank"


@dataclass(frozen=True)
class ObsDescriptor:
    """Partner's-last-move descriptor that the Hanabi observation text encodes."""

    kind: str
    position: int | None = None          # play / discard
    value: int | None = None             # hinted color index or rank
    positions: tuple[int, ...] = ()      # touched positions for hints


@dataclass(frozen=True)
class ActDescriptor:
    kind: str                            # play | discard | hint_color | hint_rank
    position: int | None = None          # play / discard only


def letter(position: int) -> str:
    return POSITION_LETTERS[position]


def _positions_phrase(positions: tuple[int, ...]) -> str:
    letters = [f"'{letter(p)}'" for p in positions]
    if len(letters) == 1:
        return f"my card at position {letters[0]}"
    if len(letters) == 2:
        listed = f"{letters[0]} and {letters[1]}"
    else:
        listed = ", ".join(letters[:-1]) + f" and {letters[-1]}"
    return f"my cards at positions {listed}"


def render_observation(desc: ObsDescriptor) -> str:
    if desc.kind == OBS_NULL:
        return "My partner did nothing"
    if desc.kind == OBS_PLAY:
        return f"My partner played their card at position '{letter(desc.position)}'"
    if desc.kind == OBS_DISCARD:
        return f"My partner discarded their card at position '{letter(desc.position)}'"
    if desc.kind == OBS_HINT_COLOR:
        noun = "color"
        value = COLOR_NAMES[desc.value]
    elif desc.kind == OBS_HINT_RANK:
        noun = "rank"
        value = RANK_WORDS[desc.value - 1]
    else:
        raise ContractViolation(f"unknown observation kind {desc.kind!r}")
    return f"My partner told me that the {noun} of {_positions_phrase(desc.positions)} is {value}"


def render_action(desc: ActDescriptor) -> str:
    if desc.kind == "play":
        return f"play my card at position '{letter(desc.position)}'"
    if desc.kind == "discard":
        return f"discard my card at position '{letter(desc.position)}'"
    if desc.kind == "hint_color":
        return "hint color to my partner"
    if desc.kind == "hint_rank":
        return "hint rank to my partner"
    raise ContractViolation(f"unknown action kind {desc.kind!r}")


def parse_observation_text(text: str) -> ObsDescriptor:
    if text == "My partner did nothing":
        return ObsDescriptor(OBS_NULL)
    for kind, verb in ((OBS_PLAY, "played"), (OBS_DISCARD, "discarded")):
        prefix = f"My partner {verb} their card at position '"
        if text.startswith(prefix):
            return ObsDescriptor(kind, position=POSITION_LETTERS.index(text[len(prefix)]))
    prefix = "My partner told me that the "
    if text.startswith(prefix):
        rest = text[len(prefix):]
        noun, _, rest = rest.partition(" of ")
        phrase, _, value = rest.rpartition(" is ")
        positions = tuple(POSITION_LETTERS.index(ch) for ch in phrase if ch in POSITION_LETTERS)
        if noun == "color":
            return ObsDescriptor(OBS_HINT_COLOR, value=COLOR_NAMES.index(value), positions=positions)
        if noun == "rank":
            return ObsDescriptor(OBS_HINT_RANK, value=RANK_WORDS.index(value) + 1, positions=positions)
    raise ContractViolation(f"unparseable observation text: {text!r}")


def parse_action_text(text: str) -> ActDescriptor:
    if text == "hint color to my partner":
        return ActDescriptor("hint_color")
    if text == "hint rank to my partner":
        return ActDescriptor("hint_rank")
    for kind in ("play", "discard"):
        prefix = f"{kind} my card at position '"
        if text.startswith(prefix):
            return ActDescriptor(kind, position=POSITION_LETTERS.index(text[len(prefix)]))
    raise ContractViolation(f"unparseable action text: {text!r}")


# -- describing live game objects -------------------------------------------------------


def hanabi_observation_descriptor(obs: HanabiObservation) -> ObsDescriptor:
    record = obs.last_action
    if record is None:
        return ObsDescriptor(OBS_NULL)
    if record.player == obs.player:
        raise ContractViolation("last action was the observer's own move")
    action = record.action
    if action.kind == "play":
        return ObsDescriptor(OBS_PLAY, position=action.value)
    if action.kind == "discard":
        return ObsDescriptor(OBS_DISCARD, position=action.value)
    if action.kind == "hint_color":
        return ObsDescriptor(OBS_HINT_COLOR, value=action.value, positions=record.touched)
    return ObsDescriptor(OBS_HINT_RANK, value=action.value, positions=record.touched)


def hanabi_action_descriptor(action: HanabiAction) -> ActDescriptor:
    if action.kind in ("play", "discard"):
        return ActDescriptor(action.kind, position=action.value)
    return ActDescriptor(action.kind)


def describe_observation(env_id: str, observation) -> str:
    """Canonical text for what the acting player just saw their partner do."""
    if env_id == "say_select":
        if not isinstance(observation, BobObservation):
            raise ContractViolation("Say-Select priors condition on Bob's observation")
        if observation.alice_prev1 == 0:
            raise ContractViolation("no announcement to describe yet")
        return str(observation.alice_prev1)
    if env_id == "hanabi":
        return render_observation(hanabi_observation_descriptor(observation))
    raise ConfigError(f"unknown env_id {env_id!r}")


def describe_action(env_id: str, action) -> str:
    """Canonical text for an action ("0" quits in Say-Select)."""
    if env_id == "say_select":
        return str(int(action))
    if env_id == "hanabi":
        return render_action(hanabi_action_descriptor(action))
    raise ConfigError(f"unknown env_id {env_id!r}")


# -- prompts ---------------------------------------------------------------------------


def build_prompt(instruction: Instruction, observation_text: str, action_text: str | None = None) -> str:
    """Instantiate the prompt template byte-exactly.

    The question-answering template needs the candidate action text; the
    completion template scores continuations, so the action text is not part
    of the prompt and is ignored here.
    """
    if instruction.template == TEMPLATE_QA:
        if action_text is None:
            raise ContractViolation("qa_style prompts need an action text")
        return (
            f"Instruction: {instruction.text}.\n"
            f"Previously: {observation_text}.\n"
            f"Question: Should I {action_text}?\n"
            f"Answer:"
        )
    return f"{instruction.text}.\nMy partner selected {observation_text}.\nSo I should select"


def split_qa_prompt(prompt: str) -> tuple[str, str]:
    """Recover (observation_text, action_text) from a qa_style prompt."""
    try:
        previously = prompt.split("\nPreviously: ", 1)[1]
        obs_text, rest = previously.split(".\nQuestion: Should I ", 1)
        act_text = rest.split("?\nAnswer:", 1)[0]
    except (IndexError, ValueError):
        raise ContractViolation(f"not a qa_style prompt: {prompt!r}") from None
    return obs_text, act_text


# -- enumeration -------------------------------------------------------------------------


def enumerate_observation_descriptors(config: HanabiConfig) -> list[ObsDescriptor]:
    """Every partner-last-move descriptor reachable under a Hanabi config.

    Order: null, plays by position, discards by position, rank hints (rank
    ascending, touched subsets by bitmask), color hints likewise.
    """
    hand = config.hand_size
    subsets = [
        tuple(p for p in range(hand) if bits >> p & 1)
        for bits in range(1, 2**hand)
    ]
    descriptors = [ObsDescriptor(OBS_NULL)]
    descriptors += [ObsDescriptor(OBS_PLAY, position=p) for p in range(hand)]
    descriptors += [ObsDescriptor(OBS_DISCARD, position=p) for p in range(hand)]
    descriptors += [
        ObsDescriptor(OBS_HINT_RANK, value=r, positions=s)
        for r in range(1, config.num_ranks + 1)
        for s in subsets
    ]
    descriptors += [
        ObsDescriptor(OBS_HINT_COLOR, value=c, positions=s)
        for c in range(config.num_colors)
        for s in subsets
    ]
    return descriptors


def enumerate_action_descriptors(config: HanabiConfig) -> list[ActDescriptor]:
    acts = [ActDescriptor("play", position=p) for p in range(config.hand_size)]
    acts += [ActDescriptor("discard", position=p) for p in range(config.hand_size)]
    acts += [ActDescriptor("hint_color"), ActDescriptor("hint_rank")]
    return acts


def enumerate_pairs(env_id: str = "hanabi", config: HanabiConfig | None = None) -> list[tuple[str, str]]:
    """All (observation_text, action_text) pairs a prior table must cover."""
    if env_id == "say_select":
        return [(str(k), str(a)) for k in range(1, 6) for a in range(0, 6)]
    if env_id != "hanabi":
        raise ConfigError(f"unknown env_id {env_id!r}")
    config = config or HanabiConfig()
    obs_texts = [render_observation(d) for d in enumerate_observation_descriptors(config)]
    act_texts = [render_action(d) for d in enumerate_action_descriptors(config)]
    return list(itertools.product(obs_texts, act_texts))
