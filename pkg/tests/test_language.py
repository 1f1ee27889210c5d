import pytest

from instructrl.core import make_env, run_episode
from instructrl.errors import ContractViolation
from instructrl.hanabi import HanabiAction, HanabiConfig, hanabi_config
from instructrl.language import (
    INSTRUCTIONS,
    ActDescriptor,
    ObsDescriptor,
    build_prompt,
    describe_action,
    describe_observation,
    enumerate_action_descriptors,
    enumerate_observation_descriptors,
    enumerate_pairs,
    get_instruction,
    parse_action_text,
    parse_observation_text,
    render_action,
    render_observation,
    split_qa_prompt,
)
from instructrl.policies import RandomPolicy
from instructrl.say_select import BobObservation


def test_canonical_observation_sentences():
    assert render_observation(ObsDescriptor("null")) == "My partner did nothing"
    assert render_observation(ObsDescriptor("discard", position=0)) == \
        "My partner discarded their card at position 'A'"
    assert render_observation(ObsDescriptor("play", position=1)) == \
        "My partner played their card at position 'B'"
    assert render_observation(ObsDescriptor("hint_rank", value=2, positions=(3,))) == \
        "My partner told me that the rank of my card at position 'D' is two"
    assert render_observation(ObsDescriptor("hint_color", value=0, positions=(0, 2))) == \
        "My partner told me that the color of my cards at positions 'A' and 'C' is red"


def test_three_position_hint_sentence():
    text = render_observation(ObsDescriptor("hint_rank", value=1, positions=(0, 1, 4)))
    assert text == ("My partner told me that the rank of my cards at positions "
                    "'A', 'B' and 'E' is one")


def test_canonical_action_sentences():
    assert render_action(ActDescriptor("play", position=0)) == "play my card at position 'A'"
    assert render_action(ActDescriptor("discard", position=1)) == "discard my card at position 'B'"
    assert render_action(ActDescriptor("hint_color")) == "hint color to my partner"
    assert render_action(ActDescriptor("hint_rank")) == "hint rank to my partner"


def test_all_rank_hints_share_one_text():
    texts = {describe_action("hanabi", HanabiAction("hint_rank", r)) for r in range(1, 6)}
    assert texts == {"hint rank to my partner"}
    texts = {describe_action("hanabi", HanabiAction("hint_color", c)) for c in range(5)}
    assert texts == {"hint color to my partner"}


def test_say_select_action_texts():
    assert describe_action("say_select", 0) == "0"
    assert [describe_action("say_select", a) for a in range(1, 6)] == ["1", "2", "3", "4", "5"]
    assert describe_observation("say_select", BobObservation(0, 3)) == "3"
    with pytest.raises(ContractViolation):
        describe_observation("say_select", BobObservation(0, 0))


def test_parse_roundtrip_over_enumeration():
    config = HanabiConfig()
    for desc in enumerate_observation_descriptors(config):
        assert parse_observation_text(render_observation(desc)) == desc
    for desc in enumerate_action_descriptors(config):
        parsed = parse_action_text(render_action(desc))
        assert parsed.kind == desc.kind and parsed.position == desc.position


def test_enumeration_counts_default():
    config = HanabiConfig()
    obs = enumerate_observation_descriptors(config)
    acts = enumerate_action_descriptors(config)
    # combinatorial cross-check: 1 null + 5 play + 5 discard + 2 hint kinds x 5 values x 31 subsets
    assert len(obs) == 1 + 5 + 5 + 5 * 31 + 5 * 31 == 321
    assert len(acts) == 12
    pairs = enumerate_pairs("hanabi", config)
    assert len(pairs) == 3852
    assert len(pairs) == len(obs) * len(acts)
    assert len(set(pairs)) == 3852


def test_enumeration_counts_mini():
    config = HanabiConfig.mini()
    obs = enumerate_observation_descriptors(config)
    assert len(obs) == 1 + 2 + 2 + 5 * 3 + 2 * 3 == 26
    assert len(enumerate_action_descriptors(config)) == 6
    assert len(enumerate_pairs("hanabi", config)) == 156


def test_say_select_enumeration():
    pairs = enumerate_pairs("say_select")
    assert len(pairs) == 30
    assert ("3", "0") in pairs


def test_qa_prompt_bytes():
    inst = get_instruction("hanabi_color")
    prompt = build_prompt(inst, "My partner did nothing", "play my card at position 'A'")
    assert prompt == (
        f"Instruction: {inst.text}.\n"
        "Previously: My partner did nothing.\n"
        "Question: Should I play my card at position 'A'?\n"
        "Answer:"
    )
    assert split_qa_prompt(prompt) == ("My partner did nothing", "play my card at position 'A'")
    # identical inputs give identical bytes
    assert prompt == build_prompt(inst, "My partner did nothing", "play my card at position 'A'")


def test_completion_prompt_bytes():
    inst = get_instruction("say_select")
    prompt = build_prompt(inst, "1")
    assert prompt == ("I should select the same number as my partner.\n"
                      "My partner selected 1.\n"
                      "So I should select")


def test_qa_prompt_requires_action():
    with pytest.raises(ContractViolation):
        build_prompt(get_instruction("hanabi_color"), "My partner did nothing")


def test_builtin_instruction_texts():
    color = INSTRUCTIONS["hanabi_color"].text
    rank = INSTRUCTIONS["hanabi_rank"].text
    assert "'color'" in color and "'play'" in color and "'hint color'" in color
    # rank instruction is the color instruction with the two roles swapped
    swapped = (color.replace("'color'", "#TMP#").replace("'rank'", "'color'")
               .replace("#TMP#", "'rank'").replace("'hint color'", "'hint rank'"))
    assert swapped == rank
    assert INSTRUCTIONS["say_select"].template == "completion_style"
    assert not INSTRUCTIONS["hanabi_color_simple"].text.endswith(".")


def test_describe_covers_live_rollouts():
    """Every observation/action text produced by random play is inside the
    enumeration domain (completeness property)."""
    env = make_env(hanabi_config())
    config = env.rules
    obs_domain = {render_observation(d) for d in enumerate_observation_descriptors(config)}
    act_domain = {render_action(d) for d in enumerate_action_descriptors(config)}
    policies = (RandomPolicy(), RandomPolicy())
    for seed in range(40):
        trace = run_episode(env, policies, seed)
        for rec in trace.steps:
            if rec.observation.last_action is not None:
                assert describe_observation("hanabi", rec.observation) in obs_domain
            assert describe_action("hanabi", rec.action) in act_domain
