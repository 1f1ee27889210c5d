import pytest

from instructrl.backends import HintConventionOracle, ScriptedSaySelectBackend
from instructrl.hanabi import HanabiConfig
from instructrl.prior import build_prior_table


@pytest.fixture(scope="session")
def color_table():
    return build_prior_table("hanabi", "hanabi_color", HintConventionOracle("color"), beta=1.0)


@pytest.fixture(scope="session")
def rank_table():
    return build_prior_table("hanabi", "hanabi_rank", HintConventionOracle("rank"), beta=1.0)


@pytest.fixture(scope="session")
def mini_color_table():
    return build_prior_table("hanabi", "hanabi_color", HintConventionOracle("color"),
                             beta=1.0, config=HanabiConfig.mini())


@pytest.fixture(scope="session")
def say_select_table():
    return build_prior_table("say_select", "say_select", ScriptedSaySelectBackend())
