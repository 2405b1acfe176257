from pathlib import Path

import pytest

from advicecheck import load_game, load_strategy

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def game():
    return load_game(FIXTURES / "small_game.json")


@pytest.fixture(scope="session")
def ce_strategy():
    return load_strategy(FIXTURES / "ce_strategy.json")


@pytest.fixture(scope="session")
def non_ce_strategy():
    return load_strategy(FIXTURES / "non_ce_strategy.json")


@pytest.fixture(scope="session")
def correlated_strategy():
    return load_strategy(FIXTURES / "correlated_strategy.json")
