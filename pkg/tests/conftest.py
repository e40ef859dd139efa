import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from kwhcheck.corpus import get_entry  # noqa: E402
from kwhcheck.verifier import full_report  # noqa: E402

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def four():
    return get_entry("four_card_and").ast()


@pytest.fixture(scope="session")
def five():
    return get_entry("five_card_and").ast()


@pytest.fixture(scope="session")
def trick():
    return get_entry("five_card_trick").ast()


@pytest.fixture(scope="session")
def leaky():
    return get_entry("leaky_toy").ast()


@pytest.fixture(scope="session")
def nonuniform():
    return get_entry("nonuniform_toy").ast()


@pytest.fixture(scope="session")
def four_report(four):
    return full_report(four)


@pytest.fixture(scope="session")
def five_report(five):
    return full_report(five)
