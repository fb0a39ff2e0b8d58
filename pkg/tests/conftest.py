import pytest

from proactive.pack import load_bundled_pack, load_bundled_scenarios

import helpers


@pytest.fixture(scope="session")
def pack():
    return load_bundled_pack()


@pytest.fixture(scope="session")
def scenarios(pack):
    return load_bundled_scenarios(pack)


@pytest.fixture
def substitution():
    return helpers.substitution_automaton()


@pytest.fixture
def forced_release():
    return helpers.forced_release_automaton()


@pytest.fixture
def fixtures_dir():
    return helpers.FIXTURES
