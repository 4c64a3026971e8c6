import sys
from pathlib import Path

import pytest

from tarakit import fixture_path, fixture_text, parse_delta, parse_model

sys.path.insert(0, str(Path(__file__).parent))

FIREWALL = 'firewall(fw1, can2, gw).\n'


@pytest.fixture
def headlamp_text():
    return fixture_text("headlamp.dsl")


@pytest.fixture
def headlamp(headlamp_text):
    return parse_model(headlamp_text)


@pytest.fixture
def headlamp_fw(headlamp_text):
    return parse_model(headlamp_text + FIREWALL)


@pytest.fixture
def increment():
    return parse_delta(fixture_text("increment.dsl"))


@pytest.fixture
def headlamp_path():
    return fixture_path("headlamp.dsl")


@pytest.fixture
def increment_path():
    return fixture_path("increment.dsl")
