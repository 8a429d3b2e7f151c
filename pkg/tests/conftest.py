from __future__ import annotations

from typing import Iterator

import pytest

from alexa_evidence.client import Session
from alexa_evidence.mock import MockAlexaServer, MockState, default_state
from helpers import TOKEN, acquire_state


@pytest.fixture
def state() -> MockState:
    return default_state()


@pytest.fixture
def server(state: MockState) -> Iterator[MockAlexaServer]:
    with MockAlexaServer(state) as srv:
        yield srv


@pytest.fixture
def session(server: MockAlexaServer) -> Session:
    return Session(server.url, TOKEN)


@pytest.fixture(scope="session")
def default_case():
    case, report = acquire_state(default_state(), "default")
    assert not report.partial
    return case
