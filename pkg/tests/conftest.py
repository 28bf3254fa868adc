import pytest

from pripearl.timegrid import TimeHierarchy


@pytest.fixture(scope="session")
def hierarchy() -> TimeHierarchy:
    return TimeHierarchy()


@pytest.fixture(scope="session")
def secret() -> bytes:
    return bytes.fromhex("8f" * 32)
