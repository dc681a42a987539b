import pytest

from dform import battery


@pytest.fixture
def circle():
    return battery.circle()


@pytest.fixture
def cubic():
    return battery.cubic()


@pytest.fixture
def quartic():
    return battery.quartic()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "LINES", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.LINES:
        terminalreporter.write_line(line)
