import pytest
from hypothesis import settings

from helpers import make_map

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=200)
settings.load_profile("repro")


@pytest.fixture
def corridor():
    # exit on the left, a room cell at the far right end
    return make_map(["########", "E.....a#", "########"])


@pytest.fixture
def open_room():
    rows = ["#" * 14] + ["#" + "a" * 12 + "#" for _ in range(12)] + ["#" * 14]
    rows[6] = "E" + rows[6][1:]
    return make_map(rows, name="open")


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
