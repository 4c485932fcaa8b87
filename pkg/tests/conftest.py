import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LINES = pytest.StashKey[dict]()


@pytest.fixture
def acceptance_record(request):
    """Store the PASS/FAIL line of an acceptance criterion for the summary."""
    lines = request.config.stash.setdefault(_LINES, {})

    def record(number: int, line: str) -> None:
        lines[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    lines = terminalreporter.config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
