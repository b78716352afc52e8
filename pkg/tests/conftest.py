import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion; the outcome is printed in the terminal summary."""

    def record(number: int, title: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.append((number, title, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}" + (f" -- {detail}" if detail else ""))
