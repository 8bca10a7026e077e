import pytest

_ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def acceptance(request):
    """Record the one-line verdict of an acceptance criterion; echoed in the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"[{number:2d}] {'PASS' if passed else 'FAIL'} {detail}"
        _ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[number])
