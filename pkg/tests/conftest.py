import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Print a PASS/FAIL line and keep it for the terminal summary."""

    def _report(line: str):
        print(line)
        ACCEPTANCE_LINES.append(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
