import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line; it is echoed in the terminal summary."""

    def record(number, label, ok, measured, target):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {label}: measured {measured} (target {target})"
        _LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
