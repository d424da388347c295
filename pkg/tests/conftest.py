"""Shared fixtures; collects one pass/fail line per acceptance criterion."""

import pytest

_ACCEPTANCE_LINES: list[tuple[int, str]] = []


@pytest.fixture
def acceptance():
    """Record the outcome of an acceptance criterion and return ``passed``."""

    def record(number: int, name: str, passed: bool, detail: str) -> bool:
        verdict = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append((number, f"[{verdict}] {number:2d}. {name}: {detail}"))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(line)
