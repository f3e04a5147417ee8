"""Shared test plumbing.

Headline checks record a one-line PASS/FAIL verdict through the
`record_result` fixture; the collected lines are echoed in a dedicated
section at the end of the run so the outcome survives output capture.
"""
import pytest

_RESULT_LINES: list[str] = []


@pytest.fixture(scope="session")
def record_result():
    def record(tag: str, passed: bool, detail: str) -> None:
        line = f"ACCEPTANCE {tag}: {'PASS' if passed else 'FAIL'}  {detail}"
        _RESULT_LINES.append(line)
        print(line, flush=True)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _RESULT_LINES:
        terminalreporter.section("acceptance results")
        for line in _RESULT_LINES:
            terminalreporter.write_line(line)
