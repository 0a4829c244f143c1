"""Shared pytest plumbing: the acceptance-criteria scoreboard.

``test_acceptance.py`` registers one entry per numbered criterion through
the ``acceptance`` fixture; the hook below prints a PASS/FAIL line for
each after the run, so the gate's outcome is visible even though pytest
captures ordinary stdout.
"""
from __future__ import annotations

import pytest

_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def acceptance():
    """Record a criterion outcome, then enforce it.

    The line is stored before the assert so a failing criterion still
    shows up on the scoreboard.
    """

    def _check(number: int, name: str, ok: bool, detail: str = "") -> None:
        _RESULTS.append((number, name, bool(ok), detail))
        suffix = f" — {detail}" if detail else ""
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}{suffix}"
        print(line)
        assert ok, line

    return _check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(_RESULTS):
        suffix = f" — {detail}" if detail else ""
        terminalreporter.write_line(
            f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}{suffix}")
