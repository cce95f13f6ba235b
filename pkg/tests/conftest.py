"""Shared test configuration: oracle imports and the acceptance scoreboard."""
import sys
from pathlib import Path

import pytest

# brute-force oracles live next to the tests; make them importable from any cwd
sys.path.insert(0, str(Path(__file__).resolve().parent))

# Acceptance tests record one entry per criterion here (number -> details);
# the terminal summary prints one pass/fail line each at the end of the run.
ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def acceptance():
    """Recorder for acceptance criteria: call record(num, name, ok, detail)."""

    def record(num: int, name: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE_RESULTS[num] = (name, bool(ok), detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        name, ok, detail = ACCEPTANCE_RESULTS[num]
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} — {name}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)
