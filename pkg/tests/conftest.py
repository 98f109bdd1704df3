"""Shared test fixtures and the acceptance-summary terminal hook."""

from __future__ import annotations

import numpy as np
import pytest

from snnens.core import SpikeRecord

# One line per acceptance criterion, appended by tests/test_acceptance.py and
# echoed after the pytest summary so the verdicts are visible in plain runs.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """Report one acceptance criterion: record the verdict line, then assert."""

    def report(name: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{name}: {'PASS' if ok else 'FAIL'} — {detail}")
        assert ok, f"{name}: {detail}"

    return report


def make_record(trains, duration_ms=20.0, example_id="ex-0", trial=0, label=None):
    """SpikeRecord from plain lists of spike times."""
    return SpikeRecord(
        example_id=example_id,
        trial=trial,
        duration_ms=duration_ms,
        label=label,
        trains=tuple(np.asarray(t, dtype=np.float64) for t in trains),
    )
