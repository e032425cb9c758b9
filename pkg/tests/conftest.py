from contextlib import contextmanager

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def tmp_csv(tmp_path):
    return tmp_path / "out.csv"


@pytest.fixture
def criterion():
    """Context manager recording one PASS/FAIL line per acceptance criterion.

    Inside the block, call the yielded function with strings describing the
    measured values; they are appended to the line.
    """

    @contextmanager
    def record(number: int, title: str):
        notes: list[str] = []
        try:
            yield notes.append
        except BaseException:
            _emit("FAIL", number, title, notes)
            raise
        _emit("PASS", number, title, notes)

    return record


def _emit(status, number, title, notes):
    line = f"{status} criterion {number}: {title}"
    if notes:
        line += " | " + "; ".join(notes)
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
