"""Shared pytest plumbing: the acceptance-criterion recorder that prints one
PASS/FAIL line per criterion in the terminal summary."""

from contextlib import contextmanager

import pytest

_acceptance_lines: list[str] = []


@pytest.fixture
def acceptance():
    """Context manager tagging a block as one numbered acceptance criterion."""

    @contextmanager
    def criterion(number: int, name: str):
        try:
            yield
        except pytest.skip.Exception as exc:
            _acceptance_lines.append(f"criterion {number} ({name}): SKIPPED - {exc}")
            raise
        except BaseException:
            _acceptance_lines.append(f"criterion {number} ({name}): FAIL")
            raise
        _acceptance_lines.append(f"criterion {number} ({name}): PASS")

    return criterion


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for line in sorted(_acceptance_lines):
        terminalreporter.write_line("  " + line)
