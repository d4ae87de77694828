import contextlib
import time

import pytest

_VERDICTS = {}


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion, with its runtime."""

    @contextlib.contextmanager
    def record(number, title):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            _VERDICTS[number] = (f"FAIL  criterion {number}: {title}", f"{type(exc).__name__}: {exc}".splitlines()[0])
            raise
        _VERDICTS[number] = (f"PASS  criterion {number}: {title}", f"{time.perf_counter() - start:.1f} s")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        line, detail = _VERDICTS[number]
        terminalreporter.write_line(f"{line}  ({detail})")
