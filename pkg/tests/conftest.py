import pytest

_CRITERIA = {}


@pytest.fixture
def record():
    """``record(number, passed, detail)`` for the acceptance summary."""
    def _record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        return bool(passed)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 10):
        if number in _CRITERIA:
            passed, detail = _CRITERIA[number]
            terminalreporter.write_line(
                f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {number}: NOT RUN")
