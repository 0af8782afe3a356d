import pytest

_criteria: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def criterion_log():
    """Record ``(number, passed, detail)`` so the summary prints one line per criterion."""

    def record(number: int, passed: bool, detail: str) -> None:
        _criteria[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        passed, detail = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
