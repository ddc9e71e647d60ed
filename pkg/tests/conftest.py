import pytest

_CRITERIA: dict[int, str] = {}


class CriterionRecorder:
    """Collects one pass/fail line per acceptance criterion."""

    def record(self, number: int, title: str, passed: bool, detail: str = "") -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        _CRITERIA[number] = line
        print(line)
        return passed


@pytest.fixture(scope="session")
def criteria():
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
