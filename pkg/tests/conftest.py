import logging

import pytest

logging.getLogger("frontlim").setLevel(logging.ERROR)

_criteria = []


@pytest.fixture
def criterion():
    """Collect one pass/fail line per acceptance criterion."""

    def report(num, name, passed, detail):
        passed = bool(passed)
        _criteria.append((num, name, passed, detail))
        print("criterion %d (%s): %s  [%s]"
              % (num, name, "PASS" if passed else "FAIL", detail))
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, passed, detail in sorted(_criteria):
        terminalreporter.write_line(
            "criterion %2d  %-34s %s  %s"
            % (num, name, "PASS" if passed else "FAIL", detail))
