import re

import pytest

from deltadimer import new_params


@pytest.fixture
def equal():
    """Equal masses, a = 1, with a chosen impurity length."""
    def make(a1):
        return new_params(1.0, 1.0, 1.0, a1)
    return make


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number: int, ok: bool, text: str) -> bool:
        _CRITERIA[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {text}"
        print(_CRITERIA[number])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    match = re.match(r"test_(\d+)_", item.name)
    if match and report.when == "call" and report.failed:
        number = int(match.group(1))
        if number not in _CRITERIA:
            _CRITERIA[number] = f"[FAIL] criterion {number:2d}: raised {call.excinfo.typename}"
