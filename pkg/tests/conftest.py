import os

import pytest

from atld.model import load_model

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name + ".json")


@pytest.fixture
def load():
    return lambda name: load_model(fixture_path(name))


ALL_FIXTURES = ["bob", "bob_granted", "bob_restricted", "bob_imperfect", "bob_imperfect_granted",
                "g1", "g2", "g3", "g4"]

_criteria: dict = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key in report.keywords:
        if key.startswith("test_criterion_"):
            num = int(key.split("_")[2])
            _criteria[num] = (report.outcome, key)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        outcome, name = _criteria[num]
        label = name.split("_", 3)[3].replace("_", " ")
        terminalreporter.write_line(f"criterion {num} ({label}): {'PASS' if outcome == 'passed' else 'FAIL'}")
