from __future__ import annotations

import datetime as dt
from pathlib import Path

import pytest

from teamtrace.config import CourseConfig, Member, Milestone

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def roster_config() -> CourseConfig:
    return CourseConfig(
        course_start=dt.date(2023, 9, 1),
        course_end=dt.date(2023, 9, 30),
        timezone="UTC",
        members=(
            Member("m1", "Alex", ("a@x.com", "alex@other.org"), ("al",)),
            Member("m2", "Blair", ("b@x.com",), ("bl",)),
            Member("m3", "Casey", ("c@x.com",), ("cy",)),
        ),
        milestones=(
            Milestone("SRS", dt.date(2023, 9, 10), "due_date"),
            Milestone("PoC", dt.date(2023, 9, 15), "presentation"),
            Milestone("Design", dt.date(2023, 9, 25), "due_date"),
        ),
    )


_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"{outcome}  {name}")
