import datetime as dt
import sys

import pytest

from floodrank.core import StudyCalendar


@pytest.fixture
def harvey():
    return StudyCalendar.harvey()


@pytest.fixture
def short_calendar():
    # 4 normal days (posts baseline: last 2), 2 response, 3 recovery
    return StudyCalendar(
        normal_start=dt.date(2020, 1, 1),
        normal_end=dt.date(2020, 1, 4),
        post_normal_start=dt.date(2020, 1, 5),
        response_end=dt.date(2020, 1, 6),
        study_end=dt.date(2020, 1, 9),
        twitter_normal_start=dt.date(2020, 1, 3),
    )


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(lines):
        terminalreporter.write_line(lines[num])
