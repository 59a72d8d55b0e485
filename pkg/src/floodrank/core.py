"""Calendar, stages and the (zone, date) keys shared by every module."""
from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError

ZoneId = str


class Stage(str, enum.Enum):
    NORMAL = "normal"
    RESPONSE = "response"
    RECOVERY = "recovery"


class SourceKind(str, enum.Enum):
    ACTIVITY = "activity"
    TRAFFIC = "traffic"
    TRANSACTIONS = "transactions"
    POSTS = "posts"


class ZoneDayKey(NamedTuple):
    zone: ZoneId
    date: dt.date


def _as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError as exc:
        raise ConfigError(f"bad calendar date {value!r}") from exc


@dataclass(frozen=True)
class StudyCalendar:
    """Normal (baseline) window followed by the flood period.

    The flood period starts at ``post_normal_start``; days up to and including
    ``response_end`` are the response stage, the rest the recovery stage.
    """

    normal_start: dt.date
    normal_end: dt.date
    post_normal_start: dt.date
    response_end: dt.date
    study_end: dt.date
    twitter_normal_start: dt.date

    def __post_init__(self):
        for name in ("normal_start", "normal_end", "post_normal_start", "response_end",
                     "study_end", "twitter_normal_start"):
            object.__setattr__(self, name, _as_date(getattr(self, name)))
        if not (self.normal_start <= self.normal_end < self.post_normal_start
                <= self.response_end < self.study_end):
            raise ConfigError(
                "calendar must satisfy normal_start <= normal_end < post_normal_start"
                " <= response_end < study_end"
            )
        if not (self.normal_start <= self.twitter_normal_start <= self.normal_end):
            raise ConfigError("twitter_normal_start must lie inside the normal window")

    @classmethod
    def harvey(cls) -> StudyCalendar:
        return cls(
            normal_start=dt.date(2017, 8, 1),
            normal_end=dt.date(2017, 8, 24),
            post_normal_start=dt.date(2017, 8, 25),
            response_end=dt.date(2017, 9, 2),
            study_end=dt.date(2017, 9, 15),
            twitter_normal_start=dt.date(2017, 8, 22),
        )

    @classmethod
    def from_dict(cls, data: dict) -> StudyCalendar:
        try:
            return cls(**{k: data[k] for k in cls.__dataclass_fields__})
        except KeyError as exc:
            raise ConfigError(f"calendar block is missing {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {k: getattr(self, k).isoformat() for k in self.__dataclass_fields__}

    def contains(self, date: dt.date) -> bool:
        return self.normal_start <= date <= self.study_end

    def all_dates(self) -> list[dt.date]:
        return date_range(self.normal_start, self.study_end)

    def flood_dates(self) -> list[dt.date]:
        return date_range(self.post_normal_start, self.study_end)

    def stage_dates(self, stage: Stage) -> list[dt.date]:
        if stage is Stage.NORMAL:
            return date_range(self.normal_start, self.normal_end)
        if stage is Stage.RESPONSE:
            return date_range(self.post_normal_start, self.response_end)
        return date_range(self.response_end + dt.timedelta(days=1), self.study_end)


def date_range(start: dt.date, end: dt.date) -> list[dt.date]:
    """Inclusive list of calendar days."""
    n = (end - start).days + 1
    return [start + dt.timedelta(days=i) for i in range(max(n, 0))]


def stage_of(calendar: StudyCalendar, date: dt.date) -> Stage:
    date = _as_date(date)
    if not calendar.contains(date):
        raise ValueError(
            f"{date} is outside the study range "
            f"[{calendar.normal_start}, {calendar.study_end}]"
        )
    if date <= calendar.normal_end:
        return Stage.NORMAL
    if calendar.post_normal_start <= date <= calendar.response_end:
        return Stage.RESPONSE
    return Stage.RECOVERY


def baseline_window(calendar: StudyCalendar, source: SourceKind) -> tuple[dt.date, dt.date]:
    source = SourceKind(source)
    if source is SourceKind.POSTS:
        return calendar.twitter_normal_start, calendar.normal_end
    return calendar.normal_start, calendar.normal_end
