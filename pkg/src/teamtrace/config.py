"""Course configuration: roster, identity aliases, course period and milestones."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

import yaml

MILESTONE_KINDS = ("due_date", "presentation")
CONFIG_SUFFIXES = (".yaml", ".yml", ".json")


class ConfigError(ValueError):
    """Raised when a configuration file violates its schema or invariants."""


@dataclass(frozen=True)
class DateRange:
    """Inclusive range of calendar dates."""

    start: dt.date
    end: dt.date

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"date range start {self.start} is after end {self.end}")

    def __contains__(self, day: object) -> bool:
        return isinstance(day, dt.date) and self.start <= day <= self.end

    def __len__(self) -> int:
        return (self.end - self.start).days + 1

    def days(self) -> Iterator[dt.date]:
        for offset in range(len(self)):
            yield self.start + dt.timedelta(days=offset)

    def within(self, other: DateRange) -> bool:
        return other.start <= self.start and self.end <= other.end

    def __str__(self) -> str:
        return f"{self.start.isoformat()}..{self.end.isoformat()}"


@dataclass(frozen=True)
class Member:
    member_id: str
    display_name: str = ""
    email_aliases: tuple[str, ...] = ()
    login_aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class Milestone:
    name: str
    date: dt.date
    kind: str


@dataclass(frozen=True)
class CourseConfig:
    course_start: dt.date
    course_end: dt.date
    timezone: str = "UTC"
    members: tuple[Member, ...] = ()
    milestones: tuple[Milestone, ...] = ()
    team_id: str = ""
    _email_index: dict[str, str] = field(init=False, repr=False, compare=False)
    _login_index: dict[str, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        problems = _validate(self)
        if problems:
            raise ConfigError("; ".join(problems))
        object.__setattr__(self, "_email_index", _alias_index(self.members, "email_aliases"))
        object.__setattr__(self, "_login_index", _alias_index(self.members, "login_aliases"))

    @property
    def period(self) -> DateRange:
        return DateRange(self.course_start, self.course_end)

    @property
    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)

    @property
    def member_ids(self) -> list[str]:
        return [m.member_id for m in self.members]

    def due_dates(self) -> list[dt.date]:
        return sorted({m.date for m in self.milestones if m.kind == "due_date"})

    def member_for_email(self, email: str) -> str | None:
        return self._email_index.get(email.strip().casefold())

    def member_for_login(self, login: str) -> str | None:
        return self._login_index.get(login.strip().casefold())

    def milestone(self, name: str) -> Milestone | None:
        """Look a milestone up by name, case-insensitively."""
        wanted = name.casefold()
        for m in self.milestones:
            if m.name.casefold() == wanted:
                return m
        return None

    def local_date(self, instant: dt.datetime) -> dt.date:
        """Calendar date of an aware instant in the course timezone."""
        return instant.astimezone(self.tzinfo).date()


def _alias_index(members: tuple[Member, ...], attr: str) -> dict[str, str]:
    index: dict[str, str] = {}
    for member in members:
        for alias in getattr(member, attr):
            index[alias.strip().casefold()] = member.member_id
    return index


def _validate(config: CourseConfig) -> list[str]:
    problems: list[str] = []
    if config.course_start > config.course_end:
        problems.append(
            f"course_start: {config.course_start} is after course_end {config.course_end}"
        )
    try:
        ZoneInfo(config.timezone)
    except (ZoneInfoNotFoundError, ValueError):
        problems.append(f"timezone: unknown IANA timezone {config.timezone!r}")

    seen_ids: set[str] = set()
    for i, member in enumerate(config.members):
        if member.member_id in seen_ids:
            problems.append(f"members[{i}].member_id: duplicate member_id {member.member_id!r}")
        seen_ids.add(member.member_id)

    for attr in ("email_aliases", "login_aliases"):
        owner: dict[str, str] = {}
        for i, member in enumerate(config.members):
            for alias in getattr(member, attr):
                key = alias.strip().casefold()
                other = owner.get(key)
                if other is not None and other != member.member_id:
                    problems.append(
                        f"members[{i}].{attr}: alias {alias!r} maps to both "
                        f"{other!r} and {member.member_id!r}"
                    )
                owner.setdefault(key, member.member_id)

    for i, milestone in enumerate(config.milestones):
        if milestone.kind not in MILESTONE_KINDS:
            problems.append(
                f"milestones[{i}].kind: {milestone.kind!r} is not one of {MILESTONE_KINDS}"
            )
        if not (config.course_start <= milestone.date <= config.course_end):
            problems.append(
                f"milestones[{i}].date: milestone {milestone.name!r} on {milestone.date} "
                f"lies outside the course period {config.course_start}..{config.course_end}"
            )
    return problems


def parse_date(value: Any, where: str) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, str):
        try:
            return dt.date.fromisoformat(value.strip())
        except ValueError:
            pass
    raise ConfigError(f"{where}: expected an ISO date (YYYY-MM-DD), got {value!r}")


def _str_list(value: Any, where: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{where}: expected a list of strings")
    return tuple(value)


def config_from_mapping(data: Any) -> CourseConfig:
    """Build a validated :class:`CourseConfig` from parsed YAML/JSON data."""
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping")
    for key in ("course_start", "course_end"):
        if key not in data:
            raise ConfigError(f"{key}: required field missing")

    members = []
    for i, raw in enumerate(data.get("members") or []):
        where = f"members[{i}]"
        if not isinstance(raw, dict) or "member_id" not in raw:
            raise ConfigError(f"{where}.member_id: required field missing")
        members.append(
            Member(
                member_id=str(raw["member_id"]),
                display_name=str(raw.get("display_name", raw["member_id"])),
                email_aliases=_str_list(raw.get("email_aliases"), f"{where}.email_aliases"),
                login_aliases=_str_list(raw.get("login_aliases"), f"{where}.login_aliases"),
            )
        )

    milestones = []
    for i, raw in enumerate(data.get("milestones") or []):
        where = f"milestones[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: expected a mapping")
        for key in ("name", "date", "kind"):
            if key not in raw:
                raise ConfigError(f"{where}.{key}: required field missing")
        milestones.append(
            Milestone(
                name=str(raw["name"]),
                date=parse_date(raw["date"], f"{where}.date"),
                kind=str(raw["kind"]),
            )
        )

    return CourseConfig(
        course_start=parse_date(data["course_start"], "course_start"),
        course_end=parse_date(data["course_end"], "course_end"),
        timezone=str(data.get("timezone", "UTC")),
        members=tuple(members),
        milestones=tuple(milestones),
        team_id=str(data.get("team_id", "")),
    )


def config_to_mapping(config: CourseConfig) -> dict[str, Any]:
    data: dict[str, Any] = {}
    if config.team_id:
        data["team_id"] = config.team_id
    data["course_start"] = config.course_start.isoformat()
    data["course_end"] = config.course_end.isoformat()
    data["timezone"] = config.timezone
    data["members"] = [
        {
            "member_id": m.member_id,
            "display_name": m.display_name,
            "email_aliases": list(m.email_aliases),
            "login_aliases": list(m.login_aliases),
        }
        for m in config.members
    ]
    data["milestones"] = [
        {"name": m.name, "date": m.date.isoformat(), "kind": m.kind} for m in config.milestones
    ]
    return data


def load_mapping(path: str | Path) -> Any:
    """Read a YAML or JSON configuration file, selected by extension."""
    path = Path(path)
    if path.suffix.lower() not in CONFIG_SUFFIXES:
        raise ConfigError(
            f"{path}: unsupported configuration extension {path.suffix!r} "
            f"(expected one of {', '.join(CONFIG_SUFFIXES)})"
        )
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    try:
        # YAML is a superset of JSON, so one loader serves both extensions.
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from None


def load_course_config(path: str | Path) -> CourseConfig:
    return config_from_mapping(load_mapping(path))


def dump_course_config(config: CourseConfig) -> str:
    return yaml.safe_dump(config_to_mapping(config), sort_keys=False)
