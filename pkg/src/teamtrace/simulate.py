"""Seeded synthetic commit histories for desk-scale intervention experiments.

Random stream
-------------
Each team draws from its own ``random.Random`` (MT19937) seeded with the
team sub-seed: the first 8 bytes, big-endian, of
``sha256(f"{seed}:{team_id}")``.  Days are visited in order and, within a
day, members in roster order.  For each (day, member) the generator draws:

1. one uniform ``u`` for activity; the member is active when
   ``u < activity_probability``;
2. if active and the daily mean is positive, a Poisson count by inversion
   (one uniform per attempt; means above ``POISSON_CHUNK`` are split into
   equal chunks whose draws are summed);
3. one uniform per commit placing it at ``floor(u * day_seconds)`` seconds
   after local midnight.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from teamtrace.config import (
    ConfigError,
    CourseConfig,
    Member,
    config_from_mapping,
    load_mapping,
)
from teamtrace.ingest import CommitRecord

POISSON_CHUNK = 30.0
_UTC = dt.timezone.utc


@dataclass(frozen=True)
class BehaviorProfile:
    name: str
    base_rate: float
    deadline_multiplier: float = 1.0
    deadline_window_days: int = 0
    activity_probability: float = 1.0

    def __post_init__(self) -> None:
        if self.base_rate < 0:
            raise ConfigError(f"profile {self.name!r}: base_rate must be >= 0")
        if self.deadline_multiplier < 1:
            raise ConfigError(f"profile {self.name!r}: deadline_multiplier must be >= 1")
        if self.deadline_window_days < 0:
            raise ConfigError(f"profile {self.name!r}: deadline_window_days must be >= 0")
        if not 0 <= self.activity_probability <= 1:
            raise ConfigError(f"profile {self.name!r}: activity_probability must be in [0, 1]")


@dataclass(frozen=True)
class TeamSpec:
    team_id: str
    members: tuple[tuple[str, str], ...]  # (member_id, profile name)


@dataclass(frozen=True)
class CohortSpec:
    teams: tuple[TeamSpec, ...]
    config: CourseConfig
    seed: int
    profiles: Mapping[str, BehaviorProfile]

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed {self.seed} is not a 64-bit unsigned integer")
        team_ids = [t.team_id for t in self.teams]
        if len(set(team_ids)) != len(team_ids):
            raise ConfigError("teams: duplicate team_id")
        for team in self.teams:
            ids = [m for m, _ in team.members]
            if len(set(ids)) != len(ids):
                raise ConfigError(f"team {team.team_id!r}: duplicate member_id")
            for member_id, profile in team.members:
                if profile not in self.profiles:
                    raise ConfigError(
                        f"team {team.team_id!r}: member {member_id!r} uses unknown profile {profile!r}"
                    )

    def team_members(self, team: TeamSpec) -> list[tuple[str, BehaviorProfile]]:
        return [(m, self.profiles[p]) for m, p in team.members]


def poisson_inversion(rng: random.Random, mean: float) -> int:
    """Poisson variate by sequential search of the CDF."""
    if mean <= 0:
        return 0
    chunks = max(1, math.ceil(mean / POISSON_CHUNK))
    lam = mean / chunks
    total = 0
    for _ in range(chunks):
        u = rng.random()
        k, p = 0, math.exp(-lam)
        cdf = p
        while u > cdf:
            k += 1
            p *= lam / k
            cdf += p
            if p == 0.0:
                break
        total += k
    return total


def sub_seed(seed: int, team_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{team_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def synthetic_email(member_id: str) -> str:
    return f"{member_id}@users.noreply.example"


def deadline_days(config: CourseConfig, window_days: int) -> set[dt.date]:
    """Due dates and the ``window_days`` calendar days before each."""
    return {
        due - dt.timedelta(days=back)
        for due in config.due_dates()
        for back in range(window_days + 1)
    }


def _member_identity(config: CourseConfig, member_id: str) -> tuple[str, str]:
    for m in config.members:
        if m.member_id == member_id:
            email = m.email_aliases[0] if m.email_aliases else synthetic_email(member_id)
            return m.display_name or member_id, email
    return member_id, synthetic_email(member_id)


def simulate_team(
    members: Sequence[tuple[str, BehaviorProfile]],
    config: CourseConfig,
    seed: int,
) -> list[CommitRecord]:
    rng = random.Random(seed)
    tz = config.tzinfo
    windows = {
        profile.deadline_window_days: deadline_days(config, profile.deadline_window_days)
        for _, profile in members
    }
    identities = {member_id: _member_identity(config, member_id) for member_id, _ in members}

    drafts: list[tuple[dt.datetime, str, str, int]] = []
    for day in config.period.days():
        midnight = dt.datetime.combine(day, dt.time(), tzinfo=tz).astimezone(_UTC)
        next_midnight = dt.datetime.combine(
            day + dt.timedelta(days=1), dt.time(), tzinfo=tz
        ).astimezone(_UTC)
        day_seconds = int((next_midnight - midnight).total_seconds())
        for member_id, profile in members:
            active = rng.random() < profile.activity_probability
            boost = profile.deadline_multiplier if day in windows[profile.deadline_window_days] else 1.0
            mean = profile.base_rate * boost if active else 0.0
            count = poisson_inversion(rng, mean)
            for j in range(count):
                offset = math.floor(rng.random() * day_seconds)
                stamp = (midnight + dt.timedelta(seconds=offset)).astimezone(tz)
                drafts.append((stamp, member_id, day.isoformat(), j))

    drafts.sort(key=lambda d: d[0])
    records = []
    parent: tuple[str, ...] = ()
    for n, (stamp, member_id, day_text, j) in enumerate(drafts):
        sha = hashlib.sha1(f"{seed}:{member_id}:{day_text}:{j}".encode()).hexdigest()
        name, email = identities[member_id]
        records.append(
            CommitRecord(
                sha=sha,
                author_name=name,
                author_email=email,
                timestamp=stamp,
                parents=parent,
                subject=f"Synthetic commit {n + 1} by {member_id}",
                body="",
            )
        )
        parent = (sha,)
    return records


def team_config(base: CourseConfig, team: TeamSpec) -> CourseConfig:
    """Course config for one simulated team, with a roster of synthetic identities."""
    members = []
    for member_id, _ in team.members:
        name, email = _member_identity(base, member_id)
        members.append(Member(member_id, name, (email,), (member_id,)))
    return CourseConfig(
        course_start=base.course_start,
        course_end=base.course_end,
        timezone=base.timezone,
        members=tuple(members),
        milestones=base.milestones,
        team_id=team.team_id,
    )


def simulate_cohort(spec: CohortSpec) -> dict[str, list[CommitRecord]]:
    return {
        team.team_id: simulate_team(
            spec.team_members(team), spec.config, sub_seed(spec.seed, team.team_id)
        )
        for team in spec.teams
    }


def cohort_from_mapping(data: Any, base_dir: Path | None = None) -> CohortSpec:
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping")
    for key in ("seed", "config", "profiles", "teams"):
        if key not in data:
            raise ConfigError(f"{key}: required field missing")

    raw_config = data["config"]
    if isinstance(raw_config, str):
        path = Path(raw_config)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        raw_config = load_mapping(path)
    config = config_from_mapping(raw_config)

    profiles = {}
    for i, raw in enumerate(data["profiles"]):
        try:
            profile = BehaviorProfile(
                name=str(raw["name"]),
                base_rate=float(raw["base_rate"]),
                deadline_multiplier=float(raw.get("deadline_multiplier", 1.0)),
                deadline_window_days=int(raw.get("deadline_window_days", 0)),
                activity_probability=float(raw.get("activity_probability", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"profiles[{i}]: {exc}") from None
        profiles[profile.name] = profile

    teams = []
    for i, raw in enumerate(data["teams"]):
        try:
            members = tuple((str(m["member_id"]), str(m["profile"])) for m in raw["members"])
            teams.append(TeamSpec(str(raw["team_id"]), members))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"teams[{i}]: missing field {exc}") from None

    try:
        seed = int(data["seed"])
    except (TypeError, ValueError):
        raise ConfigError(f"seed: {data['seed']!r} is not an integer") from None
    return CohortSpec(tuple(teams), config, seed, profiles)


def load_cohort_spec(path: str | Path) -> CohortSpec:
    path = Path(path)
    return cohort_from_mapping(load_mapping(path), path.parent)
