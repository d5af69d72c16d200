"""Fairness indices, per-member counts, daily series and time-spread measures."""

from __future__ import annotations

import datetime as dt
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from teamtrace.config import CourseConfig, DateRange
from teamtrace.ingest import AttributedCommit, WorkEvent

WORK_EVENT_COUNTED_KINDS = frozenset({"push", "pr_opened", "pr_merged", "issue_comment"})


class MetricError(ValueError):
    """Raised when a metric is undefined for its input."""


@dataclass(frozen=True)
class ContributionMultiset:
    counts: tuple[int, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(self.counts))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
        if not self.counts:
            raise MetricError("contribution multiset is empty")
        for c in self.counts:
            if isinstance(c, bool) or not isinstance(c, int):
                raise MetricError(f"count {c!r} is not an integer")
            if c < 0:
                raise MetricError(f"count {c} is negative")
        if self.labels is not None and len(self.labels) != len(self.counts):
            raise MetricError(
                f"{len(self.labels)} labels given for {len(self.counts)} counts"
            )

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_dict(self) -> dict[str, int]:
        if self.labels is None:
            return {str(i): c for i, c in enumerate(self.counts)}
        return dict(zip(self.labels, self.counts))

    def __getitem__(self, label: str) -> int:
        return self.as_dict()[label]


def _as_multiset(c: ContributionMultiset | Iterable[int]) -> ContributionMultiset:
    if isinstance(c, ContributionMultiset):
        return c
    return ContributionMultiset(tuple(c))


@dataclass(frozen=True)
class FairnessResult:
    unfairness: float
    fairness: float
    degenerate: bool
    exact: Fraction = field(default=Fraction(0), compare=False)

    @classmethod
    def from_fraction(cls, value: Fraction, degenerate: bool = False) -> FairnessResult:
        u = float(value)
        return cls(unfairness=u, fairness=1.0 - u, degenerate=degenerate, exact=value)

    def to_dict(self) -> dict[str, object]:
        return {
            "unfairness": self.unfairness,
            "fairness": self.fairness,
            "degenerate": self.degenerate,
        }


def pairwise_excess(counts: Sequence[int]) -> int:
    """Sum of ``c - x`` over ordered position pairs with ``c > x``.

    Sorted ascending, element ``k`` exceeds the ``k`` elements before it and
    is exceeded by the ``n - 1 - k`` after it; ties contribute zero either way.
    """
    ordered = sorted(counts)
    n = len(ordered)
    return sum((2 * k - n + 1) * v for k, v in enumerate(ordered))


def unfairness_fraction(c: ContributionMultiset | Iterable[int]) -> tuple[Fraction, bool]:
    """Exact unfairness and whether the input was degenerate."""
    counts = _as_multiset(c).counts
    n = len(counts)
    total = sum(counts)
    if n == 1 or total == 0:
        return Fraction(0), True
    return Fraction(pairwise_excess(counts), (n - 1) * total), False


def unfairness(c: ContributionMultiset | Iterable[int]) -> FairnessResult:
    """Pairwise-excess unfairness index and its complement, the fairness index.

    A single contributor or an all-zero multiset has a zero denominator; both
    are reported as unfairness 0 with ``degenerate=True``.

    >>> unfairness([10, 5, 5]).unfairness
    0.25
    """
    value, degenerate = unfairness_fraction(c)
    return FairnessResult.from_fraction(value, degenerate)


def jain_index(c: ContributionMultiset | Iterable[int]) -> float:
    counts = _as_multiset(c).counts
    total = sum(counts)
    if total == 0:
        raise MetricError("Jain's index is undefined for an all-zero allocation")
    squares = sum(v * v for v in counts)
    return float(Fraction(total * total, len(counts) * squares))


def _included(commit: AttributedCommit, include_merges: bool) -> bool:
    return include_merges or not commit.record.is_merge


def member_commit_counts(
    commits: Iterable[AttributedCommit],
    config: CourseConfig,
    window: DateRange | None = None,
    include_merges: bool = False,
) -> ContributionMultiset:
    """Commits credited to each roster member, zeros included.

    A commit with co-authors credits every distinct resolved member once.
    """
    counts = dict.fromkeys(config.member_ids, 0)
    for commit in commits:
        if not _included(commit, include_merges):
            continue
        if window is not None and config.local_date(commit.record.timestamp) not in window:
            continue
        for member in commit.credited_members:
            if member in counts:
                counts[member] += 1
    return ContributionMultiset(tuple(counts.values()), tuple(counts))


@dataclass(frozen=True)
class DailySeries:
    start_date: dt.date
    values: tuple[int, ...]
    milestone_marks: dict[int, str] = field(default_factory=dict)
    dropped: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        for v in self.values:
            if v < 0:
                raise MetricError(f"daily value {v} is negative")
        for index, kind in self.milestone_marks.items():
            if not 0 <= index < len(self.values):
                raise MetricError(f"milestone mark {index} outside series of {len(self.values)} days")
            if kind not in ("due_date", "presentation"):
                raise MetricError(f"unknown milestone kind {kind!r}")

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=len(self.values) - 1)

    def date_at(self, index: int) -> dt.date:
        return self.start_date + dt.timedelta(days=index)

    def dates(self) -> list[dt.date]:
        return [self.date_at(i) for i in range(len(self.values))]

    @property
    def total(self) -> int:
        return sum(self.values)


def milestone_marks(config: CourseConfig, period: DateRange) -> dict[int, str]:
    """Day-index to milestone kind; a due date outranks a presentation."""
    marks: dict[int, str] = {}
    for m in sorted(config.milestones, key=lambda m: (m.date, m.kind != "due_date")):
        if m.date not in period:
            continue
        index = (m.date - period.start).days
        if marks.get(index) != "due_date":
            marks[index] = m.kind
    return dict(sorted(marks.items()))


def daily_commit_series(
    commits: Iterable[AttributedCommit],
    config: CourseConfig,
    window: DateRange | None = None,
    include_merges: bool = False,
) -> DailySeries:
    """Commits per calendar day of the course period, in the course timezone.

    Each commit counts once regardless of how many members it credits.
    Commits falling outside the period are tallied in ``dropped``.
    """
    period = window or config.period
    values = [0] * len(period)
    dropped = 0
    for commit in commits:
        if not _included(commit, include_merges):
            continue
        day = config.local_date(commit.record.timestamp)
        if day in period:
            values[(day - period.start).days] += 1
        else:
            dropped += 1
    return DailySeries(period.start, tuple(values), milestone_marks(config, period), dropped)


@dataclass(frozen=True)
class TimeSpreadSummary:
    total_commits: int
    total_days: int
    t0_days: int
    t0_commits: int
    t0_commit_proportion: float
    t2_t0_days: int
    t2_t0_commits: int
    t2_t0_commit_proportion: float
    degenerate: bool = False

    @property
    def t0_day_proportion(self) -> float:
        return self.t0_days / self.total_days if self.total_days else 0.0

    @property
    def t2_t0_day_proportion(self) -> float:
        return self.t2_t0_days / self.total_days if self.total_days else 0.0

    def to_dict(self) -> dict[str, object]:
        return {
            "total_commits": self.total_commits,
            "total_days": self.total_days,
            "t0_days": self.t0_days,
            "t0_day_proportion": self.t0_day_proportion,
            "t0_commits": self.t0_commits,
            "t0_commit_proportion": self.t0_commit_proportion,
            "t2_t0_days": self.t2_t0_days,
            "t2_t0_day_proportion": self.t2_t0_day_proportion,
            "t2_t0_commits": self.t2_t0_commits,
            "t2_t0_commit_proportion": self.t2_t0_commit_proportion,
            "degenerate": self.degenerate,
        }


def deadline_day_sets(series: DailySeries, lead_days: int = 2) -> tuple[set[int], set[int]]:
    """Indices of due dates, and of due dates plus the ``lead_days`` before each."""
    due = {i for i, kind in series.milestone_marks.items() if kind == "due_date"}
    near = {j for i in due for j in range(i - lead_days, i + 1) if 0 <= j < len(series.values)}
    return due, near


def time_spread_summary(series: DailySeries) -> TimeSpreadSummary:
    due, near = deadline_day_sets(series)
    total = series.total
    t0 = sum(series.values[i] for i in due)
    t2 = sum(series.values[i] for i in near)
    return TimeSpreadSummary(
        total_commits=total,
        total_days=len(series.values),
        t0_days=len(due),
        t0_commits=t0,
        t0_commit_proportion=t0 / total if total else 0.0,
        t2_t0_days=len(near),
        t2_t0_commits=t2,
        t2_t0_commit_proportion=t2 / total if total else 0.0,
        degenerate=total == 0,
    )


def time_fairness(series: DailySeries) -> FairnessResult:
    """Fairness index over every day of the series, zero-commit days included."""
    return unfairness(ContributionMultiset(series.values))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson product-moment correlation coefficient."""
    if len(xs) != len(ys):
        raise MetricError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise MetricError("correlation needs at least two pairs")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise MetricError("correlation is undefined for a constant input")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    stddev: float
    n: int


def descriptive_stats(values: Sequence[float]) -> DescriptiveStats:
    """Mean and sample (n - 1) standard deviation; a single value has stddev 0."""
    values = list(values)
    if not values:
        raise MetricError("descriptive statistics need at least one value")
    mean = statistics.fmean(values)
    stddev = statistics.stdev(values) if len(values) > 1 else 0.0
    return DescriptiveStats(mean=mean, stddev=stddev, n=len(values))


def _event_in_window(event: WorkEvent, config: CourseConfig, window: DateRange | None) -> bool:
    return window is None or config.local_date(event.timestamp) in window


@dataclass
class EventTally:
    counts: ContributionMultiset
    unresolved: dict[str, int]


def tally_events(
    events: Iterable[WorkEvent],
    config: CourseConfig,
    kinds: Iterable[str],
    window: DateRange | None = None,
) -> EventTally:
    """Per-member counts of events of the given kinds, actors resolved by login."""
    wanted = frozenset(kinds)
    counts = dict.fromkeys(config.member_ids, 0)
    unresolved: dict[str, int] = {}
    for event in events:
        if event.kind not in wanted or not _event_in_window(event, config, window):
            continue
        member = config.member_for_login(event.actor)
        if member is None:
            unresolved[event.actor] = unresolved.get(event.actor, 0) + 1
        else:
            counts[member] += 1
    return EventTally(ContributionMultiset(tuple(counts.values()), tuple(counts)), unresolved)


def work_event_counts(
    events: Iterable[WorkEvent],
    config: CourseConfig,
    window: DateRange | None = None,
) -> ContributionMultiset:
    """Pushes, opened and merged pull requests, and issue comments per member."""
    return tally_events(events, config, WORK_EVENT_COUNTED_KINDS, window).counts


@dataclass(frozen=True)
class Attendance:
    attended: int
    held: int

    @property
    def rate(self) -> float | None:
        return self.attended / self.held if self.held else None


def meeting_attendance(
    events: Iterable[WorkEvent],
    config: CourseConfig,
    kind_filter: str | None = None,
    window: DateRange | None = None,
) -> dict[str, Attendance]:
    meetings = [
        e
        for e in events
        if e.kind == "meeting"
        and (kind_filter is None or e.meeting_kind == kind_filter)
        and _event_in_window(e, config, window)
    ]
    return {
        member: Attendance(sum(member in m.attendees for m in meetings), len(meetings))
        for member in config.member_ids
    }
