"""Repository mining and contribution-fairness metrics for capstone teams."""

from teamtrace.config import CourseConfig, DateRange, load_course_config
from teamtrace.ingest import (
    AttributedCommit,
    CommitRecord,
    WorkEvent,
    parse_commit_log,
    parse_events,
    resolve_identities,
)
from teamtrace.metrics import (
    ContributionMultiset,
    DailySeries,
    FairnessResult,
    TimeSpreadSummary,
    daily_commit_series,
    descriptive_stats,
    jain_index,
    meeting_attendance,
    member_commit_counts,
    pearson,
    time_fairness,
    time_spread_summary,
    unfairness,
    work_event_counts,
)

__version__ = "0.1.0"

__all__ = [
    "AttributedCommit",
    "CommitRecord",
    "ContributionMultiset",
    "CourseConfig",
    "DailySeries",
    "DateRange",
    "FairnessResult",
    "TimeSpreadSummary",
    "WorkEvent",
    "daily_commit_series",
    "descriptive_stats",
    "jain_index",
    "load_course_config",
    "meeting_attendance",
    "member_commit_counts",
    "parse_commit_log",
    "parse_events",
    "pearson",
    "resolve_identities",
    "time_fairness",
    "time_spread_summary",
    "unfairness",
    "work_event_counts",
]
