"""Team-charter rules: quantified expectations and their evaluation.

A charter file is YAML with a ``rules`` list.  Each rule is either spelled
out field by field or given as a one-line ``rule`` expression such as
``"commit_share < 0.05 before PoC"``; the remaining fields
(``consequence``, ``severity``, ...) are given alongside.
"""

from __future__ import annotations

import datetime as dt
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

from teamtrace.config import ConfigError, CourseConfig, DateRange, load_mapping, parse_date
from teamtrace.ingest import AttributedCommit, WorkEvent
from teamtrace.metrics import meeting_attendance, member_commit_counts, tally_events, work_event_counts

SHARE_METRICS = ("commit_share", "meeting_attendance_rate")
COUNT_METRICS = ("commit_count", "work_event_count", "issues_closed")
METRICS = SHARE_METRICS + COUNT_METRICS
SEVERITIES = ("info", "warn", "escalate")
SCOPES = ("each_member", "named_member")

COMPARATORS: dict[str, Callable[[float, float], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}
_COMPARATOR_ALIASES = {"≤": "<=", "≥": ">=", "=<": "<=", "=>": ">="}

_RULE_EXPR = re.compile(
    r"^\s*(?P<metric>\w+)\s*(?P<cmp><=|>=|=<|=>|<|>|≤|≥)\s*(?P<threshold>[0-9.]+%?)"
    r"(?:\s+(?:(?P<before>before)\s+(?P<b_to>.+?)|(?P<after>after|from)\s+(?P<a_from>.+?)"
    r"(?:\s+to\s+(?P<a_to>.+?))?))?\s*$",
    re.IGNORECASE,
)


class CharterError(ValueError):
    """Raised when a charter file violates the charter grammar."""


@dataclass(frozen=True)
class CharterRule:
    rule_id: str
    metric: str
    comparator: str
    threshold: float
    window: DateRange
    consequence: str = ""
    severity: str = "info"
    scope: str = "each_member"
    member: str | None = None
    meeting_kind: str | None = None
    window_spec: tuple[str, str] = ("course_start", "course_end")

    def compare(self, observed: float) -> bool:
        return COMPARATORS[self.comparator](observed, self.threshold)


@dataclass(frozen=True)
class Verdict:
    rule_id: str
    member_id: str
    triggered: bool
    observed: float
    threshold: float
    window_resolved: DateRange
    consequence: str = ""
    severity: str = "info"
    metric: str = ""
    comparator: str = ""
    degenerate: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "member_id": self.member_id,
            "metric": self.metric,
            "comparator": self.comparator,
            "threshold": self.threshold,
            "observed": self.observed,
            "triggered": self.triggered,
            "degenerate": self.degenerate,
            "severity": self.severity,
            "window": [self.window_resolved.start.isoformat(), self.window_resolved.end.isoformat()],
            "consequence": self.consequence,
        }


@dataclass
class TeamData:
    """Everything charter evaluation and reporting read for one team."""

    config: CourseConfig
    commits: list[AttributedCommit] = field(default_factory=list)
    events: list[WorkEvent] = field(default_factory=list)
    include_merges: bool = False


def resolve_endpoint(value: Any, config: CourseConfig, where: str) -> dt.date:
    """A window endpoint: a milestone name, ``course_start``/``course_end``, or a date."""
    if isinstance(value, dt.date):
        return value if not isinstance(value, dt.datetime) else value.date()
    text = str(value).strip()
    if text.casefold() == "course_start":
        return config.course_start
    if text.casefold() == "course_end":
        return config.course_end
    milestone = config.milestone(text)
    if milestone is not None:
        return milestone.date
    try:
        return parse_date(text, where)
    except ConfigError:
        raise CharterError(f"{where}: unknown milestone {text!r}") from None


def resolve_window(spec: tuple[Any, Any], config: CourseConfig, where: str) -> DateRange:
    start = resolve_endpoint(spec[0], config, f"{where}.from")
    end = resolve_endpoint(spec[1], config, f"{where}.to")
    if start > end:
        raise CharterError(f"{where}: window starts {start} after it ends {end}")
    window = DateRange(start, end)
    if not window.within(config.period):
        raise CharterError(f"{where}: window {window} is outside the course period {config.period}")
    return window


def _parse_threshold(text: str, where: str) -> float:
    text = text.strip()
    try:
        if text.endswith("%"):
            return float(text[:-1]) / 100
        return float(text)
    except ValueError:
        raise CharterError(f"{where}: threshold {text!r} is not a number") from None


def _expand_expression(raw: dict[str, Any], where: str) -> dict[str, Any]:
    match = _RULE_EXPR.match(str(raw["rule"]))
    if match is None:
        raise CharterError(
            f"{where}.rule: cannot parse {raw['rule']!r}; expected "
            "'<metric> <comparator> <threshold> [before M | after M | from M to N]'"
        )
    out = dict(raw)
    out.setdefault("metric", match["metric"])
    out.setdefault("comparator", match["cmp"])
    out.setdefault("threshold", match["threshold"])
    if match["before"]:
        out.setdefault("window", {"from": "course_start", "to": match["b_to"]})
    elif match["after"]:
        out.setdefault(
            "window", {"from": match["a_from"], "to": match["a_to"] or "course_end"}
        )
    return out


def rule_from_mapping(raw: Any, config: CourseConfig, index: int) -> CharterRule:
    where = f"rules[{index}]"
    if not isinstance(raw, dict):
        raise CharterError(f"{where}: expected a mapping")
    if "rule" in raw:
        raw = _expand_expression(raw, where)
    for key in ("metric", "comparator", "threshold"):
        if key not in raw:
            raise CharterError(f"{where}.{key}: required field missing")

    metric = str(raw["metric"])
    if metric not in METRICS:
        raise CharterError(f"{where}.metric: {metric!r} is not one of {METRICS}")
    comparator = _COMPARATOR_ALIASES.get(str(raw["comparator"]), str(raw["comparator"]))
    if comparator not in COMPARATORS:
        raise CharterError(f"{where}.comparator: {raw['comparator']!r} is not one of <, <=, >, >=")
    threshold = _parse_threshold(str(raw["threshold"]), f"{where}.threshold")
    if metric in SHARE_METRICS and not 0 <= threshold <= 1:
        raise CharterError(f"{where}.threshold: {threshold} outside [0, 1] for {metric}")
    if metric in COUNT_METRICS and threshold < 0:
        raise CharterError(f"{where}.threshold: {threshold} is negative for {metric}")

    severity = str(raw.get("severity", "info"))
    if severity not in SEVERITIES:
        raise CharterError(f"{where}.severity: {severity!r} is not one of {SEVERITIES}")
    scope = str(raw.get("scope", "named_member" if raw.get("member") else "each_member"))
    if scope not in SCOPES:
        raise CharterError(f"{where}.scope: {scope!r} is not one of {SCOPES}")
    member = raw.get("member")
    if scope == "named_member":
        if member is None:
            raise CharterError(f"{where}.member: named_member scope requires a member")
        if str(member) not in config.member_ids:
            raise CharterError(f"{where}.member: {member!r} is not on the roster")
        member = str(member)

    window_raw = raw.get("window") or {}
    if not isinstance(window_raw, dict):
        raise CharterError(f"{where}.window: expected a mapping with 'from' and 'to'")
    spec = (window_raw.get("from", "course_start"), window_raw.get("to", "course_end"))
    window = resolve_window(spec, config, f"{where}.window")

    return CharterRule(
        rule_id=str(raw.get("rule_id", f"rule-{index + 1}")),
        metric=metric,
        comparator=comparator,
        threshold=threshold,
        window=window,
        consequence=str(raw.get("consequence", "")),
        severity=severity,
        scope=scope,
        member=member,
        meeting_kind=raw.get("meeting_kind"),
        window_spec=(str(spec[0]), str(spec[1])),
    )


def rules_from_mapping(data: Any, config: CourseConfig) -> list[CharterRule]:
    if data is None:
        return []
    if not isinstance(data, dict):
        raise CharterError("<root>: expected a mapping with a 'rules' list")
    raw_rules = data.get("rules") or []
    if not isinstance(raw_rules, list):
        raise CharterError("rules: expected a list")
    rules = [rule_from_mapping(raw, config, i) for i, raw in enumerate(raw_rules)]
    ids = [r.rule_id for r in rules]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise CharterError(f"rules: duplicate rule_id {', '.join(duplicates)}")
    return rules


def parse_charter(path: str | Path, config: CourseConfig) -> list[CharterRule]:
    try:
        data = load_mapping(path)
    except ConfigError as exc:
        raise CharterError(str(exc)) from None
    return rules_from_mapping(data, config)


def _observations(rule: CharterRule, team: TeamData) -> dict[str, tuple[float, bool]]:
    """Observed metric value and degenerate flag per roster member."""
    config, window = team.config, rule.window
    if rule.metric in ("commit_share", "commit_count"):
        counts = member_commit_counts(team.commits, config, window, team.include_merges).as_dict()
        if rule.metric == "commit_count":
            return {m: (float(v), False) for m, v in counts.items()}
        total = sum(counts.values())
        return {m: ((v / total, False) if total else (0.0, True)) for m, v in counts.items()}
    if rule.metric == "meeting_attendance_rate":
        attendance = meeting_attendance(team.events, config, rule.meeting_kind, window)
        return {
            m: ((a.attended / a.held, False) if a.held else (0.0, True))
            for m, a in attendance.items()
        }
    if rule.metric == "work_event_count":
        counts = work_event_counts(team.events, config, window).as_dict()
    else:
        counts = tally_events(team.events, config, ("issue_closed",), window).counts.as_dict()
    return {m: (float(v), False) for m, v in counts.items()}


def evaluate_rules(rules: Iterable[CharterRule], team: TeamData) -> list[Verdict]:
    """One verdict per rule and in-scope member, in rule then roster order.

    A degenerate observation (no team commits, no meetings held) never
    triggers a rule.
    """
    verdicts = []
    for rule in rules:
        observed = _observations(rule, team)
        members = [rule.member] if rule.scope == "named_member" else team.config.member_ids
        for member in members:
            value, degenerate = observed[member]
            triggered = not degenerate and rule.compare(value)
            verdicts.append(
                Verdict(
                    rule_id=rule.rule_id,
                    member_id=member,
                    triggered=triggered,
                    observed=value,
                    threshold=rule.threshold,
                    window_resolved=rule.window,
                    consequence=rule.consequence if triggered else "",
                    severity=rule.severity,
                    metric=rule.metric,
                    comparator=rule.comparator,
                    degenerate=degenerate,
                )
            )
    return verdicts


def escalated(verdicts: Iterable[Verdict]) -> bool:
    return any(v.triggered and v.severity == "escalate" for v in verdicts)
