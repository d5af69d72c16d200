"""Performance reports, histogram data and fairness chart data.

Every emitter here returns text and is deterministic; writing files is left
to the caller.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from teamtrace.charter import CharterRule, TeamData, Verdict, evaluate_rules
from teamtrace.config import DateRange
from teamtrace.ingest import MEETING_KINDS
from teamtrace.metrics import (
    DailySeries,
    FairnessResult,
    MetricError,
    TimeSpreadSummary,
    daily_commit_series,
    descriptive_stats,
    meeting_attendance,
    member_commit_counts,
    pearson,
    tally_events,
    time_fairness,
    time_spread_summary,
    unfairness,
    work_event_counts,
)

REPORT_FORMAT_VERSION = 1
HISTOGRAM_HEADER = ("Date", "Commits", "Highlight")
HIGHLIGHTS = {"due_date": "Red", "presentation": "Orange"}


@dataclass(frozen=True)
class MemberRow:
    member_id: str
    commits: int
    commit_share: float
    meetings_attended_by_kind: dict[str, int]
    issues_closed: int
    work_events: int
    explanation: str = ""


@dataclass
class PerformanceReport:
    team_id: str
    window: DateRange
    rows: list[MemberRow]
    team_fairness: FairnessResult
    time_fairness: FairnessResult
    time_spread: TimeSpreadSummary
    verdicts: list[Verdict] = field(default_factory=list)
    meetings_held_by_kind: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "team_id": self.team_id,
            "window": [self.window.start.isoformat(), self.window.end.isoformat()],
            "rows": [
                {
                    "member_id": r.member_id,
                    "commits": r.commits,
                    "commit_share": r.commit_share,
                    "meetings_attended_by_kind": r.meetings_attended_by_kind,
                    "issues_closed": r.issues_closed,
                    "work_events": r.work_events,
                    "explanation": r.explanation,
                }
                for r in self.rows
            ],
            "meetings_held_by_kind": self.meetings_held_by_kind,
            "team_fairness": self.team_fairness.to_dict(),
            "time_fairness": self.time_fairness.to_dict(),
            "time_spread": self.time_spread.to_dict(),
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


def build_performance_report(
    team: TeamData,
    window: DateRange | None = None,
    rules: Sequence[CharterRule] = (),
    explanations: Mapping[str, str] | None = None,
) -> PerformanceReport:
    config = team.config
    window = window or config.period
    if not window.within(config.period):
        raise ValueError(f"report window {window} is outside the course period {config.period}")
    explanations = explanations or {}

    commits = member_commit_counts(team.commits, config, window, team.include_merges)
    total = commits.total
    events = work_event_counts(team.events, config, window).as_dict()
    closed = tally_events(team.events, config, ("issue_closed",), window).counts.as_dict()
    attendance = {
        kind: meeting_attendance(team.events, config, kind, window) for kind in MEETING_KINDS
    }
    series = daily_commit_series(team.commits, config, window, team.include_merges)

    rows = [
        MemberRow(
            member_id=member,
            commits=count,
            commit_share=count / total if total else 0.0,
            meetings_attended_by_kind={k: attendance[k][member].attended for k in MEETING_KINDS},
            issues_closed=closed[member],
            work_events=events[member],
            explanation=explanations.get(member, ""),
        )
        for member, count in commits.as_dict().items()
    ]
    held = {
        kind: next(iter(per_member.values())).held if per_member else 0
        for kind, per_member in attendance.items()
    }
    return PerformanceReport(
        team_id=config.team_id,
        window=window,
        rows=rows,
        team_fairness=unfairness(commits),
        time_fairness=time_fairness(series),
        time_spread=time_spread_summary(series),
        verdicts=evaluate_rules(rules, team),
        meetings_held_by_kind=held,
    )


def _pct(value: float) -> str:
    return f"{100 * value:.2f}%"


def _md_table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    for row in rows:
        cells = [str(c).replace("|", "\\|").replace("\n", " ") for c in row]
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def time_spread_table(summary: TimeSpreadSummary) -> list[str]:
    return _md_table(
        ("Metric", "Value"),
        [
            ("Total Commits", summary.total_commits),
            ("Total Days", summary.total_days),
            ("T-0 Days", f"{summary.t0_days} ({_pct(summary.t0_day_proportion)})"),
            ("T-0 Commits", f"{summary.t0_commits} ({_pct(summary.t0_commit_proportion)})"),
            ("T-2...T-0 Days", f"{summary.t2_t0_days} ({_pct(summary.t2_t0_day_proportion)})"),
            (
                "T-2...T-0 Commits",
                f"{summary.t2_t0_commits} ({_pct(summary.t2_t0_commit_proportion)})",
            ),
        ],
    )


def _fairness_cell(result: FairnessResult) -> str:
    text = f"{result.fairness:.6f}"
    return text + " (degenerate)" if result.degenerate else text


def verdict_table(verdicts: Sequence[Verdict]) -> list[str]:
    return _md_table(
        ("Rule", "Member", "Metric", "Observed", "Condition", "Triggered", "Severity", "Consequence"),
        [
            (
                v.rule_id,
                v.member_id,
                v.metric,
                f"{v.observed:.6g}" + (" (degenerate)" if v.degenerate else ""),
                f"{v.comparator} {v.threshold:g}",
                "yes" if v.triggered else "no",
                v.severity,
                v.consequence,
            )
            for v in verdicts
        ],
    )


def render_markdown(report: PerformanceReport, generated_at: str | None = None) -> str:
    """Markdown performance report; the layout is pinned by ``REPORT_FORMAT_VERSION``."""
    title = f"# Performance report: {report.team_id}" if report.team_id else "# Performance report"
    lines = [title, "", f"<!-- report-format: {REPORT_FORMAT_VERSION} -->"]
    if generated_at:
        lines.append(f"<!-- generated: {generated_at} -->")
    lines += ["", f"Window: {report.window.start.isoformat()} to {report.window.end.isoformat()}", ""]
    lines.append("## Contributions")
    lines.append("")
    meeting_header = [f"{kind} meetings" for kind in MEETING_KINDS]
    lines += _md_table(
        ("Member", "Commits", "Commit share", *meeting_header, "Issues closed", "Work events", "Explanation"),
        [
            (
                r.member_id,
                r.commits,
                _pct(r.commit_share),
                *(
                    f"{r.meetings_attended_by_kind[k]}/{report.meetings_held_by_kind.get(k, 0)}"
                    for k in MEETING_KINDS
                ),
                r.issues_closed,
                r.work_events,
                r.explanation,
            )
            for r in report.rows
        ],
    )
    lines += ["", "## Fairness", ""]
    lines += _md_table(
        ("Measure", "Fairness", "Unfairness"),
        [
            ("Team fairness", _fairness_cell(report.team_fairness), f"{report.team_fairness.unfairness:.6f}"),
            ("Time fairness", _fairness_cell(report.time_fairness), f"{report.time_fairness.unfairness:.6f}"),
        ],
    )
    lines += ["", "## Time spread", ""]
    lines += time_spread_table(report.time_spread)
    if report.verdicts:
        lines += ["", "## Charter verdicts", ""]
        lines += verdict_table(report.verdicts)
    return "\n".join(lines) + "\n"


def highlight_for(kind: str | None) -> str:
    return HIGHLIGHTS.get(kind or "", "None")


def histogram_export(series: DailySeries) -> str:
    """``Date,Commits,Highlight`` CSV, one row per day.

    Highlight is ``Red`` on due dates and ``Orange`` on presentation days;
    a day that is both is ``Red``.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HISTOGRAM_HEADER)
    for i, value in enumerate(series.values):
        writer.writerow((series.date_at(i).isoformat(), value, highlight_for(series.milestone_marks.get(i))))
    return buf.getvalue()


def parse_histogram_csv(text: str) -> DailySeries:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != HISTOGRAM_HEADER:
        raise ValueError(f"expected header {','.join(HISTOGRAM_HEADER)}")
    body = rows[1:]
    if not body:
        raise ValueError("histogram has no rows")
    kinds = {v: k for k, v in HIGHLIGHTS.items()}
    start = dt.date.fromisoformat(body[0][0])
    values, marks = [], {}
    for i, (day, commits, highlight) in enumerate(body):
        if dt.date.fromisoformat(day) != start + dt.timedelta(days=i):
            raise ValueError(f"row {i + 1}: dates are not consecutive")
        values.append(int(commits))
        if highlight in kinds:
            marks[i] = kinds[highlight]
    return DailySeries(start, tuple(values), marks)


def _fairness_value(value: FairnessResult | float) -> float:
    return value.fairness if isinstance(value, FairnessResult) else float(value)


def fairness_chart_export(per_team: Sequence[Mapping[str, Any]]) -> str:
    """Per-team fairness CSV sorted by team fairness, with summary rows.

    Summary rows use the reserved ids ``__mean__``, ``__stddev__`` and
    ``__correlation__``; an undefined correlation leaves the value blank and
    explains why in the ``note`` column.
    """
    if not per_team:
        raise ValueError("fairness chart needs at least one team")
    teams = sorted(
        (
            (str(t["team_id"]), _fairness_value(t["team_fairness"]), _fairness_value(t["time_fairness"]))
            for t in per_team
        ),
        key=lambda row: (row[1], row[0]),
    )
    team_f = [t[1] for t in teams]
    time_f = [t[2] for t in teams]
    team_stats, time_stats = descriptive_stats(team_f), descriptive_stats(time_f)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("team_id", "team_fairness", "time_fairness", "note"))
    for team_id, a, b in teams:
        writer.writerow((team_id, f"{a:.6f}", f"{b:.6f}", ""))
    writer.writerow(("__mean__", f"{team_stats.mean:.6f}", f"{time_stats.mean:.6f}", f"n={team_stats.n}"))
    writer.writerow(("__stddev__", f"{team_stats.stddev:.6f}", f"{time_stats.stddev:.6f}", "sample (n-1)"))
    if len(teams) < 2:
        writer.writerow(("__correlation__", "", "", "omitted: correlation needs at least two teams"))
    else:
        try:
            r = pearson(team_f, time_f)
        except MetricError as exc:
            writer.writerow(("__correlation__", "", "", f"omitted: {exc}"))
        else:
            writer.writerow(("__correlation__", f"{r:.6f}", "", "pearson"))
    return buf.getvalue()


def render_svg_histogram(series: DailySeries | None, bar_width: int = 3, height: int = 200) -> str:
    """Deterministic SVG 1.1 bar chart, one ``rect`` per day."""
    values = series.values if series is not None else ()
    margin = 40
    width = margin * 2 + max(len(values), 1) * bar_width
    peak = max(values, default=0) or 1
    plot_h = height - 2 * margin
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
        "<style>.none{fill:#9999ff}.red{fill:#ff9999}.orange{fill:#ffcc80}</style>",
        f'<line class="axis" x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line class="axis" x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 10}" text-anchor="middle">Date</text>',
        f'<text x="12" y="{height // 2}" text-anchor="middle" transform="rotate(-90 12 {height // 2})">Commits</text>',
    ]
    for i, value in enumerate(values):
        highlight = highlight_for(series.milestone_marks.get(i))
        bar_h = round(plot_h * value / peak, 3)
        x = margin + i * bar_width
        y = round(height - margin - bar_h, 3)
        out.append(
            f'<rect class="{highlight.lower()}" x="{x}" y="{y}" width="{bar_width}" height="{bar_h}">'
            f"<title>{series.date_at(i).isoformat()}: {value}</title></rect>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
