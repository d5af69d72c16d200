import csv
import datetime as dt
import io
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from teamtrace.charter import TeamData, parse_charter
from teamtrace.config import DateRange, load_course_config
from teamtrace.ingest import parse_commit_log, parse_events, resolve_identities
from teamtrace.metrics import DailySeries, unfairness
from teamtrace.report import (
    build_performance_report,
    fairness_chart_export,
    histogram_export,
    parse_histogram_csv,
    render_markdown,
    render_svg_histogram,
)

SVG_NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def free_rider():
    base = FIXTURES / "charter"
    config = load_course_config(base / "course.yaml")
    text = (base / "free-rider.log").read_text()
    team = TeamData(
        config,
        resolve_identities(parse_commit_log(text), config),
        parse_events((base / "free-rider.jsonl").read_text()),
    )
    return team, text, parse_charter(base / "charter.yaml", config)


def recount(log_text, config, window):
    """Brute-force per-member recount straight from the raw export."""
    owner = {a.casefold(): m.member_id for m in config.members for a in m.email_aliases}
    counts = dict.fromkeys(config.member_ids, 0)
    for chunk in log_text.split("\x1e"):
        if not chunk.strip():
            continue
        sha, _, email, stamp, parents, _, body = chunk.lstrip("\n").split("\x1f")
        if len(parents.split()) > 1:
            continue
        day = dt.datetime.fromisoformat(stamp).astimezone(config.tzinfo).date()
        if not window.start <= day <= window.end:
            continue
        emails = [email] + [line.split("<")[1].rstrip(">") for line in body.splitlines()
                            if line.lower().startswith("co-authored-by:")]
        for m in {owner[e.casefold()] for e in emails if e.casefold() in owner}:
            counts[m] += 1
    return counts


def test_poc_window_rows_match_recount(free_rider):
    team, text, rules = free_rider
    window = DateRange(team.config.course_start, team.config.milestone("PoC").date)
    report = build_performance_report(team, window, rules)
    assert {r.member_id: r.commits for r in report.rows} == recount(text, team.config, window)
    assert abs(sum(r.commit_share for r in report.rows) - 1) <= 1e-9
    assert [r.member_id for r in report.rows] == team.config.member_ids
    row3 = report.rows[2]
    assert row3.meetings_attended_by_kind["team"] == 3 and report.meetings_held_by_kind["team"] == 5
    assert len(report.verdicts) == 6


def test_full_window_time_spread_matches_recount(free_rider):
    team, text, _ = free_rider
    report = build_performance_report(team)
    due = set(team.config.due_dates())
    near = {d - dt.timedelta(days=k) for d in due for k in range(3)}
    total = t0 = t2 = 0
    for chunk in filter(str.strip, text.split("\x1e")):
        _, _, _, stamp, parents, _, _ = chunk.lstrip("\n").split("\x1f")
        if len(parents.split()) > 1:
            continue
        day = dt.datetime.fromisoformat(stamp).astimezone(team.config.tzinfo).date()
        total += 1
        t0 += day in due
        t2 += day in near
    s = report.time_spread
    assert (s.total_commits, s.t0_commits, s.t2_t0_commits) == (total, t0, t2)
    assert s.total_days == len(team.config.period)


def test_empty_history(roster_config):
    report = build_performance_report(TeamData(roster_config))
    assert all(r.commits == 0 and r.commit_share == 0 for r in report.rows)
    assert report.team_fairness.degenerate and report.time_fairness.degenerate
    assert report.time_spread.degenerate


def test_explanations_and_markdown(free_rider):
    team, _, rules = free_rider
    report = build_performance_report(team, rules=rules, explanations={"m3": "work on unmerged branch"})
    md = render_markdown(report)
    assert "work on unmerged branch" in md
    assert "<!-- report-format: 1 -->" in md
    assert md == render_markdown(build_performance_report(team, rules=rules,
                                                          explanations={"m3": "work on unmerged branch"}))
    assert "generated" not in md and "generated: X" in render_markdown(report, "X")
    assert report.to_dict()["rows"][2]["explanation"] == "work on unmerged branch"


def test_window_outside_period(roster_config):
    with pytest.raises(ValueError):
        build_performance_report(TeamData(roster_config), DateRange(dt.date(2023, 8, 1), dt.date(2023, 9, 5)))


def test_histogram_three_days():
    text = histogram_export(DailySeries(dt.date(2023, 1, 1), (1, 0, 4), {1: "due_date"}))
    assert text == "Date,Commits,Highlight\n2023-01-01,1,None\n2023-01-02,0,Red\n2023-01-03,4,None\n"


def test_histogram_schema_and_orange():
    series = DailySeries(dt.date(2022, 9, 1), tuple(range(243)), {10: "due_date", 20: "presentation"})
    rows = list(csv.DictReader(io.StringIO(histogram_export(series))))
    assert list(rows[0]) == ["Date", "Commits", "Highlight"]
    assert len(rows) == 243 and rows[-1]["Date"] == "2023-05-01"
    assert {r["Highlight"] for r in rows} == {"None", "Red", "Orange"}
    assert rows[20]["Highlight"] == "Orange"


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 500), min_size=1, max_size=100), st.data())
def test_histogram_round_trip(values, data):
    idx = data.draw(st.sets(st.integers(0, len(values) - 1)))
    marks = {i: data.draw(st.sampled_from(["due_date", "presentation"])) for i in sorted(idx)}
    series = DailySeries(dt.date(2024, 2, 20), tuple(values), marks)
    back = parse_histogram_csv(histogram_export(series))
    assert back.values == series.values and back.milestone_marks == marks and back.start_date == series.start_date


def test_fairness_chart_sorted_with_summary():
    per_team = [
        {"team_id": "b", "team_fairness": 0.7, "time_fairness": 0.1},
        {"team_id": "a", "team_fairness": unfairness([10, 5, 5]), "time_fairness": 0.2},
        {"team_id": "c", "team_fairness": 0.5, "time_fairness": 0.3},
    ]
    rows = list(csv.reader(io.StringIO(fairness_chart_export(per_team))))
    assert rows[0] == ["team_id", "team_fairness", "time_fairness", "note"]
    assert [r[0] for r in rows[1:4]] == ["c", "b", "a"]
    assert [r[0] for r in rows[4:]] == ["__mean__", "__stddev__", "__correlation__"]
    assert rows[4][1] == "0.650000"
    assert fairness_chart_export(per_team) == fairness_chart_export(list(reversed(per_team)))


def test_fairness_chart_single_team():
    rows = list(csv.reader(io.StringIO(
        fairness_chart_export([{"team_id": "t", "team_fairness": 0.5, "time_fairness": 0.1}])
    )))
    assert rows[-1][0] == "__correlation__" and rows[-1][1] == "" and "omitted" in rows[-1][3]
    with pytest.raises(ValueError):
        fairness_chart_export([])


def test_svg():
    empty = ET.fromstring(render_svg_histogram(DailySeries(dt.date(2023, 1, 1), ())))
    assert empty.findall(f"{SVG_NS}rect") == [] and len(empty.findall(f"{SVG_NS}line")) == 2
    series = DailySeries(dt.date(2023, 1, 1), (1, 0, 3), {0: "due_date", 2: "presentation"})
    text = render_svg_histogram(series)
    rects = ET.fromstring(text).findall(f"{SVG_NS}rect")
    assert [r.get("class") for r in rects] == ["red", "none", "orange"]
    assert text == render_svg_histogram(series)
