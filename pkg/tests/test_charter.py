import datetime as dt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teamtrace.charter import (
    COMPARATORS,
    CharterError,
    TeamData,
    escalated,
    evaluate_rules,
    parse_charter,
    rules_from_mapping,
)
from teamtrace.config import DateRange, load_course_config
from teamtrace.ingest import AttributedCommit, CommitRecord, WorkEvent, parse_commit_log, parse_events, resolve_identities

UTC = dt.timezone.utc


def team_with_counts(config, counts, day=5):
    commits = []
    n = 0
    for member, k in counts.items():
        for _ in range(k):
            rec = CommitRecord(f"{n:040x}", member, "", dt.datetime(2023, 9, day, tzinfo=UTC), ("f" * 40,))
            commits.append(AttributedCommit(rec, (member,)))
            n += 1
    return TeamData(config, commits)


def share_rule(config, comparator="<", threshold=0.05):
    return rules_from_mapping(
        {"rules": [{"rule_id": "r", "metric": "commit_share", "comparator": comparator,
                    "threshold": threshold, "severity": "escalate", "consequence": "see instructor"}]},
        config,
    )


def test_parse_poc_rule_expression(roster_config, tmp_path):
    path = tmp_path / "charter.yaml"
    path.write_text(
        "rules:\n"
        "  - rule: commit_share < 0.05 before PoC\n    severity: escalate\n    consequence: meet instructor\n"
        "  - rule: meeting_attendance_rate < 0.80 before PoC\n    severity: warn\n"
    )
    first, second = parse_charter(path, roster_config)
    assert first.metric == "commit_share" and first.comparator == "<" and first.threshold == 0.05
    assert first.window == DateRange(dt.date(2023, 9, 1), dt.date(2023, 9, 15))
    assert first.severity == "escalate" and first.consequence == "meet instructor"
    assert second.metric == "meeting_attendance_rate" and second.threshold == 0.8 and second.severity == "warn"


def test_empty_charter(roster_config, tmp_path):
    path = tmp_path / "charter.yaml"
    path.write_text("")
    assert parse_charter(path, roster_config) == []
    path.write_text("rules: []\n")
    assert parse_charter(path, roster_config) == []


@pytest.mark.parametrize(
    "rule, needle",
    [
        ({"rule": "commit_share < 0.05 before Rev9"}, "Rev9"),
        ({"metric": "commit_share", "comparator": "<", "threshold": 1.5}, "outside"),
        ({"metric": "commit_count", "comparator": "<", "threshold": -1}, "negative"),
        ({"metric": "lines_of_code", "comparator": "<", "threshold": 1}, "metric"),
        ({"metric": "commit_count", "comparator": "==", "threshold": 1}, "comparator"),
        ({"metric": "commit_count", "comparator": "<", "threshold": 1, "severity": "panic"}, "severity"),
        ({"metric": "commit_count", "comparator": "<", "threshold": 1, "scope": "named_member"}, "member"),
        ({"metric": "commit_count", "comparator": "<", "threshold": 1, "member": "m9"}, "roster"),
        ({"metric": "commit_count", "comparator": "<", "threshold": 1,
          "window": {"from": "Design", "to": "SRS"}}, "after it ends"),
        ({"metric": "commit_count", "comparator": "<", "threshold": 1,
          "window": {"from": "2023-08-01", "to": "SRS"}}, "outside the course period"),
        ({"rule": "commit_share is small"}, "cannot parse"),
    ],
)
def test_charter_errors(roster_config, rule, needle):
    with pytest.raises(CharterError, match=needle):
        rules_from_mapping({"rules": [rule]}, roster_config)


def test_percent_threshold_and_named_member(roster_config):
    (rule,) = rules_from_mapping(
        {"rules": [{"rule": "commit_share <= 5% from SRS to Design", "member": "m2"}]}, roster_config
    )
    assert rule.threshold == 0.05 and rule.comparator == "<=" and rule.scope == "named_member"
    assert rule.window == DateRange(dt.date(2023, 9, 10), dt.date(2023, 9, 25))


def test_boundary_is_strict(roster_config):
    team = team_with_counts(roster_config, {"m1": 1, "m2": 10, "m3": 9})
    verdicts = evaluate_rules(share_rule(roster_config), team)
    m1 = verdicts[0]
    assert m1.member_id == "m1" and m1.observed == 0.05 and not m1.triggered
    assert evaluate_rules(share_rule(roster_config, "<="), team)[0].triggered


def test_zero_share_triggers(roster_config):
    team = team_with_counts(roster_config, {"m1": 0, "m2": 10, "m3": 10})
    verdicts = evaluate_rules(share_rule(roster_config), team)
    assert [(v.member_id, v.triggered, v.observed) for v in verdicts] == [
        ("m1", True, 0.0), ("m2", False, 0.5), ("m3", False, 0.5)
    ]
    assert verdicts[0].consequence == "see instructor" and verdicts[1].consequence == ""
    assert escalated(verdicts)


def test_empty_team_is_degenerate(roster_config):
    verdicts = evaluate_rules(share_rule(roster_config), TeamData(roster_config))
    assert all(v.degenerate and not v.triggered and v.observed == 0 for v in verdicts)


def test_attendance_three_of_five(roster_config):
    meetings = [
        WorkEvent("meeting", "al", dt.datetime(2023, 9, 2 + i, tzinfo=UTC), str(i),
                  ("m1", "m2") + (("m3",) if i < 3 else ()), "team")
        for i in range(5)
    ]
    (rule,) = rules_from_mapping(
        {"rules": [{"rule": "meeting_attendance_rate < 0.80", "meeting_kind": "team", "severity": "warn"}]},
        roster_config,
    )
    verdicts = evaluate_rules([rule], TeamData(roster_config, [], meetings))
    m3 = verdicts[2]
    assert m3.triggered and m3.observed == 0.6
    assert not escalated(verdicts)


def test_count_metrics(roster_config):
    events = [
        WorkEvent("issue_closed", "al", dt.datetime(2023, 9, 3, tzinfo=UTC), "1"),
        WorkEvent("issue_closed", "al", dt.datetime(2023, 9, 4, tzinfo=UTC), "2"),
        WorkEvent("push", "bl", dt.datetime(2023, 9, 4, tzinfo=UTC), "3"),
    ]
    rules = rules_from_mapping(
        {"rules": [
            {"rule_id": "closed", "rule": "issues_closed < 1"},
            {"rule_id": "work", "rule": "work_event_count >= 1"},
            {"rule_id": "count", "rule": "commit_count > 2"},
        ]},
        roster_config,
    )
    team = team_with_counts(roster_config, {"m1": 3, "m2": 2, "m3": 0})
    team.events = events
    got = {(v.rule_id, v.member_id): (v.observed, v.triggered) for v in evaluate_rules(rules, team)}
    assert got[("closed", "m1")] == (2.0, False) and got[("closed", "m2")] == (0.0, True)
    assert got[("work", "m2")] == (1.0, True) and got[("work", "m1")] == (0.0, False)
    assert got[("count", "m1")] == (3.0, True) and got[("count", "m2")] == (2.0, False)


FLIP = {"<": ">=", ">=": "<", ">": "<=", "<=": ">"}


@settings(max_examples=200, deadline=None)
@given(
    st.dictionaries(st.sampled_from(["m1", "m2", "m3"]), st.integers(0, 20), min_size=3),
    st.sampled_from(sorted(COMPARATORS)),
    st.floats(0, 1),
)
def test_negated_comparator_flips_verdicts(roster_config, counts, comparator, threshold):
    team = team_with_counts(roster_config, counts)
    a = evaluate_rules(share_rule(roster_config, comparator, threshold), team)
    b = evaluate_rules(share_rule(roster_config, FLIP[comparator], threshold), team)
    assert len(a) == len(b) == 3
    for x, y in zip(a, b):
        if not x.degenerate:
            assert x.triggered != y.triggered
    assert a == evaluate_rules(share_rule(roster_config, comparator, threshold), team)


def test_verdict_count_is_scope_size(roster_config):
    rules = rules_from_mapping(
        {"rules": [{"rule": "commit_count < 1"}, {"rule": "commit_count < 1", "rule_id": "x", "member": "m3"}]},
        roster_config,
    )
    assert len(evaluate_rules(rules, TeamData(roster_config))) == 3 + 1


def test_fixture_teams(fixtures_dir):
    base = fixtures_dir / "charter"
    config = load_course_config(base / "course.yaml")
    rules = parse_charter(base / "charter.yaml", config)
    outcome = {}
    for name in ("balanced", "free-rider"):
        commits = resolve_identities(parse_commit_log((base / f"{name}.log").read_text()), config)
        events = parse_events((base / f"{name}.jsonl").read_text())
        verdicts = evaluate_rules(rules, TeamData(config, commits, events))
        outcome[name] = {(v.rule_id, v.member_id) for v in verdicts if v.triggered}
    assert outcome["balanced"] == set()
    assert outcome["free-rider"] == {("commit-share-before-poc", "m3"), ("team-meetings-before-poc", "m3")}
