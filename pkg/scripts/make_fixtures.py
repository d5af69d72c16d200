"""Regenerate the hand-constructed charter fixtures under fixtures/charter/.

Both teams share one roster and period.  Before the PoC demo:

* balanced: m1, m2, m3 each author 10 commits; m3 attends 4 of 5 team
  meetings (rate 0.80, exactly at the threshold, so no trigger).
* free-rider: m1 and m2 author 15 and 14 commits, m3 authors 1 (share
  1/30 < 0.05); m3 attends 3 of 5 team meetings (rate 0.60).

Run from the repository root: ``python scripts/make_fixtures.py``.
"""

from __future__ import annotations

import datetime as dt
import hashlib
from pathlib import Path

from teamtrace.ingest import CommitRecord, WorkEvent, format_commit_log, format_events

ROOT = Path(__file__).resolve().parent.parent / "fixtures" / "charter"
TZ = dt.timezone(dt.timedelta(hours=-5))
EMAILS = {"m1": "alex@example.edu", "m2": "blair@example.edu", "m3": "casey@example.edu"}
LOGINS = {"m1": "alexk", "m2": "blairw", "m3": "caseyp"}

COURSE = """\
team_id: demo-team
course_start: 2023-09-01
course_end: 2023-12-15
timezone: America/Toronto
members:
  - member_id: m1
    display_name: Alex
    email_aliases: [alex@example.edu, alex.k@users.noreply.github.com]
    login_aliases: [alexk]
  - member_id: m2
    display_name: Blair
    email_aliases: [blair@example.edu]
    login_aliases: [blairw]
  - member_id: m3
    display_name: Casey
    email_aliases: [casey@example.edu]
    login_aliases: [caseyp]
milestones:
  - {name: Problem Statement, date: 2023-09-25, kind: due_date}
  - {name: SRS, date: 2023-10-11, kind: due_date}
  - {name: PoC, date: 2023-11-13, kind: presentation}
  - {name: Design, date: 2023-12-06, kind: due_date}
"""

CHARTER = """\
# The two example rules of a quantified team charter.
rules:
  - rule_id: commit-share-before-poc
    rule: "commit_share < 0.05 before PoC"
    severity: escalate
    consequence: The team will schedule a meeting with the course instructor.
  - rule_id: team-meetings-before-poc
    metric: meeting_attendance_rate
    comparator: "<"
    threshold: 0.80
    meeting_kind: team
    window: {from: course_start, to: PoC}
    severity: warn
    consequence: The offender picks up the coffee for the next team meeting.
"""


def _sha(*parts: object) -> str:
    return hashlib.sha1(":".join(map(str, parts)).encode()).hexdigest()


def commits(team: str, per_member: dict[str, int]) -> list[CommitRecord]:
    records = []
    parent: tuple[str, ...] = ()
    n = 0
    for member, count in per_member.items():
        for i in range(count):
            day = dt.date(2023, 9, 4) + dt.timedelta(days=(7 * n) % 60)
            stamp = dt.datetime.combine(day, dt.time(10 + i % 8, 15), tzinfo=TZ)
            sha = _sha(team, member, i)
            records.append(
                CommitRecord(sha, member.upper(), EMAILS[member], stamp, parent, f"Work item {n}", "")
            )
            parent = (sha,)
            n += 1
    # One joint commit credited to m1 and m2 after the PoC, one merge commit,
    # and one commit from an address missing from the roster.
    late = dt.datetime(2023, 11, 20, 14, 0, tzinfo=TZ)
    joint = _sha(team, "joint")
    records.append(
        CommitRecord(
            joint, "Alex", EMAILS["m1"], late, parent, "Pair on parser",
            f"Details.\n\nCo-authored-by: Blair <{EMAILS['m2']}>\n",
        )
    )
    merge = _sha(team, "merge")
    records.append(
        CommitRecord(
            merge, "Blair", EMAILS["m2"], late + dt.timedelta(hours=1), (joint, records[0].sha),
            "Merge pull request #7", "",
        )
    )
    records.append(
        CommitRecord(
            _sha(team, "stray"), "Someone", "someone@else.example", late + dt.timedelta(hours=2),
            (merge,), "Stray commit", "",
        )
    )
    records.sort(key=lambda r: r.timestamp)
    return records


def events(team: str, m3_attends: int) -> list[WorkEvent]:
    out = []
    base = dt.datetime(2023, 9, 8, 16, 0, tzinfo=TZ)
    for k in range(5):
        attendees = ["m1", "m2"] + (["m3"] if k < m3_attends else [])
        out.append(WorkEvent("meeting", "alexk", base + dt.timedelta(weeks=k), f"{team}-mtg-{k}", tuple(attendees), "team"))
    out.append(WorkEvent("meeting", "blairw", base + dt.timedelta(days=3), f"{team}-ta-0", ("m1", "m2", "m3"), "ta"))
    kinds = ("push", "pr_opened", "pr_merged", "issue_comment", "issue_opened", "issue_closed")
    for k, kind in enumerate(kinds * 2):
        actor = list(LOGINS.values())[k % 3]
        out.append(WorkEvent(kind, actor, base + dt.timedelta(days=k, hours=2), f"{team}-ev-{k}"))
    out.append(WorkEvent("push", "ghost-user", base + dt.timedelta(days=20), f"{team}-ev-ghost"))
    out.sort(key=lambda e: e.timestamp)
    return out


def main() -> None:
    ROOT.mkdir(parents=True, exist_ok=True)
    (ROOT / "course.yaml").write_text(COURSE, encoding="utf-8")
    (ROOT / "charter.yaml").write_text(CHARTER, encoding="utf-8")
    teams = {"balanced": ({"m1": 10, "m2": 10, "m3": 10}, 4), "free-rider": ({"m1": 15, "m2": 14, "m3": 1}, 3)}
    for name, (counts, attends) in teams.items():
        (ROOT / f"{name}.log").write_text(format_commit_log(commits(name, counts)), encoding="utf-8")
        (ROOT / f"{name}.jsonl").write_text(format_events(events(name, attends)), encoding="utf-8")


if __name__ == "__main__":
    main()
