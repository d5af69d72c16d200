"""Parsing of canonical git-log exports and project-event files.

The commit export is produced by::

    git log <default-branch> \\
        --pretty=format:%H%x1f%an%x1f%ae%x1f%aI%x1f%P%x1f%s%x1f%b%x1e

Records end with byte 0x1E; the seven fields inside a record are separated
by byte 0x1F.  ``git log`` puts a newline between records, which the parser
tolerates.
"""

from __future__ import annotations

import datetime as dt
import json
import re
from dataclasses import dataclass, field
from typing import Iterable

from teamtrace.config import CourseConfig

RECORD_SEP = "\x1e"
FIELD_SEP = "\x1f"
FIELD_NAMES = ("sha", "author_name", "author_email", "timestamp", "parents", "subject", "body")
GIT_LOG_FORMAT = "%H%x1f%an%x1f%ae%x1f%aI%x1f%P%x1f%s%x1f%b%x1e"

WORK_EVENT_KINDS = (
    "push",
    "pr_opened",
    "pr_merged",
    "issue_opened",
    "issue_closed",
    "issue_comment",
    "meeting",
)
MEETING_KINDS = ("team", "ta", "supervisor", "lecture")

_SHA_RE = re.compile(r"[0-9a-f]{40}")
_CO_AUTHOR_RE = re.compile(
    r"^[ \t]*co-authored-by[ \t]*:[ \t]*(?P<name>.*?)[ \t]*<(?P<email>[^<>\s]+)>[ \t]*$",
    re.IGNORECASE | re.MULTILINE,
)


class ParseError(ValueError):
    """Malformed commit export or event stream."""


def parse_timestamp(text: str) -> dt.datetime:
    """Parse an ISO-8601 instant carrying an explicit UTC offset."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    value = dt.datetime.fromisoformat(text)
    if value.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    return value


@dataclass(frozen=True)
class CommitRecord:
    sha: str
    author_name: str
    author_email: str
    timestamp: dt.datetime
    parents: tuple[str, ...] = ()
    subject: str = ""
    body: str = ""
    co_author_emails: tuple[str, ...] = ()

    @property
    def parent_count(self) -> int:
        return len(self.parents)

    @property
    def is_merge(self) -> bool:
        return len(self.parents) >= 2


def co_authors_from_body(body: str, author_email: str = "") -> tuple[str, ...]:
    """Co-author emails from ``Co-authored-by`` trailer lines, deduplicated.

    Matching of the trailer key is case-insensitive, as in git.  The
    author's own email is never reported as a co-author.
    """
    seen = {author_email.strip().casefold()} if author_email else set()
    emails = []
    for match in _CO_AUTHOR_RE.finditer(body):
        email = match.group("email").strip()
        key = email.casefold()
        if key in seen:
            continue
        seen.add(key)
        emails.append(email)
    return tuple(emails)


def parse_commit_log(text: str) -> list[CommitRecord]:
    records: list[CommitRecord] = []
    seen: set[str] = set()
    chunks = text.split(RECORD_SEP)
    # Everything after the final separator is trailing whitespace.
    if chunks and not chunks[-1].strip():
        chunks.pop()
    for index, chunk in enumerate(chunks):
        chunk = chunk.lstrip("\r\n")
        fields = chunk.split(FIELD_SEP)
        if len(fields) != len(FIELD_NAMES):
            raise ParseError(
                f"record {index}: field count: expected {len(FIELD_NAMES)} fields, got {len(fields)}"
            )
        sha, name, email, stamp, parents, subject, body = fields
        sha = sha.strip()
        if not _SHA_RE.fullmatch(sha):
            raise ParseError(f"record {index}: sha: {sha!r} is not a 40-character hex string")
        if sha in seen:
            raise ParseError(f"record {index}: sha: duplicate commit {sha}")
        seen.add(sha)
        try:
            timestamp = parse_timestamp(stamp)
        except ValueError as exc:
            raise ParseError(f"record {index}: timestamp: {exc}") from None
        parent_list = tuple(parents.split())
        for parent in parent_list:
            if not _SHA_RE.fullmatch(parent):
                raise ParseError(f"record {index}: parents: {parent!r} is not a commit sha")
        records.append(
            CommitRecord(
                sha=sha,
                author_name=name,
                author_email=email.strip(),
                timestamp=timestamp,
                parents=parent_list,
                subject=subject,
                body=body,
                co_author_emails=co_authors_from_body(body, email),
            )
        )
    return records


def format_commit_log(records: Iterable[CommitRecord]) -> str:
    """Serialize records in the canonical export format (inverse of parsing)."""
    out = []
    for r in records:
        fields = (
            r.sha,
            r.author_name,
            r.author_email,
            r.timestamp.isoformat(),
            " ".join(r.parents),
            r.subject,
            r.body,
        )
        out.append(FIELD_SEP.join(fields) + RECORD_SEP)
    return "\n".join(out)


@dataclass(frozen=True)
class AttributedCommit:
    record: CommitRecord
    credited_members: tuple[str, ...]
    unresolved: tuple[str, ...] = ()


def resolve_identities(
    records: Iterable[CommitRecord], config: CourseConfig
) -> list[AttributedCommit]:
    """Map author and co-author emails onto roster members.

    Every commit emits one credit per distinct resolved member; emails that
    match no alias land in ``unresolved``.
    """
    attributed = []
    for record in records:
        credited: list[str] = []
        unresolved: list[str] = []
        for email in (record.author_email, *record.co_author_emails):
            member = config.member_for_email(email)
            if member is None:
                unresolved.append(email)
            elif member not in credited:
                credited.append(member)
        attributed.append(AttributedCommit(record, tuple(credited), tuple(unresolved)))
    return attributed


def unresolved_emails(commits: Iterable[AttributedCommit]) -> list[str]:
    """Distinct unresolved emails across all commits, sorted case-insensitively."""
    found: dict[str, str] = {}
    for commit in commits:
        for email in commit.unresolved:
            found.setdefault(email.casefold(), email)
    return [found[k] for k in sorted(found)]


@dataclass(frozen=True)
class WorkEvent:
    kind: str
    actor: str
    timestamp: dt.datetime
    id: str
    attendees: tuple[str, ...] = field(default=())
    meeting_kind: str | None = None


def _event_from_json(obj: object, line_no: int) -> WorkEvent:
    if not isinstance(obj, dict):
        raise ParseError(f"line {line_no}: expected a JSON object")
    for key in ("kind", "actor", "timestamp", "id"):
        if key not in obj:
            raise ParseError(f"line {line_no}: missing required field {key!r}")
    kind = obj["kind"]
    if kind not in WORK_EVENT_KINDS:
        raise ParseError(f"line {line_no}: unknown event kind {kind!r}")
    try:
        timestamp = parse_timestamp(str(obj["timestamp"]))
    except ValueError as exc:
        raise ParseError(f"line {line_no}: timestamp: {exc}") from None

    attendees = obj.get("attendees") or []
    meeting_kind = obj.get("meeting_kind")
    if not isinstance(attendees, list) or not all(isinstance(a, str) for a in attendees):
        raise ParseError(f"line {line_no}: attendees must be a list of strings")
    if kind == "meeting":
        if not attendees:
            raise ParseError(f"line {line_no}: meeting event needs a nonempty attendees list")
        if meeting_kind not in MEETING_KINDS:
            raise ParseError(
                f"line {line_no}: meeting_kind {meeting_kind!r} is not one of {MEETING_KINDS}"
            )
    elif attendees or meeting_kind is not None:
        raise ParseError(
            f"line {line_no}: attendees/meeting_kind are only allowed on meeting events"
        )
    return WorkEvent(
        kind=kind,
        actor=str(obj["actor"]),
        timestamp=timestamp,
        id=str(obj["id"]),
        attendees=tuple(dict.fromkeys(attendees)),
        meeting_kind=meeting_kind,
    )


def parse_events(jsonl: str) -> list[WorkEvent]:
    events = []
    for line_no, line in enumerate(jsonl.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {line_no}: malformed JSON: {exc.msg}") from None
        events.append(_event_from_json(obj, line_no))
    return events


def format_events(events: Iterable[WorkEvent]) -> str:
    lines = []
    for e in events:
        obj: dict[str, object] = {
            "kind": e.kind,
            "actor": e.actor,
            "timestamp": e.timestamp.isoformat(),
            "id": e.id,
        }
        if e.kind == "meeting":
            obj["attendees"] = list(e.attendees)
            obj["meeting_kind"] = e.meeting_kind
        lines.append(json.dumps(obj))
    return "".join(line + "\n" for line in lines)
