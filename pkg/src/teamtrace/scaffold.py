"""Capstone template repository: folders, document stubs and issue templates.

Folder names are fixed at ``LAYOUT_VERSION``; renaming any of them bumps the
version.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

LAYOUT_VERSION = 1
ISSUE_TEMPLATE_DIR = ".github/ISSUE_TEMPLATE"
SRS_VARIANTS = {"default": ("SRS",), "meyer": ("SRS-Meyer",), "volere": ("SRS-Volere",)}
SRS_VARIANTS["all"] = SRS_VARIANTS["default"] + SRS_VARIANTS["meyer"] + SRS_VARIANTS["volere"]

# (folder under docs/, document title, section headings)
_DELIVERABLES = (
    ("ProblemStatementAndGoals", "Problem Statement and Goals",
     ("Problem Statement", "Inputs and Outputs", "Stakeholders", "Environment", "Goals", "Stretch Goals")),
    ("DevelopmentPlan", "Development Plan",
     ("Team Meeting Plan", "Team Communication Plan", "Team Member Roles", "Workflow Plan",
      "Proof of Concept Demonstration Plan", "Technology", "Coding Standard", "Project Scheduling")),
    ("HazardAnalysis", "Hazard Analysis",
     ("Introduction", "Scope and Purpose of Hazard Analysis", "System Boundaries and Components",
      "Critical Assumptions", "Failure Mode and Effect Analysis", "Safety and Security Requirements",
      "Roadmap")),
    ("VnVPlan", "Verification and Validation Plan",
     ("General Information", "Plan", "System Tests", "Unit Test Description", "Appendix")),
    ("Design/SoftArchitecture", "Module Guide",
     ("Introduction", "Anticipated and Unlikely Changes", "Module Hierarchy",
      "Connection Between Requirements and Design", "Module Decomposition", "Traceability Matrix",
      "Use Hierarchy Between Modules", "Timeline")),
    ("Design/SoftDetailedDes", "Module Interface Specification",
     ("Introduction", "Notation", "Module Decomposition", "MIS of Each Module")),
    ("VnVReport", "Verification and Validation Report",
     ("Functional Requirements Evaluation", "Nonfunctional Requirements Evaluation", "Comparison to Existing Implementation",
      "Unit Testing", "Changes Due to Testing", "Automated Testing", "Trace to Requirements",
      "Trace to Modules", "Code Coverage Metrics")),
    ("Reflection", "Reflection Report",
     ("Changes in Response to Feedback", "Design Iteration", "Design Decisions",
      "Economic Considerations", "Reflection on Project Management", "Reflection on Capstone")),
)

_SRS_SECTIONS = {
    "SRS": ("Reference Material", "Introduction", "General System Description",
            "Specific System Description", "Requirements", "Likely Changes", "Unlikely Changes",
            "Traceability Matrices and Graphs", "Values of Auxiliary Constants"),
    "SRS-Meyer": ("Goals", "Environment", "System", "Project"),
    "SRS-Volere": ("Project Drivers", "Project Constraints", "Functional Requirements",
                   "Non-functional Requirements", "Project Issues"),
}

_PROJECT_MANAGEMENT = (
    ("docs/projMngmnt/TeamCharter.md", "Team Charter",
     ("External Goals", "Attendance", "Accountability and Teamwork", "Expectations and Consequences")),
    ("docs/projMngmnt/PerformanceReport.md", "Performance Report",
     ("Summary Table", "Explanations", "Team Charter Verdicts")),
    ("docs/projMngmnt/TeamContributions.md", "Team Contributions",
     ("Demonstration Plans", "Commits", "Issues", "Meetings")),
)

_EMPTY_DIRS = ("src", "test", "refs", "docs/Presentation", "docs/Extras")

CHARTER_STUB = """\
# Quantified team-charter rules, evaluated by `teamtrace charter-check`.
rules:
  - rule_id: commit-share
    rule: "commit_share < 0.05 before PoC"
    severity: escalate
    consequence: The team schedules a meeting with the course instructor.
  - rule_id: team-meetings
    rule: "meeting_attendance_rate < 0.80 before PoC"
    meeting_kind: team
    severity: warn
    consequence: The offender picks up the coffee for the next team meeting.
"""

# (file stem, kind, display name, label, agenda headings)
_ISSUE_TEMPLATES = (
    ("team-meeting", "team_meeting", "Team Meeting", "meeting-team",
     ("Date and Time", "Location", "Attendees", "Agenda", "Action Items")),
    ("ta-meeting", "ta_meeting", "TA Meeting", "meeting-ta",
     ("Date and Time", "Attendees", "Questions for the TA", "Feedback Received", "Action Items")),
    ("supervisor-meeting", "supervisor_meeting", "Supervisor Meeting", "meeting-supervisor",
     ("Date and Time", "Attendees", "Progress Since Last Meeting", "Questions for the Supervisor",
      "Action Items")),
    ("lecture-attendance", "lecture_attendance", "Lecture Attendance", "lecture",
     ("Date", "Attendees", "Topics Covered", "Notes")),
)
ISSUE_TEMPLATE_KINDS = tuple(t[1] for t in _ISSUE_TEMPLATES)


class ScaffoldError(OSError):
    """The target directory cannot receive the template."""


@dataclass(frozen=True)
class ManifestFile:
    path: str
    content_id: str


@dataclass(frozen=True)
class IssueTemplate:
    name: str
    kind: str
    path: str


@dataclass
class TemplateManifest:
    directories: list[str] = field(default_factory=list)
    files: list[ManifestFile] = field(default_factory=list)
    issue_templates: list[IssueTemplate] = field(default_factory=list)
    layout_version: int = LAYOUT_VERSION

    def __post_init__(self) -> None:
        kinds = sorted(t.kind for t in self.issue_templates)
        if kinds != sorted(ISSUE_TEMPLATE_KINDS):
            raise ValueError(f"manifest must hold one issue template per kind, got {kinds}")
        paths = self.directories + [f.path for f in self.files]
        for p in paths:
            if PurePosixPath(p).is_absolute() or ".." in PurePosixPath(p).parts or p != _normalize(p):
                raise ValueError(f"manifest path {p!r} is not relative and normalized")
        if len(set(paths)) != len(paths):
            raise ValueError("manifest paths are not unique")

    def to_json(self) -> str:
        return json.dumps(
            {
                "layout_version": self.layout_version,
                "directories": self.directories,
                "files": [{"path": f.path, "content_id": f.content_id} for f in self.files],
                "issue_templates": [
                    {"name": t.name, "kind": t.kind, "path": t.path} for t in self.issue_templates
                ],
            },
            indent=2,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> TemplateManifest:
        data = json.loads(text)
        return cls(
            directories=list(data["directories"]),
            files=[ManifestFile(f["path"], f["content_id"]) for f in data["files"]],
            issue_templates=[IssueTemplate(**t) for t in data["issue_templates"]],
            layout_version=int(data.get("layout_version", LAYOUT_VERSION)),
        )


@dataclass(frozen=True)
class Discrepancy:
    kind: str  # missing, extra or modified
    path: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.path}"


def _normalize(path: str) -> str:
    return PurePosixPath(os.path.normpath(path).replace(os.sep, "/")).as_posix()


def content_id(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _document(title: str, headings: tuple[str, ...]) -> str:
    lines = [f"# {title}", "", "<!-- Replace the comments below with project content. -->", ""]
    for heading in headings:
        lines += [f"## {heading}", "", f"<!-- {heading} -->", ""]
    return "\n".join(lines)


def _issue_template(name: str, label: str, headings: tuple[str, ...]) -> str:
    front = [
        "---",
        f"name: {name}",
        f"about: Agenda and record for a {name.lower()}",
        f"title: '{name}: YYYY-MM-DD'",
        f"labels: {label}",
        "assignees: ''",
        "---",
        "",
    ]
    body = []
    for heading in headings:
        body += [f"## {heading}", "", "- [ ] " if heading == "Action Items" else "", ""]
    return "\n".join(front + body)


def template_contents(srs_variant: str = "default") -> tuple[list[str], dict[str, str], list[IssueTemplate]]:
    """Directories, file contents by path, and issue templates for one variant."""
    if srs_variant not in SRS_VARIANTS:
        raise ValueError(f"srs_variant must be one of {sorted(SRS_VARIANTS)}, got {srs_variant!r}")
    files: dict[str, str] = {}
    directories: set[str] = {"docs", "docs/projMngmnt", ISSUE_TEMPLATE_DIR, ".github"}

    for folder, title, headings in _DELIVERABLES:
        stem = folder.rsplit("/", 1)[-1]
        files[f"docs/{folder}/{stem}.md"] = _document(title, headings)
    for srs in SRS_VARIANTS[srs_variant]:
        files[f"docs/{srs}/{srs}.md"] = _document(
            f"Software Requirements Specification ({srs})", _SRS_SECTIONS[srs]
        )
    for path, title, headings in _PROJECT_MANAGEMENT:
        files[path] = _document(title, headings)
    files["docs/projMngmnt/charter.yaml"] = CHARTER_STUB
    for d in _EMPTY_DIRS:
        files[f"{d}/.gitkeep"] = ""

    templates = []
    for stem, kind, name, label, headings in _ISSUE_TEMPLATES:
        path = f"{ISSUE_TEMPLATE_DIR}/{stem}.md"
        files[path] = _issue_template(name, label, headings)
        templates.append(IssueTemplate(name, kind, path))

    for path in files:
        parent = PurePosixPath(path).parent
        while str(parent) != ".":
            directories.add(str(parent))
            parent = parent.parent
    return sorted(directories), dict(sorted(files.items())), templates


def generate_template(
    target: str | Path, srs_variant: str = "default", overwrite: bool = False
) -> TemplateManifest:
    target = Path(target)
    directories, files, templates = template_contents(srs_variant)

    if target.exists() and not target.is_dir():
        raise ScaffoldError(f"{target}: not a directory")
    probe = target
    while not probe.exists():
        probe = probe.parent
    if not os.access(probe, os.W_OK | os.X_OK):
        raise ScaffoldError(f"{target}: not writable")
    if not overwrite:
        collisions = [p for p in files if (target / p).exists()]
        if collisions:
            raise ScaffoldError(
                f"{target}: {len(collisions)} path(s) already exist: " + ", ".join(collisions)
            )

    for d in directories:
        (target / d).mkdir(parents=True, exist_ok=True)
    manifest_files = []
    for path, text in files.items():
        data = text.encode("utf-8")
        (target / path).write_bytes(data)
        manifest_files.append(ManifestFile(path, content_id(data)))
    return TemplateManifest(directories, manifest_files, templates)


def verify_template(target: str | Path, manifest: TemplateManifest) -> list[Discrepancy]:
    """Compare a tree against a manifest.

    Extra files are looked for only under the manifest's top-level folders,
    so a scaffolded repository may carry its own root files and ``.git``.
    """
    target = Path(target)
    problems = []
    expected = {f.path: f.content_id for f in manifest.files}
    for d in manifest.directories:
        if not (target / d).is_dir():
            problems.append(Discrepancy("missing", d))
    for path, cid in expected.items():
        file = target / path
        if not file.is_file():
            problems.append(Discrepancy("missing", path))
        elif content_id(file.read_bytes()) != cid:
            problems.append(Discrepancy("modified", path))

    roots = sorted({PurePosixPath(p).parts[0] for p in expected})
    for root in roots:
        base = target / root
        if not base.is_dir():
            continue
        for dirpath, dirnames, filenames in os.walk(base):
            dirnames.sort()
            for name in sorted(filenames):
                rel = Path(dirpath, name).relative_to(target).as_posix()
                if rel not in expected:
                    problems.append(Discrepancy("extra", rel))
    return sorted(problems, key=lambda d: (d.path, d.kind))
