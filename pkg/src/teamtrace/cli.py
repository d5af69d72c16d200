"""Command-line entry point.

Exit codes: 0 success, 1 input or usage error, 2 a charter rule with
severity ``escalate`` was triggered.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from teamtrace.charter import (
    CharterError,
    TeamData,
    escalated,
    evaluate_rules,
    parse_charter,
    resolve_window,
)
from teamtrace.config import ConfigError, CourseConfig, DateRange, dump_course_config, load_course_config, load_mapping
from teamtrace.ingest import (
    ParseError,
    format_commit_log,
    parse_commit_log,
    parse_events,
    resolve_identities,
    unresolved_emails,
)
from teamtrace.metrics import (
    ContributionMultiset,
    DailySeries,
    MetricError,
    daily_commit_series,
    jain_index,
    member_commit_counts,
    time_fairness,
    time_spread_summary,
    unfairness,
    work_event_counts,
)
from teamtrace.report import (
    build_performance_report,
    fairness_chart_export,
    histogram_export,
    render_markdown,
    render_svg_histogram,
    time_spread_table,
    verdict_table,
)
from teamtrace.scaffold import SRS_VARIANTS, ScaffoldError, TemplateManifest, generate_template, verify_template
from teamtrace.simulate import load_cohort_spec, simulate_cohort, team_config

EXIT_OK, EXIT_INPUT, EXIT_ESCALATE = 0, 1, 2

COMMIT_SUFFIXES = (".log", ".txt")
EVENT_SUFFIXES = (".jsonl", ".ndjson")
CONFIG_NAMES = ("config.yaml", "config.yml", "course.yaml", "course.yml", "config.json")


class InputError(Exception):
    """Bad path, unsupported format or unparseable input."""


def _checked(path: str | Path, suffixes: Sequence[str], what: str) -> Path:
    path = Path(path)
    if path.suffix.lower() not in suffixes:
        raise InputError(f"{path}: {what} must have extension {' or '.join(suffixes)}")
    if not path.is_file():
        raise InputError(f"{path}: {what} not found")
    return path


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _load_team(commits: str | Path, config: str | Path, events: str | Path | None, include_merges: bool) -> TeamData:
    config_path = Path(config)
    if not config_path.is_file():
        raise InputError(f"{config_path}: config file not found")
    course = load_course_config(config_path)
    commit_path = _checked(commits, COMMIT_SUFFIXES, "commit log")
    records = parse_commit_log(_read(commit_path))
    event_list = []
    if events is not None:
        event_list = parse_events(_read(_checked(events, EVENT_SUFFIXES, "event file")))
    return TeamData(course, resolve_identities(records, course), event_list, include_merges)


def parse_window(text: str | None, config: CourseConfig) -> DateRange | None:
    """``full``, a milestone name (course start to that milestone), or ``FROM:TO``."""
    if text is None or text.casefold() == "full":
        return None
    if ":" in text:
        start, end = text.split(":", 1)
    else:
        start, end = "course_start", text
    return resolve_window((start, end), config, "--window")


def _write_outputs(outdir: Path, files: dict[str, str]) -> None:
    """Write every file or none: contents are staged next to their targets first."""
    staged: list[tuple[Path, Path]] = []
    try:
        for rel, text in files.items():
            target = outdir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            tmp = target.with_name(f".{target.name}.partial")
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, target))
    except OSError:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, target in staged:
        os.replace(tmp, target)


def _stamp(reproducible: bool) -> str | None:
    if reproducible:
        return None
    return dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat()


def _dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


@dataclass
class TeamAnalysis:
    team_id: str
    summary: dict[str, Any]
    series: DailySeries
    files: dict[str, str]


def analyze_team(team: TeamData, window: DateRange | None, generated_at: str | None, svg: bool) -> TeamAnalysis:
    config = team.config
    period = window or config.period
    counts = member_commit_counts(team.commits, config, period, team.include_merges)
    series = daily_commit_series(team.commits, config, period, team.include_merges)
    spread = time_spread_summary(series)
    team_fair = unfairness(counts)
    time_fair = time_fairness(series)
    try:
        jain: float | None = jain_index(counts)
    except MetricError:
        jain = None

    summary: dict[str, Any] = {}
    if generated_at:
        summary["generated_at"] = generated_at
    summary.update(
        {
            "team_id": config.team_id,
            "window": [period.start.isoformat(), period.end.isoformat()],
            "include_merges": team.include_merges,
            "commits_parsed": len(team.commits),
            "merge_commits": sum(c.record.is_merge for c in team.commits),
            "dropped_outside_window": series.dropped,
            "unresolved_emails": unresolved_emails(team.commits),
            "member_commit_counts": counts.as_dict(),
            "team_fairness": team_fair.to_dict(),
            "jain_index": jain,
            "time_fairness": time_fair.to_dict(),
            "time_spread": spread.to_dict(),
        }
    )
    if team.events:
        summary["work_event_counts"] = work_event_counts(team.events, config, period).as_dict()

    md = [f"# Analysis: {config.team_id}" if config.team_id else "# Analysis", ""]
    if generated_at:
        md += [f"<!-- generated: {generated_at} -->", ""]
    md += [f"Window: {period.start.isoformat()} to {period.end.isoformat()}", "", "## Time spread", ""]
    md += time_spread_table(spread)
    md += ["", "## Commits per member", "", "| Member | Commits |", "|---|---|"]
    md += [f"| {m} | {c} |" for m, c in counts.as_dict().items()]
    md += [
        "",
        f"Team fairness: {team_fair.fairness:.6f}" + (" (degenerate)" if team_fair.degenerate else ""),
        "",
        f"Time fairness: {time_fair.fairness:.6f}" + (" (degenerate)" if time_fair.degenerate else ""),
        "",
    ]
    files = {
        "summary.json": _dump_json(summary),
        "summary.md": "\n".join(md),
        "daily_series.csv": histogram_export(series),
    }
    if svg:
        files["daily_series.svg"] = render_svg_histogram(series)
    return TeamAnalysis(config.team_id, summary, series, files)


def _find_config(team_dir: Path) -> Path:
    for name in CONFIG_NAMES:
        if (team_dir / name).is_file():
            return team_dir / name
    raise InputError(f"{team_dir}: no config file ({', '.join(CONFIG_NAMES)})")


def cmd_analyze(args: argparse.Namespace) -> int:
    generated_at = _stamp(args.reproducible)
    outdir = Path(args.output)
    files: dict[str, str] = {}
    if args.cohort:
        cohort = Path(args.cohort)
        if not cohort.is_dir():
            raise InputError(f"{cohort}: cohort directory not found")
        analyses = []
        for team_dir in sorted(p for p in cohort.iterdir() if p.is_dir()):
            config_path = _find_config(team_dir)
            events = team_dir / "events.jsonl"
            team = _load_team(team_dir / "commits.log", config_path, events if events.is_file() else None, args.include_merges)
            if not team.config.team_id:
                team.config = _with_team_id(team.config, team_dir.name)
            window = parse_window(args.window, team.config)
            analysis = analyze_team(team, window, generated_at, args.svg)
            analyses.append(analysis)
            files.update({f"{team_dir.name}/{k}": v for k, v in analysis.files.items()})
        if not analyses:
            raise InputError(f"{cohort}: no team directories")
        files.update(_cohort_outputs(analyses, generated_at))
    else:
        if not (args.commits and args.config):
            raise InputError("analyze needs either --cohort DIR or both --commits and --config")
        team = _load_team(args.commits, args.config, args.events, args.include_merges)
        window = parse_window(args.window, team.config)
        files = analyze_team(team, window, generated_at, args.svg).files
    _write_outputs(outdir, files)
    return EXIT_OK


def _with_team_id(config: CourseConfig, team_id: str) -> CourseConfig:
    return CourseConfig(
        config.course_start, config.course_end, config.timezone, config.members, config.milestones, team_id
    )


def _cohort_outputs(analyses: list[TeamAnalysis], generated_at: str | None) -> dict[str, str]:
    per_team = [
        {
            "team_id": a.team_id,
            "team_fairness": a.summary["team_fairness"]["fairness"],
            "time_fairness": a.summary["time_fairness"]["fairness"],
        }
        for a in analyses
    ]
    cohort: dict[str, Any] = {}
    if generated_at:
        cohort["generated_at"] = generated_at
    cohort["teams"] = [a.team_id for a in analyses]
    files = {"fairness.csv": fairness_chart_export(per_team)}

    first = analyses[0].series
    if all(a.series.start_date == first.start_date and len(a.series.values) == len(first.values) for a in analyses):
        combined = DailySeries(
            first.start_date,
            tuple(sum(vals) for vals in zip(*(a.series.values for a in analyses))),
            first.milestone_marks,
        )
        spread = time_spread_summary(combined)
        cohort["time_spread"] = spread.to_dict()
        files["daily_series.csv"] = histogram_export(combined)
        md = ["# Cohort summary", ""]
        if generated_at:
            md += [f"<!-- generated: {generated_at} -->", ""]
        md += time_spread_table(spread) + [""]
        files["cohort_summary.md"] = "\n".join(md)
    files["cohort_summary.json"] = _dump_json(cohort)
    return files


def _explanations(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    data = load_mapping(path)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputError(f"{path}: explanations must map member_id to text")
    return {str(k): str(v) for k, v in data.items()}


def cmd_report(args: argparse.Namespace) -> int:
    team = _load_team(args.commits, args.config, args.events, args.include_merges)
    window = parse_window(args.window, team.config)
    rules = parse_charter(args.charter, team.config) if args.charter else []
    report = build_performance_report(team, window, rules, _explanations(args.explanations))
    payload = report.to_dict()
    generated_at = _stamp(args.reproducible)
    if generated_at:
        payload = {"generated_at": generated_at, **payload}
    _write_outputs(
        Path(args.output),
        {"report.md": render_markdown(report, generated_at), "report.json": _dump_json(payload)},
    )
    return EXIT_OK


def cmd_charter_check(args: argparse.Namespace) -> int:
    team = _load_team(args.commits, args.config, args.events, args.include_merges)
    rules = parse_charter(args.charter, team.config)
    verdicts = evaluate_rules(rules, team)
    generated_at = _stamp(args.reproducible)
    payload: dict[str, Any] = {}
    if generated_at:
        payload["generated_at"] = generated_at
    payload["escalated"] = escalated(verdicts)
    payload["verdicts"] = [v.to_dict() for v in verdicts]
    md = ["# Charter verdicts", ""]
    if generated_at:
        md += [f"<!-- generated: {generated_at} -->", ""]
    md += verdict_table(verdicts) + [""]
    _write_outputs(Path(args.output), {"verdicts.md": "\n".join(md), "verdicts.json": _dump_json(payload)})
    for v in verdicts:
        if v.triggered:
            print(f"{v.severity}: {v.rule_id} {v.member_id} observed {v.observed:.6g} {v.comparator} {v.threshold:g}")
    return EXIT_ESCALATE if payload["escalated"] else EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        raise InputError(f"{spec_path}: cohort spec not found")
    spec = load_cohort_spec(spec_path)
    histories = simulate_cohort(spec)
    files = {}
    for team in spec.teams:
        files[f"{team.team_id}/commits.log"] = format_commit_log(histories[team.team_id])
        files[f"{team.team_id}/config.yaml"] = dump_course_config(team_config(spec.config, team))
    _write_outputs(Path(args.output), files)
    return EXIT_OK


def cmd_scaffold(args: argparse.Namespace) -> int:
    if args.verify:
        manifest = TemplateManifest.from_json(Path(args.verify).read_text(encoding="utf-8"))
        problems = verify_template(args.target, manifest)
        for p in problems:
            print(p)
        return EXIT_OK if not problems else EXIT_INPUT
    manifest = generate_template(args.target, args.srs_variant, args.overwrite)
    manifest_path = Path(args.manifest) if args.manifest else Path(args.target) / "template-manifest.json"
    manifest_path.write_text(manifest.to_json(), encoding="utf-8")
    print(f"wrote {len(manifest.files)} files under {args.target}; manifest {manifest_path}")
    return EXIT_OK


def _counts_from_csv(path: Path) -> list[int]:
    rows = [r for r in csv.reader(io.StringIO(_read(path))) if any(c.strip() for c in r)]
    if not rows:
        return []
    column = None
    if not all(_is_int(c) for c in rows[0] if c.strip()):
        header = [c.strip().casefold() for c in rows[0]]
        column = next((header.index(n) for n in ("commits", "count", "counts") if n in header), len(header) - 1)
        rows = rows[1:]
    cells = [r[column] for r in rows] if column is not None else [c for r in rows for c in r if c.strip()]
    return [_to_count(c) for c in cells]


def _is_int(text: str) -> bool:
    try:
        int(text.strip())
    except ValueError:
        return False
    return True


def _to_count(text: str) -> int:
    try:
        value = int(text.strip())
    except ValueError:
        raise InputError(f"{text!r} is not a nonnegative integer count") from None
    if value < 0:
        raise InputError(f"{value} is negative; counts must be nonnegative")
    return value


def cmd_fairness(args: argparse.Namespace) -> int:
    if args.csv:
        counts = _counts_from_csv(_checked(args.csv, (".csv",), "counts file"))
    else:
        counts = [_to_count(c) for c in args.counts]
    if not counts:
        raise InputError("fairness needs at least one count")
    result = unfairness(ContributionMultiset(tuple(counts)))
    print(
        "{"
        f'"n": {len(counts)}, '
        f'"unfairness": {result.unfairness:.6f}, '
        f'"fairness": {result.fairness:.6f}, '
        f'"degenerate": {json.dumps(result.degenerate)}'
        "}"
    )
    return EXIT_OK


def _add_team_inputs(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--commits", required=required, help="canonical commit export (.log/.txt)")
    p.add_argument("--config", required=required, help="course config (.yaml/.yml/.json)")
    p.add_argument("--events", help="work events (.jsonl)")
    p.add_argument("--include-merges", action="store_true", help="count merge commits too")
    p.add_argument("--reproducible", action="store_true", help="omit generation timestamps")
    p.add_argument("-o", "--output", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teamtrace",
        description="Commit-history fairness and time-spread analytics for capstone teams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="time spread, fairness and daily series for a team or cohort")
    _add_team_inputs(p, required=False)
    p.add_argument("--cohort", help="directory of team folders (commits.log, config.yaml, events.jsonl)")
    p.add_argument("--window", help="'full', a milestone name, or FROM:TO")
    p.add_argument("--svg", action="store_true", help="also render the daily histogram as SVG")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="performance report for a window")
    _add_team_inputs(p)
    p.add_argument("--charter", help="charter rules (.yaml)")
    p.add_argument("--explanations", help="member_id to explanation mapping (.yaml)")
    p.add_argument("--window", help="'full', a milestone name, or FROM:TO")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("charter-check", help="evaluate charter rules; exit 2 on escalation")
    _add_team_inputs(p)
    p.add_argument("--charter", required=True, help="charter rules (.yaml)")
    p.set_defaults(func=cmd_charter_check)

    p = sub.add_parser("simulate", help="synthetic cohort commit histories")
    p.add_argument("--spec", required=True, help="cohort spec (.yaml)")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scaffold", help="generate or verify the capstone template repository")
    p.add_argument("target", help="target directory")
    p.add_argument("--srs-variant", choices=sorted(SRS_VARIANTS), default="default")
    p.add_argument("--overwrite", action="store_true")
    p.add_argument("--manifest", help="where to write the manifest JSON")
    p.add_argument("--verify", metavar="MANIFEST", help="verify TARGET against a manifest instead")
    p.set_defaults(func=cmd_scaffold)

    p = sub.add_parser("fairness", help="fairness index of inline counts or a CSV file")
    p.add_argument("counts", nargs="*", help="nonnegative integer counts")
    p.add_argument("--csv", help="CSV file of counts")
    p.set_defaults(func=cmd_fairness)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ConfigError, ParseError, CharterError, MetricError, ScaffoldError, ValueError) as exc:
        print(f"teamtrace: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
