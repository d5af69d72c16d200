import json
import os

import pytest

from teamtrace.scaffold import (
    ISSUE_TEMPLATE_DIR,
    ScaffoldError,
    TemplateManifest,
    generate_template,
    template_contents,
    verify_template,
)


def test_generate_then_verify(tmp_path):
    manifest = generate_template(tmp_path / "repo", "all")
    assert verify_template(tmp_path / "repo", manifest) == []
    srs = [d for d in manifest.directories if d.startswith("docs/SRS")]
    assert srs == ["docs/SRS", "docs/SRS-Meyer", "docs/SRS-Volere"]
    assert len(manifest.issue_templates) == 4
    issue_files = sorted(os.listdir(tmp_path / "repo" / ISSUE_TEMPLATE_DIR))
    assert len(issue_files) == 4
    for name in ("src", "test", "refs", "docs/VnVPlan", "docs/HazardAnalysis", "docs/projMngmnt"):
        assert (tmp_path / "repo" / name).is_dir()


@pytest.mark.parametrize("variant, expected", [("default", ["SRS"]), ("meyer", ["SRS-Meyer"]),
                                               ("volere", ["SRS-Volere"])])
def test_single_srs_variant(variant, expected):
    dirs, _, _ = template_contents(variant)
    assert [d.split("/")[1] for d in dirs if d.startswith("docs/SRS")] == expected


def test_unknown_variant():
    with pytest.raises(ValueError):
        template_contents("ieee")


def test_second_run_collides(tmp_path):
    generate_template(tmp_path)
    with pytest.raises(ScaffoldError) as err:
        generate_template(tmp_path)
    assert f"{ISSUE_TEMPLATE_DIR}/team-meeting.md" in str(err.value)
    generate_template(tmp_path, overwrite=True)


def test_missing_extra_modified(tmp_path):
    manifest = generate_template(tmp_path)
    (tmp_path / ISSUE_TEMPLATE_DIR / "ta-meeting.md").unlink()
    problems = verify_template(tmp_path, manifest)
    assert [(p.kind, p.path) for p in problems] == [("missing", f"{ISSUE_TEMPLATE_DIR}/ta-meeting.md")]
    (tmp_path / "docs" / "notes.txt").write_text("stray")
    (tmp_path / "README.md").write_text("root files are the team's own")
    kinds = sorted(p.kind for p in verify_template(tmp_path, manifest))
    assert kinds == ["extra", "missing"]
    (tmp_path / "docs" / "VnVPlan" / "VnVPlan.md").write_text("edited")
    assert ("modified", "docs/VnVPlan/VnVPlan.md") in [(p.kind, p.path) for p in verify_template(tmp_path, manifest)]


def test_deterministic(tmp_path):
    a = generate_template(tmp_path / "a", "all")
    b = generate_template(tmp_path / "b", "all")
    assert a.to_json() == b.to_json()
    for f in a.files:
        assert (tmp_path / "a" / f.path).read_bytes() == (tmp_path / "b" / f.path).read_bytes()


def test_manifest_json_round_trip(tmp_path):
    manifest = generate_template(tmp_path)
    back = TemplateManifest.from_json(manifest.to_json())
    assert back == manifest
    data = json.loads(manifest.to_json())
    assert {t["kind"] for t in data["issue_templates"]} == {
        "team_meeting", "ta_meeting", "supervisor_meeting", "lecture_attendance"}


def test_manifest_invariants():
    with pytest.raises(ValueError, match="issue template"):
        TemplateManifest([], [], [])
    _, _, templates = template_contents()
    with pytest.raises(ValueError, match="relative"):
        TemplateManifest(["/abs"], [], templates)
    with pytest.raises(ValueError, match="unique"):
        TemplateManifest(["docs", "docs"], [], templates)


def test_issue_templates_have_front_matter(tmp_path):
    import yaml

    manifest = generate_template(tmp_path)
    for t in manifest.issue_templates:
        text = (tmp_path / t.path).read_text()
        assert text.startswith("---\n")
        front = yaml.safe_load(text.split("---\n")[1])
        assert front["name"] == t.name and "about" in front


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_not_writable(tmp_path):
    tmp_path.chmod(0o500)
    try:
        with pytest.raises(ScaffoldError, match="not writable"):
            generate_template(tmp_path / "repo")
    finally:
        tmp_path.chmod(0o700)


def test_target_is_a_file(tmp_path):
    (tmp_path / "f").write_text("")
    with pytest.raises(ScaffoldError, match="not a directory"):
        generate_template(tmp_path / "f")
