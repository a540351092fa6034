from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from revmine.cli import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, main
from revmine.report import RunConfig, build_report

REPORT_FILES = {
    "features.csv", "stats.json", "g1.dot", "g2.dot",
    "plots/bubble.json", "plots/summary.json", "plots/gender.json", "diagnostics.txt",
}


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    plan = d / "plan.json"
    plan.write_text(json.dumps({"users_per_group": 6}))
    code = main(["simulate", "--plan", str(plan), "--seed", "5", "--out", str(d / "log.jsonl"), "--truth", str(d / "truth.json")])
    assert code == EXIT_OK
    return d


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in root.rglob("*") if p.is_file()}


def test_simulate_outputs(sim):
    assert {"log.jsonl", "profiles.csv", "vectors.txt", "truth.json"} <= {p.name for p in sim.iterdir()}
    truth = json.loads((sim / "truth.json").read_text())
    assert truth["meta"]["config"]["plan"]["seed"] == 5
    assert len(truth["features"]) == 36


def test_stage_by_stage(sim, tmp_path, capsys):
    corpus, sessions, feats = tmp_path / "corpus.bin", tmp_path / "sessions.jsonl", tmp_path / "features.csv"
    assert main(["ingest", "--logs", str(sim / "log.jsonl"), "--profiles", str(sim / "profiles.csv"), "--out", str(corpus)]) == 0
    assert "12 users" in capsys.readouterr().out
    assert main(["sessionize", "--corpus", str(corpus), "--embeddings", str(sim / "vectors.txt"), "--out", str(sessions)]) == 0
    assert main(["features", "--corpus", str(corpus), "--sessions", str(sessions), "--out", str(feats)]) == 0
    assert main(["stats", "--features", str(feats), "--out", str(tmp_path / "stats.json")]) == 0
    assert main(["dfg", "--corpus", str(corpus), "--sessions", str(sessions), "--group", "G2", "--out", str(tmp_path / "g2.dot")]) == 0

    truth = json.loads((sim / "truth.json").read_text())
    manifest = [json.loads(line) for line in sessions.read_text().splitlines()]
    assert len(manifest) == 36 and {m["recipe_ordinal"] for m in manifest} == {1, 2, 3}
    with open(feats, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["num_edits"]) for r in rows] == [f["num_edits"] for f in truth["features"]]
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["meta"]["tool"] == "revmine" and set(stats["recipes"]) == {"1", "2", "3"}
    dot = (tmp_path / "g2.dot").read_text()
    assert 'digraph "G2"' in dot and '"Start" -> "WriteRecipe1"' in dot


def test_report_bundle_and_rerun(sim, tmp_path):
    args = ["report", "--logs", str(sim / "log.jsonl"), "--profiles", str(sim / "profiles.csv"),
            "--embeddings", str(sim / "vectors.txt"), "--out-dir", str(tmp_path / "out")]
    assert main(args) == EXIT_OK
    first = _files(tmp_path / "out")
    assert set(first) == REPORT_FILES
    assert main(args) == EXIT_OK
    assert _files(tmp_path / "out") == first


def test_report_schemas(sim, tmp_path):
    cfg = RunConfig(str(sim / "log.jsonl"), str(sim / "vectors.txt"), str(tmp_path), str(sim / "profiles.csv"))
    files = build_report(cfg)
    stats = json.loads(files["stats.json"])
    summary = json.loads(files["plots/summary.json"])
    assert set(summary["groups"]) == {"G1", "G2"}
    for k, rows in stats["recipes"].items():
        for row in rows:
            assert summary["groups"]["G1"][k][row["feature"]] == row["g1_mean"]
            assert summary["groups"]["G2"][k][row["feature"]] == row["g2_mean"]
    bubble = json.loads(files["plots/bubble.json"])["recipes"]
    for series in bubble.values():
        counts = [b["num_revisions"] for b in series]
        assert counts == sorted(counts, reverse=True)
    gender = json.loads(files["plots/gender.json"])["groups"]
    assert sum(len(v) for v in gender.values()) == 12
    assert files["features.csv"].splitlines()[0].startswith("user_id,group,gender,recipe,")
    assert files["diagnostics.txt"].startswith("# revmine ")


def test_missing_embeddings_is_config_error(sim, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["report", "--logs", str(sim / "log.jsonl"), "--embeddings", str(tmp_path / "nope.txt"), "--out-dir", str(out)])
    assert code == EXIT_CONFIG
    assert "nope.txt" in capsys.readouterr().err
    assert not out.exists()


def test_bad_threshold_and_policy(sim, tmp_path):
    base = ["report", "--logs", str(sim / "log.jsonl"), "--embeddings", str(sim / "vectors.txt"), "--out-dir", str(tmp_path)]
    assert main([*base, "--threshold", "1.5"]) == EXIT_CONFIG
    assert main([*base, "--outlier-min-eff", "-1"]) == EXIT_CONFIG
    assert not any(tmp_path.iterdir())


def test_wrong_dimension_is_stage_failure(sim, tmp_path, capsys):
    code = main(["report", "--logs", str(sim / "log.jsonl"), "--embeddings", str(sim / "vectors.txt"),
                 "--dim", "20", "--out-dir", str(tmp_path / "o")])
    assert code == EXIT_STAGE
    assert "[embedding]" in capsys.readouterr().err


def test_bad_plan_is_config_error(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"min_revisions": 5, "max_revisions": 2}))
    assert main(["simulate", "--plan", str(plan), "--out", str(tmp_path / "l.jsonl"), "--truth", str(tmp_path / "t.json")]) == EXIT_CONFIG


def test_overrides_applied(sim, tmp_path):
    corpus, sessions = tmp_path / "c.bin", tmp_path / "s.jsonl"
    main(["ingest", "--logs", str(sim / "log.jsonl"), "--out", str(corpus)])
    fixes = tmp_path / "fixes.csv"
    fixes.write_text("user_id,op,index\nu001,add,1\n")
    assert main(["sessionize", "--corpus", str(corpus), "--embeddings", str(sim / "vectors.txt"),
                 "--overrides", str(fixes), "--out", str(sessions)]) == 0
    u1 = [json.loads(line) for line in sessions.read_text().splitlines() if '"u001"' in line]
    assert u1[0]["revisions"] == [] and len(u1) == 4
    fixes.write_text("u001,add,999\n")
    assert main(["sessionize", "--corpus", str(corpus), "--embeddings", str(sim / "vectors.txt"),
                 "--overrides", str(fixes), "--out", str(sessions)]) == EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "revmine", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("revmine ")
