#!/usr/bin/env python3
"""
test.py - command-line front end: corpus commands, baselines, train/parse round trip and agreement
"""

import csv
import io
import json
import sys
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from harness import fixture_dir, log_info, run_suite  # noqa: E402

import cli  # noqa: E402
import fixture_corpus  # noqa: E402

CONFIG = str(Path(__file__).resolve().parent / "config.yaml")
_workdir = {}


def _tmp() -> Path:
    if "dir" not in _workdir:
        _workdir["dir"] = Path(tempfile.mkdtemp(prefix="argstruct-cli-"))
    return _workdir["dir"]


def run_cli(*argv):
    """(exit code, stdout, stderr) of one CLI invocation"""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_stats_to_stdout():
    code, out, _ = run_cli("stats", "--corpus", fixture_dir())
    assert code == 0
    rows = {row[0]: row[1:] for row in _rows(out)}
    assert rows["field"] == ["all", "avg_per_essay", "std"]
    assert rows["essays"][0] == "7"
    assert rows["major_claims"][:2] == ["14", "2.0000"]
    assert rows["attacks"][0] == "7"


def test_validate_and_missing_corpus():
    code, _, err = run_cli("validate", "--corpus", fixture_dir())
    assert code == 0, err
    assert "7 essays valid" in err

    code, _, err = run_cli("stats")
    assert code == 2
    assert "requires --corpus" in err

    code, _, err = run_cli("stats", "--corpus", _tmp() / "missing")
    assert code == 1
    assert "not found" in err

    code, _, _ = run_cli()
    assert code == 2
    code, _, _ = run_cli("no-such-command")
    assert code == 2


def test_split_file():
    out = _tmp() / "split.csv"
    code, _, _ = run_cli("split", "--corpus", fixture_dir(), "--test-share", "0.3", "--seed", "4", "--out", out)
    assert code == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "ID;SET"
    assert len(lines) == 8
    assert sum(line.endswith(";TEST") for line in lines) == 2

    code, _, err = run_cli("split", "--corpus", fixture_dir(), "--test-share", "1.5")
    assert code == 1 and "test share" in err


def test_baseline_rows():
    out = _tmp() / "baseline.csv"
    code, _, err = run_cli("baseline", "--corpus", fixture_dir(), "--split", fixture_dir() / "split.csv",
                           "--task", "classify", "--task", "relations", "--out", out, "--jobs", "1")
    assert code == 0, err
    rows = _rows(out.read_text(encoding="utf-8"))
    assert rows[0] == ["task", "system", "class", "P", "R", "F1"]
    systems = {(r[0], r[1]) for r in rows[1:] if r[2] == "macro"}
    assert systems == {("classify", "heuristic"), ("classify", "majority"),
                       ("relations", "heuristic"), ("relations", "majority")}
    assert "majority label 'Premise'" in err
    assert "majority label 'Not-Linked'" in err


def test_train_skip_and_parse():
    models = _tmp() / "models"
    split = fixture_dir() / "split.csv"
    train = ("train", "--corpus", fixture_dir(), "--split", split, "--models", models,
             "--config", CONFIG, "--jobs", "1")
    code, _, err = run_cli(*train)
    assert code == 0, err
    assert "models saved" in err
    assert (models / "training.checksum").exists()
    assert (models / "identify.json").exists()
    manifest = json.loads((models / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["epochs"] == 2

    code, _, err = run_cli(*train)
    assert code == 0
    assert "Skipping training" in err

    code, _, err = run_cli(*train, "--force-retrain")
    assert code == 0 and "models saved" in err

    essay = fixture_dir() / "essay06.txt"
    out = _tmp() / "essay06.json"
    code, _, err = run_cli("parse", "--models", models, "--essay", essay, "--out", out, "--jobs", "1")
    assert code == 0, err
    parsed = json.loads(out.read_text(encoding="utf-8"))
    assert parsed["essay_id"] == "essay06"
    assert parsed["violations"] == []

    code, stdout, err = run_cli("parse", "--models", models, "--essay", essay, "--jobs", "1")
    assert code == 0, err
    assert all(line.split("\t")[0][0] in "TRA#" for line in stdout.splitlines() if line)


def test_eval_holdout_with_mcnemar():
    out = _tmp() / "eval.csv"
    code, _, err = run_cli("eval", "--corpus", fixture_dir(), "--split", fixture_dir() / "split.csv",
                           "--config", CONFIG, "--gold-components", "--task", "relations",
                           "--system", "both", "--out", out, "--jobs", "1")
    assert code == 0, err
    assert "McNemar" in err
    rows = _rows(out.read_text(encoding="utf-8"))
    macro = [r for r in rows[1:] if r[2] == "macro"]
    assert [(r[0], r[1]) for r in macro] == [("relations", "base"), ("relations", "final")]
    assert all(0.0 <= float(r[5]) <= 1.0 for r in rows[1:])


def test_phi_grid_and_simulation():
    grid = _tmp() / "grid.csv"
    code, _, err = run_cli("eval", "--corpus", fixture_dir(), "--config", CONFIG, "--phi-grid",
                           "--folds", "2", "--out", grid, "--jobs", "1")
    assert code == 0, err
    rows = _rows(grid.read_text(encoding="utf-8"))
    assert rows[0][0] == "preset"
    assert [r[0] for r in rows[1:]] == ["naive", "relation", "claim", "equal", "same", "balanced"]
    assert all(float(r[5]) == 100.0 for r in rows[1:])

    sim = _tmp() / "simulate.csv"
    code, _, err = run_cli("simulate", "--corpus", fixture_dir(), "--config", CONFIG, "--which", "types",
                           "--fractions", "0,1", "--repeats", "1", "--folds", "2", "--out", sim, "--jobs", "1")
    assert code == 0, err
    rows = _rows(sim.read_text(encoding="utf-8"))
    assert rows[0] == ["which", "fraction", "task", "mean_f1"]
    assert [(r[0], r[2]) for r in rows[1:]] == [("types", "classify"), ("types", "relations")] * 2


def test_parse_without_models():
    code, _, err = run_cli("parse", "--models", _tmp() / "nothing", "--essay", fixture_dir() / "essay01.txt")
    assert code == 1
    assert "manifest" in err
    code, _, _ = run_cli("parse")
    assert code == 2


def test_agreement_command():
    corpus = fixture_corpus.write_annotation_sets(_tmp() / "agreement")
    out = _tmp() / "agreement.csv"
    code, _, err = run_cli("agreement", "--corpus", corpus, "--out", out, "--jobs", "1")
    assert code == 0, err
    rows = _rows(out.read_text(encoding="utf-8"))
    assert rows[0] == ["metric", "category", "value"]
    metrics = {r[0] for r in rows[1:]}
    assert {"observed", "fleiss_kappa", "alpha_u", "pairwise_f1"} <= metrics
    pairwise = {r[1] for r in rows[1:] if r[0] == "pairwise_f1"}
    assert pairwise == {"identify", "classify", "relations", "stance"}

    code, _, err = run_cli("agreement", "--corpus", fixture_dir())
    assert code == 1 and "two or more annotators" in err


def main():
    log_info("Starting cli test")
    return run_suite("cli_test", globals())


if __name__ == '__main__':
    sys.exit(0 if main() else 1)
