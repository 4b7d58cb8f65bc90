import json
import shutil

import pytest

from opspam.cli import bundled_config, main

STAGES = [["ingest"], ["cluster"], ["sieve"], ["featurize"], ["train"], ["eval", "indomain"], ["eval", "cross"],
          ["eval", "curve"], ["eval", "reviewer"], ["report"]]
EXPECTED = [
    "corpus/reviews.jsonl", "corpus/products.jsonl", "corpus/tasks.jsonl",
    "cluster/deceptive_reviewers.txt", "cluster/assignment.tsv", "cluster/em_trace.csv",
    "cluster/graph_edges.txt", "cluster/graph_nodes.tsv",
    "sieve/labeled.jsonl", "sieve/stats.txt", "sieve/stats.csv",
    "features/feature_space.txt", "features/vectors.txt", "model/model.txt",
    "reports/indomain.txt", "reports/indomain.csv", "reports/indomain.json",
    "reports/cross.txt", "reports/curve.csv", "reports/reviewer.json", "reports/summary.txt",
]


def run_pipeline(out, config=None, extra=()):
    for stage in STAGES:
        code = main([*stage, "--config", str(config or bundled_config()), "--out", str(out), *extra])
        assert code == 0, stage


def snapshot(out):
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "out"
    run_pipeline(out)
    return out


def test_full_pipeline_writes_everything(fixture_run):
    for rel in EXPECTED:
        assert (fixture_run / rel).is_file(), rel
    stages = sorted(p.stem for p in (fixture_run / "manifests").glob("*.json"))
    assert stages == ["cluster", "eval-cross", "eval-curve", "eval-indomain", "eval-reviewer", "featurize",
                      "ingest", "report", "sieve", "train"]


def test_manifests_trace_outputs(fixture_run):
    import hashlib

    m = json.loads((fixture_run / "manifests" / "train.json").read_text())
    assert m["seed"] == 7 and m["config"]["seed"] == 7
    assert set(m["inputs"]) == {"features/feature_space.txt", "features/vectors.txt"}
    digest = hashlib.sha256((fixture_run / "model/model.txt").read_bytes()).hexdigest()
    assert m["outputs"] == {"model/model.txt": digest}
    ingest = json.loads((fixture_run / "manifests" / "ingest.json").read_text())
    assert ingest["counts"]["reviews"] == 54
    assert "reviews.jsonl" in ingest["inputs"]


def test_cluster_recovers_unseeded_collaborator(fixture_run):
    flagged = (fixture_run / "cluster/deceptive_reviewers.txt").read_text().split()
    assert flagged == ["dr1", "dr2", "dr3", "dr4", "dr5"]
    sieve = json.loads((fixture_run / "manifests" / "sieve.json").read_text())
    assert sieve["labels"] == {"authentic": 39, "deceptive": 13, "excluded": 2}


def test_rerun_is_byte_identical(fixture_run, tmp_path):
    out = tmp_path / "again"
    run_pipeline(out)
    assert snapshot(out) == snapshot(fixture_run)
    # rerunning in place changes nothing either
    before = snapshot(out)
    run_pipeline(out)
    assert snapshot(out) == before


def test_train_before_featurize(tmp_path, capsys):
    out = tmp_path / "o"
    for stage in (["ingest"], ["cluster"], ["sieve"]):
        assert main([*stage, "--config", str(bundled_config()), "--out", str(out)]) == 0
    assert main(["train", "--config", str(bundled_config()), "--out", str(out)]) == 2
    assert "missing feature manifest" in capsys.readouterr().err


def test_eval_before_sieve(tmp_path, capsys):
    assert main(["eval", "cross", "--config", str(bundled_config()), "--out", str(tmp_path)]) == 2
    assert "missing labeled corpus" in capsys.readouterr().err
    assert main(["report", "--config", str(bundled_config()), "--out", str(tmp_path)]) == 2


def test_config_errors_listed_together(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"paths": {"reviews": "missing.jsonl"}, "features": {"families": ["bogus"]},
                               "classifier": {"C": -1}, "sampling": {"ratio": 0}}))
    assert main(["ingest", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    for needle in ("seed: required", "paths.products: required", "unknown family 'bogus'",
                   "file not found: missing.jsonl", "classifier.C", "sampling.ratio"):
        assert needle in err
    assert not (tmp_path / "o").exists()


def test_bad_json_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("{oops")
    assert main(["ingest", "--config", str(cfg)]) == 2
    assert main(["ingest", "--config", str(tmp_path / "none.json")]) == 2


def test_seed_override(tmp_path):
    src = bundled_config().parent
    work = tmp_path / "fx"
    shutil.copytree(src, work)
    for name in ("lexicon.tsv", "ad_phrases.txt"):
        shutil.copy(src.parent / name, tmp_path / name)
    out = tmp_path / "o"
    assert main(["ingest", "--config", str(work / "config.json"), "--out", str(out), "--seed", "11"]) == 0
    m = json.loads((out / "manifests" / "ingest.json").read_text())
    assert m["seed"] == 11


def test_bad_input_record_exit_1(tmp_path, capsys):
    src = bundled_config().parent
    work = tmp_path / "fx"
    shutil.copytree(src, work)
    for name in ("lexicon.tsv", "ad_phrases.txt"):
        shutil.copy(src.parent / name, tmp_path / name)
    with open(work / "reviews.jsonl", "a") as fh:
        fh.write("{broken\n")
    assert main(["ingest", "--config", str(work / "config.json"), "--out", str(tmp_path / "o")]) == 1
    assert "line 55: malformed JSON" in capsys.readouterr().err


def test_complexity_csv(capsys):
    assert main(["complexity", "--config", str(bundled_config())]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("review_id,W,S,C,DC,T,CP,VP,MLS")
    assert len(lines) == 55
