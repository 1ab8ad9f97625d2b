import csv
import json

import numpy as np
import pytest

from feedbackml.cli import main
from feedbackml.cli.config import load_config, parse_override
from feedbackml.errors import ConfigError
from feedbackml.synthetic import keyword_feedback, write_csv

TINY = {
    "seed": 1,
    "paths": {"input": "feedback.csv", "output_dir": "out"},
    "task": {"name": "emotion"},
    "vocab": {"seq_len": 12},
    "embedding": {"word2vec": {"dim": 8, "epochs": 1}},
    "model": {"arch": "cnn", "cnn": {"conv1_filters": 8, "conv1_kernel": 3, "conv2_filters": 8,
                                     "conv2_kernel": 2, "dense_units": 8}},
    "split": {"mode": "kfold", "k": 3},
    "train": {"max_epochs": 2, "batch_size": 16},
}


@pytest.fixture
def workdir(tmp_path):
    write_csv(keyword_feedback(120, seed=3, doc_len=(4, 8), latin_docs=3, compliments=4), tmp_path / "feedback.csv")
    (tmp_path / "config.json").write_text(json.dumps(TINY), encoding="utf-8")
    return tmp_path


def run(workdir, *args):
    return main([args[0], "--config", str(workdir / "config.json"), "-q", *args[1:]])


def stage(workdir, name):
    (d,) = sorted((workdir / "out").glob(f"{name}-*"))
    return d


# -- config ------------------------------------------------------------------

def test_override_parsing():
    assert parse_override("train.max_epochs=7") == (["train", "max_epochs"], 7)
    assert parse_override("model.arch=cnn") == (["model", "arch"], "cnn")
    assert parse_override("a.b=[1, 2]") == (["a", "b"], [1, 2])
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_config_rejects_unknown_and_bad_values(workdir):
    cfg = workdir / "config.json"
    assert load_config(cfg, ["train.max_epochs=9"])["train"]["max_epochs"] == 9
    with pytest.raises(ConfigError, match="unknown config key 'train.max_epoch'"):
        load_config(cfg, ["train.max_epoch=9"])
    with pytest.raises(ConfigError, match="task.name"):
        load_config(cfg, ["task.name=topic"])
    with pytest.raises(ConfigError, match="paths.embeddings"):
        load_config(cfg, ["embedding.source=load_pretrained"])


# -- exit codes -----------------------------------------------------------------

def test_exit_codes(workdir, capsys):
    assert main(["prepare"]) == 1
    assert run(workdir, "train") == 1  # prerequisite missing
    assert "missing prerequisite" in capsys.readouterr().err
    assert run(workdir, "prepare", "--set", "train.nonsense=1") == 1
    bad = workdir / "bad.csv"
    bad.write_bytes(b"id,text,type,agency\n1,\xff\xfe,request,a\n")
    assert run(workdir, "prepare", "--set", f"paths.input={bad}") == 2
    assert "invalid UTF-8" in capsys.readouterr().err
    assert run(workdir, "prepare", "--set", "task.name=agency", "--set", "task.min_agency_records=5000",
               "--set", "task.max_agency_records=6000") == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_failure_exit_code(workdir):
    assert run(workdir, "prepare") == 0
    assert run(workdir, "embed") == 0
    assert run(workdir, "train", "--set", "train.learning_rate=1e30", "--set", "train.optimizer=sgd") == 3


# -- full pipeline ------------------------------------------------------------------

def test_pipeline_end_to_end(workdir):
    for name in ("prepare", "embed", "train", "evaluate", "report"):
        assert run(workdir, name) == 0, name
    prep = json.loads((stage(workdir, "prepare") / "manifest.json").read_text())
    counts = prep["counts"]
    assert counts["rows_read"] == 127
    assert counts["task_selected"] == 123  # compliments excluded
    assert counts["after_latin_filter"] == 120
    assert prep["classes"] == ["negative", "neutral"]

    emb = stage(workdir, "embed")
    assert (emb / "vectors.vec").is_file() and (emb / "vectors.bin").is_file()

    ev = stage(workdir, "evaluate")
    metrics = json.loads((ev / "metrics.json").read_text())
    assert [f["fold"] for f in metrics["folds"]] == ["fold-1", "fold-2", "fold-3"]
    assert set(metrics["aggregate"]["accuracy"]) == {"mean", "std"}
    rows = list(csv.reader(open(ev / "folds.csv", encoding="utf-8")))
    assert [r[0] for r in rows] == ["fold", "fold-1", "fold-2", "fold-3", "mean", "std"]
    cm = list(csv.reader(open(ev / "confusion.csv", encoding="utf-8")))
    assert sum(int(v) for r in cm[1:] for v in r[1:]) == 120

    rep = list(csv.DictReader(open(stage(workdir, "report") / "distribution.csv", encoding="utf-8")))
    assert {r["dimension"] for r in rep} == {"type", "agency", "class"}

    q = workdir / "q.jsonl"
    q.write_text('{"id": "a", "text": "Маш муу үйлчилгээ"}\n{"id": "b", "text": ""}\n', encoding="utf-8")
    assert run(workdir, "predict", "--input", str(q), "--output", str(workdir / "p.jsonl")) == 0
    preds = [json.loads(line) for line in (workdir / "p.jsonl").read_text().splitlines()]
    assert len(preds) == 1 and preds[0]["id"] == "a"
    assert abs(sum(preds[0]["probabilities"]) - 1) <= 1e-5


def test_prepare_rerun_byte_identical(workdir):
    assert run(workdir, "prepare") == 0
    d = stage(workdir, "prepare")
    before = {p.name: p.read_bytes() for p in d.iterdir() if p.name != "run_info.json"}
    assert run(workdir, "prepare") == 0
    after = {p.name: p.read_bytes() for p in d.iterdir() if p.name != "run_info.json"}
    assert before == after


def test_stage_directories_are_content_addressed(workdir):
    assert run(workdir, "prepare") == 0
    assert run(workdir, "prepare", "--set", "vocab.seq_len=10") == 0
    assert len(list((workdir / "out").glob("prepare-*"))) == 2
    # embed under the second config must not pick up the first prepare output
    assert run(workdir, "embed", "--set", "vocab.seq_len=11") == 1


def test_manifest_hash_mismatch_refused(workdir, capsys):
    assert run(workdir, "prepare") == 0
    m = stage(workdir, "prepare") / "manifest.json"
    data = json.loads(m.read_text())
    data["config_hash"] = "0" * 64
    m.write_text(json.dumps(data))
    assert run(workdir, "embed") == 2
    assert "config hash mismatch" in capsys.readouterr().err


def test_report_shares(tmp_path):
    rows = [{"id": str(i), "text": "сайн байна", "type": "request" if i < 7 else "complaint", "agency": "x"}
            for i in range(10)]
    write_csv(rows, tmp_path / "feedback.csv")
    cfg = dict(TINY, task={"name": "agency", "min_agency_records": 1, "max_agency_records": 100})
    (tmp_path / "config.json").write_text(json.dumps(cfg), encoding="utf-8")
    assert run(tmp_path, "prepare") == 0
    assert run(tmp_path, "report") == 0
    rep = list(csv.DictReader(open(stage(tmp_path, "report") / "distribution.csv", encoding="utf-8")))
    request = next(r for r in rep if r["dimension"] == "type" and r["label"] == "request")
    assert request["count"] == "7" and float(request["share"]) == 0.7 and request["percent"] == "70.00"


def test_agency_range_selection(tmp_path):
    rows = []
    for agency, n in (("a", 3), ("b", 5), ("c", 9)):
        rows += [{"id": f"{agency}{i}", "text": f"өргөдөл {agency} номер", "type": "request", "agency": agency}
                 for i in range(n)]
    write_csv(rows, tmp_path / "feedback.csv")
    cfg = dict(TINY, task={"name": "agency", "min_agency_records": 4, "max_agency_records": 9})
    (tmp_path / "config.json").write_text(json.dumps(cfg), encoding="utf-8")
    assert run(tmp_path, "prepare") == 0
    prep = json.loads((stage(tmp_path, "prepare") / "manifest.json").read_text())
    assert prep["classes"] == ["b", "c"] and prep["counts"]["task_selected"] == 14


def test_pretrained_embeddings(workdir):
    assert run(workdir, "prepare") == 0
    vocab = (stage(workdir, "prepare") / "vocab.txt").read_text(encoding="utf-8").split()[2:]
    rng = np.random.default_rng(0)
    lines = [f"{len(vocab[:20]) + 1} 8"] + [t + " " + " ".join(f"{v:.4f}" for v in rng.normal(size=8))
                                          for t in vocab[:20] + ["zzz"]]
    (workdir / "pre.vec").write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert run(workdir, "embed", "--set", "embedding.source=load_pretrained",
               "--set", f"paths.embeddings={workdir / 'pre.vec'}") == 0
    (d,) = sorted((workdir / "out").glob("embed-*"))
    manifest = json.loads((d / "manifest.json").read_text())
    assert manifest["vectors"] == 20 and manifest["dim"] == 8


def test_embedding_trainability_follows_source(workdir):
    assert run(workdir, "prepare") == 0
    vocab = (stage(workdir, "prepare") / "vocab.txt").read_text(encoding="utf-8").split()[2:]
    rng = np.random.default_rng(0)
    lines = [f"{len(vocab)} 8"] + [t + " " + " ".join(f"{v:.4f}" for v in rng.normal(size=8)) for t in vocab]
    (workdir / "pre.vec").write_text("\n".join(lines) + "\n", encoding="utf-8")
    pre = ["--set", "embedding.source=load_pretrained", "--set", f"paths.embeddings={workdir / 'pre.vec'}"]
    assert run(workdir, "embed", *pre) == 0
    assert run(workdir, "train", *pre) == 0
    assert run(workdir, "embed") == 0
    assert run(workdir, "train") == 0
    flags = sorted(json.loads((d / "manifest.json").read_text())["model_config"]["embedding_trainable"]
                   for d in (workdir / "out").glob("train-*"))
    assert flags == [False, True]
