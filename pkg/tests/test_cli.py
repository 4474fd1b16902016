import json
import subprocess
import sys

import pytest

from trollscope.cli import main
from trollscope.experiments import ablation_specs
from trollscope.svm import SvmModel


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--seed", "3", "--out", str(root)]) == 0
    return root


def run(corpus_dir, out, *args):
    return main([*args[:1], "--corpus", str(corpus_dir), "--paid-trolls",
                 str(corpus_dir / "paid_trolls.txt"), "--out", str(out), *args[1:]])


def test_synth_label_ablate(corpus_dir, tmp_path, capsys):
    assert run(corpus_dir, tmp_path, "label") == 0
    header = (tmp_path / "labels.csv").read_text().splitlines()[0]
    assert header == "user_id,label,mention_count,total_comments"
    assert run(corpus_dir, tmp_path, "ablate") == 0
    lines = (tmp_path / "ablation.csv").read_text().splitlines()
    assert len(lines) == 1 + len(ablation_specs())
    assert "All Scaled (AS)" in (tmp_path / "ablation.txt").read_text()
    run_meta = json.loads((tmp_path / "ablate.run.json").read_text())
    assert run_meta["command"] == "ablate" and run_meta["seed"] == 42
    assert any(k.endswith("comments.jsonl") for k in run_meta["inputs"])
    assert "All Scaled (AS)" in capsys.readouterr().out


def test_ingest_summary(corpus_dir, tmp_path):
    assert main(["ingest", "--corpus", str(corpus_dir), "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "ingest_summary.json").read_text())
    n_lines = len((corpus_dir / "comments.jsonl").read_text().splitlines())
    assert summary["comments"] == n_lines


def test_train_records_default_hyperparameters(corpus_dir, tmp_path):
    assert run(corpus_dir, tmp_path, "train") == 0
    data = json.loads((tmp_path / "model.json").read_text())
    assert data["C"] == 32.0 and data["kernel"]["gamma"] == 0.0078125
    model = SvmModel.load(tmp_path / "model.json")
    assert model.meta["train_config"]["C"] == 32.0
    assert run(corpus_dir, tmp_path, "evaluate", "--model", str(tmp_path / "model.json")) == 0
    assert (tmp_path / "evaluation.csv").read_text().startswith("n_test,accuracy")


def test_evaluate_fingerprint_mismatch(corpus_dir, tmp_path, capsys):
    assert run(corpus_dir, tmp_path, "train") == 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"features": {"order_ks": [1, 2]}}))
    code = run(corpus_dir, tmp_path, "evaluate", "--model", str(tmp_path / "model.json"),
               "--config", str(cfg))
    assert code == 2
    assert "data error" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main([]) == 1
    assert main(["label", "--out", str(tmp_path)]) == 1  # no corpus
    assert main(["label", "--min-mentions", "many"]) == 1
    assert main(["evaluate", "--corpus", str(tmp_path), "--out", str(tmp_path)]) == 1


def test_data_errors(tmp_path, capsys):
    assert main(["ingest", "--corpus", str(tmp_path / "missing"), "--out", str(tmp_path)]) == 2
    (tmp_path / "publications.jsonl").write_text("{bad\n")
    (tmp_path / "comments.jsonl").write_text("")
    (tmp_path / "users.jsonl").write_text("")
    assert main(["ingest", "--corpus", str(tmp_path), "--out", str(tmp_path / "o")]) == 2
    assert "publications.jsonl:1" in capsys.readouterr().err


def test_config_file_and_env(corpus_dir, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"min_mentions": 9, "seed": 5}))
    monkeypatch.setenv("TROLLSCOPE_CONFIG", str(cfg))
    out = tmp_path / "env"
    assert run(corpus_dir, out, "label") == 0
    meta = json.loads((out / "label.run.json").read_text())
    assert meta["config"]["min_mentions"] == 9 and meta["seed"] == 5
    # flags beat the config file
    out2 = tmp_path / "flag"
    assert run(corpus_dir, out2, "label", "--min-mentions", "3") == 0
    assert json.loads((out2 / "label.run.json").read_text())["config"]["min_mentions"] == 3
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(corpus_dir, tmp_path / "bad", "label") == 1


def test_sweep_and_profile(corpus_dir, tmp_path):
    assert run(corpus_dir, tmp_path, "sweep", "--kind", "comments", "--thresholds", "0,100,5000") == 0
    rows = (tmp_path / "sweep_min_comments.csv").read_text().splitlines()
    assert len(rows) == 4 and rows[-1].endswith(",,,,,,,,")
    assert run(corpus_dir, tmp_path, "sweep", "--kind", "mentions", "--mode",
               "cross_validation") == 0
    assert (tmp_path / "sweep_min_mentions_cross_validation.csv").exists()
    assert run(corpus_dir, tmp_path, "profile", "--top-n", "3") == 0
    assert (tmp_path / "profile.csv").read_text().count("\n") == 12


def test_rerun_byte_identical(corpus_dir, tmp_path):
    outputs = {}
    for name in ("a", "b"):
        out = tmp_path / name
        for cmd in ("label", "featurize", "train", "ablate"):
            assert run(corpus_dir, out, cmd) == 0
        outputs[name] = {p.name: p.read_bytes() for p in sorted(out.iterdir())
                         if p.suffix in (".csv", ".tsv")}
    assert outputs["a"] == outputs["b"]
    assert {"labels.csv", "features.csv", "features_manifest.csv", "ablation.csv"} <= set(outputs["a"])


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "trollscope.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "trollscope" in proc.stdout
