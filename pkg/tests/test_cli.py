import csv
import json

import numpy as np

from fmahal import cli, simulate
from fmahal.errors import FdaError

FAST = ["--reps", "2", "--max-components", "3", "--max-neighbors", "3", "--folds", "3"]


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_simulate_writes_outputs_and_manifest(tmp_path):
    out = tmp_path / "s1"
    rc = run("simulate", "--scenario", 1, "--seed", 3, "--methods", "knn:L2,flbcr", "--out", out, *FAST)
    assert rc == 0
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "replications.csv", "results.csv", "table.txt"]
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["seed"] == 3 and man["config"]["reps"] == 2
    assert "version" in man
    rows = list(csv.DictReader(open(out / "results.csv")))
    assert [r["method"] for r in rows] == ["knn:L2", "flbcr"]


def test_manifest_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("simulate", "--scenario", 2, "--seed", 9, "--methods", "centroid:FM_D", "--out", a, *FAST) == 0
    assert run("--config", a / "manifest.json", "--out", b) == 0
    for name in ("results.csv", "replications.csv", "table.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "simulate", "seed": 1, "reps": 5, "methods": "knn:L2"}))
    out = tmp_path / "o"
    assert run("simulate", "--config", cfg, "--reps", 1, "--out", out, "--max-components", 2, "--folds", 2) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["reps"] == 1 and man["config"]["seed"] == 1


def test_unknown_key_is_line_anchored(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "seed": 1,\n  "replications": 3\n}\n')
    assert run("simulate", "--config", cfg) == 1
    assert f"{cfg}:3:" in capsys.readouterr().err


def test_malformed_json_is_line_anchored(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "seed": 1,\n  "reps" 3\n}\n')
    assert run("simulate", "--config", cfg) == 1
    assert f"{cfg}:3:" in capsys.readouterr().err


def test_bad_flag_value_is_config_error():
    assert run("simulate", "--scenario", 7) == 1
    assert run("simulate", "--methods", "knn:DH", "--reps", 1) == 1
    assert run() == 1


def test_classify_single_curve(tmp_path):
    t = np.linspace(0, 1, 25)
    p = tmp_path / "one.csv"
    p.write_text("label," + ",".join(repr(float(x)) for x in t) + "\n1," + ",".join(repr(float(v)) for v in np.sin(t)) + "\n")
    out = tmp_path / "cls"
    rc = run("classify", "--train", p, "--test", p, "--methods", "knn:L2", "--k", 1, "--out", out)
    assert rc == 0
    rows = list(csv.DictReader(open(out / "predictions.csv")))
    assert rows == [{"row": "0", "true_label": "1", "predicted_label": "1"}]


def test_classify_tunes_missing_hyperparameters(tmp_path, data_dir):
    out = tmp_path / "cls"
    rc = run("classify", "--train", data_dir / "train_curves.csv", "--test", data_dir / "test_curves.csv",
             "--methods", "centroid:FM_C", "--max-components", 5, "--folds", 3, "--num-basis", 10, "--out", out)
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert 1 <= man["truncation"] <= 5
    rows = list(csv.DictReader(open(out / "predictions.csv")))
    assert len(rows) == 10
    assert np.mean([r["true_label"] == r["predicted_label"] for r in rows]) >= 0.8


def test_tune_writes_cv_table(tmp_path, data_dir):
    out = tmp_path / "tune"
    rc = run("tune", "--train", data_dir / "train_curves.csv", "--methods", "knn:FM_C,fqbcr",
             "--max-components", 3, "--max-neighbors", 3, "--folds", 3, "--num-basis", 10, "--out", out)
    assert rc == 0
    rows = list(csv.DictReader(open(out / "cv_table.csv")))
    assert len([r for r in rows if r["method"] == "knn:FM_C"]) == 9
    assert len([r for r in rows if r["method"] == "fqbcr"]) == 3
    assert sum(int(r["chosen"]) for r in rows) == 2


def test_report_renders_cells(tmp_path, capsys):
    out = tmp_path / "s"
    assert run("simulate", "--methods", "knn:FM_C", "--seed", 2, "--out", out, *FAST) == 0
    capsys.readouterr()
    assert run("report", "--results", out / "results.csv") == 0
    text = capsys.readouterr().out
    assert "kNN" in text and "FM_C" in text and "(" in text


def test_missing_data_file_is_data_error(tmp_path):
    assert run("tune", "--train", tmp_path / "nope.csv", "--out", tmp_path / "o") == 2
    assert run("report", "--results", tmp_path / "nope.csv") == 2


def test_ragged_input_is_data_error(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("label,0,0.5,1\n1,1,2,3\n2,1,2\n")
    assert run("tune", "--train", p, "--out", tmp_path / "o") == 2
    assert "row 3" in capsys.readouterr().err


def test_partial_outputs_removed_on_failure(tmp_path, monkeypatch):
    def boom(*args, **kw):
        raise FdaError("disk on fire")

    monkeypatch.setattr(cli, "write_replications_csv", boom)
    out = tmp_path / "s"
    assert run("simulate", "--methods", "knn:L2", "--out", out, *FAST) == 3
    assert not (out / "results.csv").exists()


def test_failed_replications_give_numeric_exit(tmp_path, monkeypatch):
    def broken(*args, **kw):
        raise FdaError("always")

    monkeypatch.setattr(simulate, "evaluate_split", broken)
    out = tmp_path / "s"
    assert run("simulate", "--methods", "knn:L2", "--out", out, *FAST) == 3
    assert "2 replication(s) failed" in (out / "table.txt").read_text()


def test_dataset_simulation_from_file(tmp_path, data_dir):
    # five toy Tecator curves cannot support the real protocol's split sizes
    out = tmp_path / "tec"
    rc = run("simulate", "--dataset", "tecator", "--data", data_dir / "tecator_toy.txt", "--out", out, *FAST)
    assert rc == 2
    assert not out.exists() or not any(out.iterdir())
