import csv
import json
import os
import subprocess
import sys

import pytest

from photon_discrim.cli import main
from photon_discrim.harness import SweepConfig


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_row_count(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["simulate", "--nbar", "0.77", "--n", "1000000", "--seed", "7", "--out", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == 14 and rows[0][0] == "n"


def test_simulate_stdout(capsys):
    assert main(["simulate", "--nbar", "0.4", "--n", "100", "--seed", "1"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 14


def test_missing_config_names_path(tmp_path, capsys):
    missing = tmp_path / "missing.json"
    assert main(["sweep", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_unknown_flag(capsys):
    assert main(["sweep", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_invalid_nbar_is_config_error():
    assert main(["simulate", "--nbar", "-1", "--n", "10"]) == 1


def test_unwritable_output(tmp_path):
    assert main(["simulate", "--nbar", "0.4", "--n", "10", "--out", str(tmp_path / "no" / "h.csv")]) == 2


def _config(tmp_path, **kw):
    cfg = SweepConfig(nbar_list=[0.4], m_list=[10, 20], classifiers=["nb"], n_subsets_per_class=30,
                      repetitions=2, output_dir=str(tmp_path / "out"), **kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    return path


def test_sweep_from_config(tmp_path):
    assert main(["sweep", "--config", str(_config(tmp_path)), "--gnuplot"]) == 0
    rows = _rows(tmp_path / "out" / "accuracy_report.csv")
    assert len(rows) == 3
    assert (tmp_path / "out" / "accuracy_report.gp").exists()


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = _config(tmp_path, master_seed=5)
    assert main(["sweep", "--config", str(cfg)]) == 0
    assert _rows(tmp_path / "out" / "accuracy_report.csv")[1][-1] == "5"
    monkeypatch.setenv("PHOTON_DISCRIM_SEED", "9")
    assert main(["sweep", "--config", str(cfg), "--seed", "3"]) == 0
    assert _rows(tmp_path / "out" / "accuracy_report.csv")[1][-1] == "3"


def test_env_seed_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PHOTON_DISCRIM_SEED", "11")
    main(["simulate", "--nbar", "0.4", "--n", "50"])
    env_out = capsys.readouterr().out
    main(["simulate", "--nbar", "0.4", "--n", "50", "--seed", "11"])
    assert capsys.readouterr().out == env_out
    monkeypatch.setenv("PHOTON_DISCRIM_SEED", "eleven")
    assert main(["simulate", "--nbar", "0.4", "--n", "50"]) == 1


def test_trace_round_trip(tmp_path, capsys):
    out = tmp_path / "t.bin"
    assert main(["trace", "--bins", "500", "--seed", "2", "--out", str(out)]) == 0
    assert "mismatched_bins=0" in capsys.readouterr().out
    assert out.read_bytes()[:4] == b"PTRC"


def test_project(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert main(["project", "--nbar", "0.77", "--m", "60", "--subsets", "20", "--out", str(out)]) == 0
    assert len(_rows(out)) == 41
    assert "centroid distance" in capsys.readouterr().out


@pytest.mark.parametrize("classifier", ["adaline", "nb", "mnn"])
def test_train_then_classify(tmp_path, capsys, classifier):
    model = tmp_path / "model.json"
    counts = tmp_path / "counts.txt"
    counts.write_text("0 1 0 0 2 0 1 0 0 0\n")
    args = ["train", "--classifier", classifier, "--nbar", "0.4", "--m", "10", "--subsets", "40", "--out", str(model)]
    if classifier == "mnn":
        args += ["--epochs", "5"]
    assert main(args) == 0
    capsys.readouterr()
    assert main(["classify", "--model", str(model), "--counts", str(counts)]) == 0
    assert capsys.readouterr().out.split()[0] in ("coherent", "thermal")


def test_classify_bad_counts(tmp_path):
    model = tmp_path / "nb.json"
    model.write_text('{"type": "nb", "nbar": 0.4}')
    counts = tmp_path / "c.txt"
    counts.write_text("1 x 2")
    assert main(["classify", "--model", str(model), "--counts", str(counts)]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "photon_discrim", "--help"], capture_output=True, text=True,
                          env={**os.environ})
    assert proc.returncode == 0 and "sweep" in proc.stdout


def test_default_sweep_cartesian_product(default_sweep):
    path, _ = default_sweep
    rows = _rows(path)
    classifiers = SweepConfig().classifiers
    assert len(rows) - 1 == 4 * 16 * len(classifiers)
