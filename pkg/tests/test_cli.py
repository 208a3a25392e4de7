import csv
import json

import numpy as np
import pytest

from ivdag.cli import main
from ivdag.dataio import read_dataset, write_dataset
from ivdag.data import InterventionalDataset
from ivdag.graph import read_adjacency


@pytest.fixture
def simulated(tmp_path):
    cfg = {"topology": {"kind": "ER", "r": 0.4}, "p": 4, "n_k": 60, "n_obs": 300, "seed": 3}
    (tmp_path / "sc.json").write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(tmp_path / "sc.json"), "--out", str(tmp_path / "ds")]) == 0
    return tmp_path


def test_simulate_writes_dataset_truth_and_meta(simulated):
    data = read_dataset(simulated / "ds")
    assert data.p == 4 and len(data) == 5
    assert read_dataset(simulated / "ds" / "observational").n_total == 300
    assert read_adjacency(simulated / "ds" / "truth.tsv").shape == (4, 4)
    meta = json.loads((simulated / "ds" / "meta.json").read_text())
    assert meta["seed"] == 3 and meta["truth"] == "truth.tsv" and len(meta["sigmas"]) == 4


def test_simulate_seed_flag_controls_randomness(simulated):
    d = simulated
    main(["simulate", "--config", str(d / "sc.json"), "--out", str(d / "a"), "--seed", "9"])
    main(["simulate", "--config", str(d / "sc.json"), "--out", str(d / "b"), "--seed", "9"])
    assert (d / "a" / "data.tsv").read_bytes() == (d / "b" / "data.tsv").read_bytes()
    assert (d / "a" / "data.tsv").read_bytes() != (d / "ds" / "data.tsv").read_bytes()


def test_fit_default_lambda_and_sidecar(simulated):
    out = simulated / "W.tsv"
    assert main(["fit", "--data", str(simulated / "ds"), "--method", "dotears", "--out", str(out)]) == 0
    side = json.loads((simulated / "W.tsv.json").read_text())
    assert side["lambda"] == 0.1 and side["status"] == "converged" and side["omega_source"] == "estimated"
    assert read_adjacency(out).shape == (4, 4)


@pytest.mark.parametrize("method", ["notears", "notears-iv", "golem-nv"])
def test_fit_other_methods(simulated, method):
    out = simulated / f"{method}.tsv"
    assert main(["fit", "--data", str(simulated / "ds" / "observational"), "--method", method,
                 "--threshold", "0.3", "--out", str(out)]) == 0


def test_fit_omega_options(simulated, tmp_path):
    ds = str(simulated / "ds")
    assert main(["fit", "--data", ds, "--method", "dotears", "--omega", "identity", "--out", str(tmp_path / "i.tsv")]) == 0
    assert json.loads((tmp_path / "i.tsv.json").read_text())["omega"] == [1.0] * 4
    (tmp_path / "om.tsv").write_text("0.5\t1\t1\t2\n")
    assert main(["fit", "--data", ds, "--method", "dotears", "--omega", str(tmp_path / "om.tsv"),
                 "--out", str(tmp_path / "f.tsv")]) == 0
    assert main(["fit", "--data", ds, "--method", "dotears", "--split-fraction", "0.5",
                 "--out", str(tmp_path / "s.tsv")]) == 0


def test_sortnregress_uses_observational_rows_and_warns(simulated, caplog):
    out = simulated / "s.tsv"
    with caplog.at_level("WARNING"):
        assert main(["fit", "--data", str(simulated / "ds"), "--method", "sortnregress", "--out", str(out)]) == 0
    assert "regime-0" in caplog.text


def test_nonconvergence_exit_code(simulated, monkeypatch):
    import ivdag.cli as cli
    from ivdag.solver import FitConfig

    monkeypatch.setattr(cli, "FitConfig", lambda **kw: FitConfig(max_outer=1, **kw))
    out = simulated / "nc.tsv"
    assert main(["fit", "--data", str(simulated / "ds"), "--method", "notears-iv", "--lambda", "0",
                 "--out", str(out)]) == 3
    assert out.exists()
    assert json.loads((simulated / "nc.tsv.json").read_text())["status"] == "iter_budget"


def test_usage_and_data_errors(simulated, tmp_path):
    assert main(["fit", "--data", str(simulated / "ds"), "--method", "gies", "--out", "x"]) == 1
    assert main([]) == 1
    assert main(["fit", "--data", str(tmp_path / "missing"), "--method", "dotears", "--out", "x"]) == 2
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "data.tsv").write_text("intervention\tv1\n0\tfoo\n")
    assert main(["fit", "--data", str(bad), "--method", "dotears", "--out", str(tmp_path / "x")]) == 2
    partial = InterventionalDataset(2, {0: np.random.default_rng(0).standard_normal((5, 2))})
    write_dataset(partial, tmp_path / "partial")
    assert main(["fit", "--data", str(tmp_path / "partial"), "--method", "dotears", "--out", str(tmp_path / "y")]) == 2
    assert main(["cv", "--data", str(simulated / "ds"), "--method", "sortnregress", "--out", "x"]) == 1


def test_eval_identical_files(simulated):
    truth = simulated / "ds" / "truth.tsv"
    out = simulated / "report.csv"
    assert main(["eval", "--est", str(truth), "--truth", str(truth), "--threshold", "0.3", "--out", str(out)]) == 0
    row = next(csv.DictReader(out.open()))
    assert row["shd"] == "0" and float(row["l1"]) == 0.0


def test_cv_command(simulated, capsys):
    out = simulated / "cv.csv"
    assert main(["cv", "--data", str(simulated / "ds"), "--method", "notears-iv", "--folds", "3",
                 "--lambda-grid", "0.01", "1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["lambda"] for r in rows] == ["0.01", "1.0"] and sum(int(r["best"]) for r in rows) == 1
    assert float(capsys.readouterr().out.strip()) in (0.01, 1.0)


def test_sweep_command_jobs_agree(tmp_path):
    spec = {"kind": "two_node", "w_grid": [0.5], "gamma_grid": [1, 4], "replicates": 2, "n_k": 100,
            "methods": ["dotears", "notears"], "lambda": 0.0, "seed": 1}
    (tmp_path / "s.json").write_text(json.dumps(spec))
    for jobs in ("1", "4"):
        assert main(["sweep", "--spec", str(tmp_path / "s.json"), "--out", str(tmp_path / f"r{jobs}.csv"),
                     "--jobs", jobs]) == 0
    strip = lambda p: [r[:-1] for r in csv.reader(p.open())]
    assert strip(tmp_path / "r1.csv") == strip(tmp_path / "r4.csv")
    assert len(strip(tmp_path / "r1.csv")) == 1 + 2 * 2 * 2


def test_log_level_from_environment(simulated, monkeypatch):
    monkeypatch.setenv("IVDAG_LOG", "not-a-level")
    assert main(["eval", "--est", str(simulated / "ds" / "truth.tsv"), "--truth",
                 str(simulated / "ds" / "truth.tsv"), "--out", str(simulated / "r.csv")]) == 0
