import csv
import json

import pytest

from lgmle.cli import main


def run(args):
    return main([str(a) for a in args])


@pytest.fixture
def base_config(tmp_path):
    def write(extra=None, **overrides):
        doc = {
            "model": {
                "kernel": {"variant": "bradley_terry"},
                "support": [1.0, 3.0],
                "pi_star": [0.4, 0.6],
                "pi": [0.5, 0.5],
            },
            "graph": {"N": 60, "n": 2},
            "sim": {"seed": 11},
        }
        doc.update(overrides)
        if extra:
            doc.update(extra)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        return path

    return write


def test_schedule_verify_ok(capsys):
    assert run(["schedule", "--N", 20, "--n", 3, "--verify-lemma1"]) == 0
    assert "verified" in capsys.readouterr().out


def test_schedule_odd_N_exit_code(capsys):
    assert run(["schedule", "--N", 21, "--n", 3]) == 2
    assert "N must be even" in capsys.readouterr().err


def test_schedule_csv_edge_count(tmp_path):
    out = tmp_path / "g.csv"
    assert run(["schedule", "--N", 20, "--n", 3, "--out", out]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["i", "j", "round"]
    assert len(rows) - 1 == 30


def test_schedule_layers_json(tmp_path):
    layers = tmp_path / "layers.json"
    assert run(["schedule", "--N", 20, "--n", 3, "--layers", layers]) == 0
    doc = json.loads(layers.read_text())
    assert doc["q_max"] == 4 and doc["remainder"] == 1


def test_simulate_outputs(tmp_path, base_config):
    cfg = base_config()
    out = tmp_path / "sim"
    assert run(["simulate", "--config", cfg, "--out", out]) == 0
    assert (out / "dataset.json").exists()
    assert (out / "outcomes.csv").exists()
    resolved = json.loads((out / "simulate_config.json").read_text())
    assert resolved["seed"] == 11
    assert resolved["config"]["graph"]["N"] == 60


def test_loglik_normalizers(tmp_path, base_config):
    cfg = base_config()
    out = tmp_path / "ll"
    norms = tmp_path / "norms.csv"
    assert run(["loglik", "--config", cfg, "--out", out, "--normalizers-out", norms]) == 0
    doc = json.loads((out / "loglik.json").read_text())
    with open(norms) as fh:
        rows = list(csv.reader(fh))[1:]
    total = sum(float(r[1]) for r in rows)
    assert doc["log_likelihood"] == pytest.approx(total, rel=1e-12)
    assert doc["normalized"] == pytest.approx(doc["log_likelihood"] / doc["q_max"])


def test_fit_byte_identical_reruns(tmp_path, base_config):
    cfg = base_config(extra={"fit": {"mode": "em", "max_iters": 50, "tol": 1e-8}})
    out1, out2 = tmp_path / "f1", tmp_path / "f2"
    assert run(["fit", "--config", cfg, "--out", out1]) == 0
    assert run(["fit", "--config", cfg, "--out", out2]) == 0
    assert (out1 / "fit.json").read_bytes() == (out2 / "fit.json").read_bytes()
    doc = json.loads((out1 / "fit.json").read_text())
    assert doc["converged"] is True
    assert doc["config"]["fit"]["mode"] == "em"


def test_risk_truth_candidate_zero(tmp_path, base_config):
    cfg = base_config(
        extra={
            "candidates": [[0.4, 0.6], [0.9, 0.1]],
            "analysis": {"N": 300, "n": 2, "replicates": 4, "base_seed": 5, "min_q_max": 20},
        }
    )
    out = tmp_path / "risk"
    assert run(["risk", "--config", cfg, "--out", out, "--threads", 1]) == 0
    doc = json.loads((out / "risk.json").read_text())
    first = doc["reports"][0]
    assert abs(first["excess_risk"]) <= 3 * first["excess_stderr"] + 1e-15
    with open(out / "risk.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "candidate"
    assert len(rows) == 3


def test_risk_thread_count_does_not_change_results(tmp_path, base_config):
    cfg = base_config(
        extra={
            "candidates": [[0.4, 0.6], [0.9, 0.1]],
            "analysis": {"N": 300, "n": 2, "replicates": 3, "base_seed": 5, "min_q_max": 20},
        }
    )
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run(["risk", "--config", cfg, "--out", out1, "--threads", 1]) == 0
    assert run(["risk", "--config", cfg, "--out", out2, "--threads", 4]) == 0
    assert (out1 / "risk.csv").read_bytes() == (out2 / "risk.csv").read_bytes()


def test_diagnose_bounds_and_exit(tmp_path, base_config, capsys):
    cfg = base_config()
    out = tmp_path / "diag"
    assert run(["diagnose", "--config", cfg, "--out", out]) == 0
    assert "diagnostics clean" in capsys.readouterr().out
    with open(out / "forgetting.csv") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    assert header == ["q", "m", "ell", "gap", "bound"]
    assert data and all(float(r[3]) <= float(r[4]) + 1e-12 for r in data)
    with open(out / "contraction.csv") as fh:
        crows = list(csv.reader(fh))
    assert crows[0] == ["layer", "tv", "step_factor", "cumulative_bound"]


def test_missing_config_key_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"model": {"support": [1.0, 2.0]}}))
    assert run(["loglik", "--config", path]) == 2
    assert "missing key" in capsys.readouterr().err


def test_unknown_kernel_exit_2(tmp_path, base_config, capsys):
    cfg = base_config(model={"kernel": {"variant": "mystery"}, "support": [1.0], "pi_star": [1.0], "pi": [1.0]})
    assert run(["loglik", "--config", cfg]) == 2
    assert "mystery" in capsys.readouterr().err
