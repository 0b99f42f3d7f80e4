"""Command-line interface: subcommands, file outputs, exit codes."""

import json

import pytest

from tadlora.harness.cli import main
from tadlora.harness.sweep import RESULT_COLUMNS


@pytest.fixture()
def fast_config(tmp_path):
    doc = {
        "m": 4,
        "R": 10,
        "dims": {"d_out": 5, "d_in": 4, "r": 2},
        "n_per_client": 8,
        "T_list": [1, 2],
        "p_list": [0.5],
        "seeds": [0],
        "heterogeneity": {"pattern": "uniform", "k_components": 2, "delta": 0.5},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_writes_outputs(fast_config, tmp_path, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    out = tmp_path / "out"
    assert main(["run", "--config", str(fast_config), "--out", str(out)]) == 0
    assert (out / "trajectory.csv").exists()
    assert (out / "result.csv").read_text().splitlines()[0] == ",".join(RESULT_COLUMNS)
    assert (out / "resolved_config.json").exists()
    assert (out / "tasks.json").exists()


def test_sweep_exit_zero_and_results(fast_config, tmp_path, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(fast_config), "--out", str(out)]) == 0
    text = (out / "results.csv").read_text()
    assert len(text.splitlines()) == 3  # header + 2 cells


def test_sweep_with_jobs_matches_serial(fast_config, tmp_path, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    a, b = tmp_path / "serial", tmp_path / "parallel"
    assert main(["sweep", "--config", str(fast_config), "--out", str(a)]) == 0
    assert main(["sweep", "--config", str(fast_config), "--out", str(b), "--jobs", "2"]) == 0
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()


def test_config_error_exit_code(tmp_path, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"R": 150, "T_list": [7]}))
    assert main(["run", "--config", str(bad)]) == 2


def test_cell_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    doc = {
        "m": 4, "R": 10, "dims": {"d_out": 5, "d_in": 4, "r": 2},
        "n_per_client": 8, "T_list": [1], "p_list": [0.5], "seeds": [0],
        "eta": 50.0,
        "heterogeneity": {"pattern": "uniform", "k_components": 2, "delta": 0.5},
    }
    cfg = tmp_path / "diverge.json"
    cfg.write_text(json.dumps(doc))
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert (tmp_path / "o" / "failures.csv").exists()


def test_env_seed_conflict_is_config_error(fast_config, tmp_path, monkeypatch):
    doc = json.loads(fast_config.read_text())
    doc["root_seed"] = 5
    fast_config.write_text(json.dumps(doc))
    monkeypatch.setenv("TADLORA_SEED", "7")
    assert main(["run", "--config", str(fast_config), "--out", str(tmp_path / "x")]) == 2


def test_env_seed_applies_without_config_value(fast_config, tmp_path, monkeypatch):
    monkeypatch.setenv("TADLORA_SEED", "7")
    out = tmp_path / "seeded"
    assert main(["run", "--config", str(fast_config), "--out", str(out)]) == 0
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["root_seed"] == 7


def test_rho_report_stdout(capsys, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    code = main([
        "rho-report", "--graph", "complete", "--m", "5",
        "--p", "0.0,0.5,1.0", "--samples", "150", "--seed", "3",
    ])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "p,lambda2,rho_sq_hat,stderr,one_minus_rho"
    assert len(lines) == 4
    p0 = lines[1].split(",")
    assert float(p0[4]) == pytest.approx(0.0, abs=1e-12)  # p = 0 row


def test_rho_report_file_output(tmp_path, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    out = tmp_path / "rho.csv"
    code = main([
        "rho-report", "--graph", "ring", "--m", "6", "--p", "1.0",
        "--samples", "120", "--seed", "0", "--out", str(out),
    ])
    assert code == 0
    assert out.read_text().splitlines()[0] == "p,lambda2,rho_sq_hat,stderr,one_minus_rho"


def test_best_t_from_sweep(fast_config, tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    out = tmp_path / "sweep"
    main(["sweep", "--config", str(fast_config), "--out", str(out)])
    capsys.readouterr()  # drop the sweep's progress line
    code = main(["best-t", "--results", str(out / "results.csv"),
                 "--metric", "final_mean_client_loss"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "method,p,best_T_per_input,median,mean"
    assert lines[1].startswith("tad_lora,0.5,")


def test_phi_command(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("TADLORA_SEED", raising=False)
    doc = {"m": 4, "R": 10, "dims": {"d_out": 5, "d_in": 4, "r": 2},
           "n_per_client": 8,
           "heterogeneity": {"pattern": "uniform", "k_components": 2, "delta": 0.5}}
    cfg = tmp_path / "phi.json"
    cfg.write_text(json.dumps(doc))
    code = main(["phi", "--config", str(cfg), "--t-list", "1,3", "--tol", "1e-4"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "T,phi,tol,f_end_T,f_end_1,rounds_T,rounds_1"
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[1]) == 0.0
