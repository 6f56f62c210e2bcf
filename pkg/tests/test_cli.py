"""Command line: config loading, subcommands, artifacts, exit codes."""

import csv
import json
import math

import numpy as np
import pytest

from qsopt import cli
from qsopt.circuit import emit_file, ghz
from qsopt.cli import ConfigError, load_run_config, main


def write_config(tmp_path, **overrides):
    cfg = {
        "episodes": 2,
        "seed": 0,
        "env": {"n_qubits": 2, "max_gates": 8, "max_steps_per_episode": 5,
                "shots": 0, "backend": "statevector"},
        "agent": {"memory_size": 32, "batch_size": 4},
        "output_dir": "out",
    }
    cfg.update(overrides)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


# --- config loading -------------------------------------------------------

def test_load_config_defaults(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"env": {"n_qubits": 3, "max_gates": 10}}),
                    encoding="utf-8")
    env_cfg, agent_cfg, initials, episodes, seed, out_dir = load_run_config(path)
    assert env_cfg.n_qubits == 3
    assert env_cfg.backend.kind == "mps"
    assert env_cfg.angle_catalog == (math.pi / 4, math.pi / 2)
    assert agent_cfg.gamma == 0.95
    assert episodes == 50 and seed == 0
    assert initials == [ghz(3)]  # default initial circuit
    assert out_dir == tmp_path / "out"


def test_load_config_reads_initial_circuits(tmp_path):
    emit_file(ghz(2), tmp_path / "a.qc")
    emit_file(ghz(2).h(1), tmp_path / "b.qc")
    path = write_config(tmp_path, initial_circuits=["a.qc", "b.qc"])
    _, _, initials, _, _, _ = load_run_config(path)
    assert len(initials) == 2
    assert initials[1].gates[-1].qubits == (1,)


@pytest.mark.parametrize("overrides", [
    {"episodes": 0},
    {"episodes": 20_000},
    {"env": {"n_qubits": 2, "max_gates": 8, "bogus_key": 1}},
    {"agent": {"gamma": 2.0}},
    {"agent": {"unknown": 1}},
    {"weights": {"nope": 0.5}},
    {"noise": {"t1_us": 50.0, "t2_us": 500.0}},
    {"env": {"n_qubits": 2, "max_gates": 8, "backend": "quantum_cloud"}},
    {"initial_circuits": ["missing.qc"]},
])
def test_load_config_rejects_bad_input(tmp_path, overrides):
    path = write_config(tmp_path, **overrides)
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_load_config_rejects_bad_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_load_config_rejects_unparseable_circuit(tmp_path):
    (tmp_path / "bad.qc").write_text("qubits 2\nxyzzy q0\n", encoding="utf-8")
    path = write_config(tmp_path, initial_circuits=["bad.qc"])
    with pytest.raises(ConfigError):
        load_run_config(path)


# --- train ----------------------------------------------------------------

def test_train_writes_all_artifacts(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["train", "--config", str(path)]) == 0
    out = tmp_path / "out"
    for name in ("episodes.csv", "steps.csv", "initial_circuit.qc",
                 "final_circuit.qc", "checkpoint.bin", "summary.txt"):
        assert (out / name).exists(), name
    assert not (out / "partial_run.marker").exists()
    with open(out / "episodes.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert list(rows[0]) == cli.EPISODE_FIELDS
    with open(out / "steps.csv", newline="") as fh:
        srows = list(csv.DictReader(fh))
    assert len(srows) == 2 * 5
    assert list(srows[0]) == cli.STEP_FIELDS
    summary = (out / "summary.txt").read_text()
    assert "objective" in summary and "Qubits" in summary


def _strip_timing(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    drop = rows[0].index("wall_time_s") if "wall_time_s" in rows[0] else None
    if drop is None:
        return rows
    return [r[:drop] + r[drop + 1:] for r in rows]


def test_train_runs_are_reproducible(tmp_path, capsys):
    p1 = write_config(tmp_path, output_dir="run_a")
    main(["train", "--config", str(p1)])
    p2 = write_config(tmp_path, output_dir="run_b")
    main(["train", "--config", str(p2)])
    for name in ("episodes.csv", "steps.csv"):
        a = _strip_timing(tmp_path / "run_a" / name)
        b = _strip_timing(tmp_path / "run_b" / name)
        assert a == b, name
    assert (tmp_path / "run_a" / "final_circuit.qc").read_bytes() == \
        (tmp_path / "run_b" / "final_circuit.qc").read_bytes()


# --- simulate / compare ---------------------------------------------------

def test_simulate_reports_json(tmp_path, capsys):
    cpath = tmp_path / "bell.qc"
    emit_file(ghz(2), cpath)
    code = main(["simulate", "--circuit", str(cpath), "--backend", "mps",
                 "--shots", "400", "--seed", "7"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["backend"] == "mps"
    assert sum(report["counts"].values()) == 400
    assert set(report["counts"]) <= {"00", "11"}
    assert report["bond_entropies"] == pytest.approx([1.0])
    assert report["max_bond"] == 2
    assert report["depth"] == 2 and report["gate_count"] == 2


def test_simulate_statevector_backend(tmp_path, capsys):
    cpath = tmp_path / "bell.qc"
    emit_file(ghz(2), cpath)
    assert main(["simulate", "--circuit", str(cpath),
                 "--backend", "statevector", "--shots", "10"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["backend"] == "statevector"
    assert report["peak_memory_bytes"] == 4 * 16
    assert "max_bond" not in report


def test_simulate_rejects_zero_shots(tmp_path, capsys):
    cpath = tmp_path / "bell.qc"
    emit_file(ghz(2), cpath)
    assert main(["simulate", "--circuit", str(cpath), "--shots", "0"]) == 1


def test_compare_backends_agree(tmp_path, capsys):
    cpath = tmp_path / "c.qc"
    emit_file(ghz(4).rx(1, 0.6).cz(2, 3), cpath)
    assert main(["compare", "--circuit", str(cpath), "--shots", "100"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tv_distance"] < 1e-10
    assert report["mps"]["max_bond"] >= 2
    assert report["statevector"]["peak_memory_bytes"] == 2 ** 4 * 16
    assert report["mps"]["entropy_norm"] == pytest.approx(
        report["statevector"]["entropy_norm"], abs=1e-9)


# --- report ---------------------------------------------------------------

def test_report_builds_curves_and_compositions(tmp_path, capsys):
    path = write_config(tmp_path)
    main(["train", "--config", str(path)])
    capsys.readouterr()
    assert main(["report", "--dir", str(tmp_path / "out")]) == 0
    out = tmp_path / "out"
    for stem in ("reward_curve", "entropy_curve", "depth_curve", "gates_curve"):
        assert (out / f"{stem}.csv").exists()
        svg = (out / f"{stem}.svg").read_text()
        assert svg.startswith("<svg") and "polyline" in svg
    for name in ("composition_before", "composition_after"):
        with open(out / f"{name}.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["gate"] for r in rows] == ["h", "rx", "rz", "cx", "cz", "swap"]
        assert abs(sum(float(r["fraction"]) for r in rows) - 1.0) < 1e-9
        assert (out / f"{name}.svg").exists()


def test_report_requires_run_dir(tmp_path, capsys):
    assert main(["report", "--dir", str(tmp_path / "nowhere")]) == 1


# --- exit codes and environment -------------------------------------------

def test_missing_files_exit_1(tmp_path, capsys):
    assert main(["train", "--config", str(tmp_path / "nope.json")]) == 1
    assert main(["simulate", "--circuit", str(tmp_path / "nope.qc")]) == 1


def test_parse_error_exits_1(tmp_path, capsys):
    cpath = tmp_path / "bad.qc"
    cpath.write_text("qubits 2\nbogus q0\n", encoding="utf-8")
    assert main(["simulate", "--circuit", str(cpath)]) == 1
    assert "error" in capsys.readouterr().err


def test_capacity_error_exits_1(tmp_path, capsys):
    cpath = tmp_path / "wide.qc"
    emit_file(ghz(16), cpath)
    assert main(["simulate", "--circuit", str(cpath),
                 "--backend", "statevector"]) == 1


def test_thread_cap_sets_blas_variables(monkeypatch):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.setenv("QSOPT_THREADS", "2")
    cli._apply_thread_cap()
    assert all(cli.os.environ[v] == "2" for v in
               ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"))


def test_thread_cap_ignores_garbage(monkeypatch, capsys):
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    monkeypatch.setenv("QSOPT_THREADS", "-3")
    cli._apply_thread_cap()
    assert "OMP_NUM_THREADS" not in cli.os.environ
    assert "warning" in capsys.readouterr().err
