import json

import pytest

from mqcompile.circuit_ir import generate_qv_circuit, save
from mqcompile.cli import main, power_law_fit


def test_compile_toffoli(capsys):
    assert main(["compile", "--toffoli"]) == 0
    out = capsys.readouterr().out
    assert "mq_layers=3" in out and "couplings=7" in out


def test_compile_qv_fused(tmp_path, capsys):
    out = tmp_path / "f.qvc"
    assert main(["compile", "--qv", "4", "--seed", "1", "--mode", "fused", "--out", str(out)]) == 0
    assert "mq_layers=9" in capsys.readouterr().out
    rep = json.loads((tmp_path / "f.qvc.report.json").read_text())
    assert rep["mq_layers"] == 9 and rep["ratio"] > 0


def test_compile_is_deterministic(tmp_path):
    a, b = tmp_path / "a.qvc", tmp_path / "b.qvc"
    for p in (a, b):
        assert main(["compile", "--qv", "4", "--seed", "2", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify(tmp_path, capsys):
    src, comp = tmp_path / "s.qvc", tmp_path / "c.qvc"
    save(generate_qv_circuit(4, 3), src)
    assert main(["compile", "--in", str(src), "--mode", "fused", "--out", str(comp)]) == 0
    assert main(["verify", str(src), str(comp)]) == 0
    assert main(["verify", str(src), str(src)]) == 0
    assert "phase_distance=0.000e+00" in capsys.readouterr().out
    doc = json.loads(comp.read_text())
    doc["layers"][0]["couplings"][0][2] += 0.1
    comp.write_text(json.dumps(doc))
    assert main(["verify", str(src), str(comp)]) == 4


def test_report(tmp_path, capsys):
    src, comp = tmp_path / "s.qvc", tmp_path / "c.qvc"
    save(generate_qv_circuit(4, 3), src)
    main(["compile", "--in", str(src), "--mode", "naive3L", "--out", str(comp)])
    capsys.readouterr()
    assert main(["report", str(comp), "--source", str(src)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["mq_layers"] == 12 and abs(info["ratio"] - 1) < 1e-9


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.qvc"
    bad.write_text("{ nope")
    assert main(["compile", "--in", str(bad)]) == 2
    assert main(["compile", "--qv", "4", "--mode", "warp"]) == 2
    assert main(["simulate", "--qv", "40"]) == 2


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "naive3L", "qv": 4}))
    assert main(["compile", "--config", str(cfg)]) == 0
    assert "mq_layers=12" in capsys.readouterr().out
    assert main(["compile", "--config", str(cfg), "--mode", "fused"]) == 0
    assert "mq_layers=9" in capsys.readouterr().out
    cfg.write_text(json.dumps({"colour": 1}))
    assert main(["compile", "--config", str(cfg)]) == 2


def test_simulate_csv(capsys):
    assert main(["simulate", "--qv", "3", "--circuits", "4", "--shots", "30", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2 and lines[0].startswith("n,")


def test_qv_scan_rows(tmp_path):
    out = tmp_path / "scan.csv"
    args = ["qv-scan", "--qv", "3,4", "--noise", "dephase", "--circuits", "20", "--shots", "60", "--format", "csv", "--out", str(out)]
    assert main(args) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "N,compile_mode,noise,p_threshold,dp,shots"
    assert len(rows) == 5


def test_power_law_fit_recovers_exponent():
    ns = [4, 6, 8, 10]
    s, eps = power_law_fit(ns, [1 / (0.3 * n**2) for n in ns])
    assert abs(s - 2) < 1e-12 and abs(eps - 0.3) < 1e-12
