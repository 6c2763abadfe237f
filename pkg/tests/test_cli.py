import json
import subprocess
import sys

import pytest

from perpetua import cli
from perpetua.errors import ConfigError

E32_LAW = json.dumps(
    {
        "kind": "frame-diagonal",
        "scalars": {"independent": [{"values": [0.5]}, {"values": [2.0]}]},
        "z": [1.0, 0.0],
    }
)
GAUSS_LAW = json.dumps({"kind": "gaussian-entries", "d": 2, "entry_std": 0.3, "z_std": 1.0})


def run_json(capsys, argv):
    code = cli.run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


def test_constant_command(capsys):
    code, rep = run_json(capsys, ["constant", "--matrix", "[[0.5,0],[0,0.25]]"])
    assert code == 0
    res = rep["result"]
    assert res["c0"] is True and res["spectral_radius"] == 0.5
    assert res["multiplicities"] == [1, 1]
    assert max(res["reconstruction_rel_error"]) < 1e-12


def test_constant_boundary_caveat(capsys):
    code, rep = run_json(capsys, ["constant", "--matrix", "[[1,1],[0,1]]"])
    assert code == 0
    assert rep["result"]["c0"] is False and rep["result"]["boundary"] is True
    assert rep["result"]["multiplicities"] == [2]
    assert rep["result"]["caveats"]


def test_gallery_verify_e32(capsys):
    code, rep = run_json(capsys, ["gallery", "verify", "E32", "--T", "200", "--seed", "7", "--threads", "1"])
    assert code == 0
    ver = rep["verification"]
    assert ver["verdicts"]["iii"]["verdict"] == "HOLDS"
    assert ver["ok"] is True


def test_gallery_list(capsys):
    code, rep = run_json(capsys, ["gallery", "list"])
    assert code == 0
    assert [e["id"] for e in rep["entries"]] == ["E31", "E32", "E33", "E34", "R34"]


def test_simulate_with_trace(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    out = tmp_path / "report.json"
    code = cli.run(["simulate", "--law", E32_LAW, "--T", "20", "--R", "2", "--trace", str(trace), "--out", str(out)])
    assert code == 0 and capsys.readouterr().out == ""
    rep = json.loads(out.read_text())
    assert rep["config"]["run"]["T"] == 20
    lines = trace.read_text().splitlines()
    assert lines[0].startswith("t,x_1,x_2,v_1,v_2,wTermLog")
    assert len(lines) == 21


def test_law_from_file(capsys, tmp_path):
    path = tmp_path / "law.json"
    path.write_text(GAUSS_LAW)
    code, rep = run_json(capsys, ["lyapunov", "--law", str(path), "--T", "100", "--R", "4"])
    assert code == 0
    assert rep["estimate"]["lambda_hat"] < 0


def test_diagnose_embeds_config(capsys):
    argv = ["diagnose", "--law", GAUSS_LAW, "--T", "120", "--R", "8", "--seed", "3", "--quorum", "0.9", "--x-grid", "0.1,1"]
    code, rep = run_json(capsys, argv)
    assert code == 0
    cfg = rep["config"]
    assert cfg["run"]["seed"] == 3 and cfg["thresholds"]["quorum"] == 0.9 and cfg["x_grid"] == [0.1, 1.0]
    assert set(rep["reports"]) == {"C0", "i", "ii", "iii", "iv", "v", "vi"}
    assert rep["contradictions"] == []


def test_diagnose_moments(capsys):
    code, rep = run_json(capsys, ["diagnose", "--law", GAUSS_LAW, "--T", "100", "--R", "4", "--moments"])
    assert code == 0 and {"R36i", "R36ii"} <= set(rep["reports"])


def test_search_builtin_family(capsys):
    code, rep = run_json(capsys, ["search", "e34-only", "--budget", "2", "--T", "100", "--R", "4"])
    assert code == 0
    assert rep["search"]["candidates"] == []
    assert "does not resolve" in rep["search"]["label"]


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--law", "{not json"],
        ["simulate", "--law", '{"kind": "nope"}'],
        ["simulate", "--law", GAUSS_LAW, "--bogus"],
        ["frobnicate"],
        ["diagnose", "--law", GAUSS_LAW, "--quorum", "0.2"],
        ["simulate", "--law", GAUSS_LAW, "--T", "0"],
        ["simulate", "--law", GAUSS_LAW, "--x-grid", "-1"],
        ["gallery", "verify"],
        ["gallery", "verify", "E32", "--beta", "0.5"],
        ["constant", "--matrix", "[[1, 2, 3]]"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    assert cli.run(argv) == 2
    assert capsys.readouterr().err


def test_verify_failure_exits_1(capsys, monkeypatch):
    from perpetua import gallery
    from perpetua.diagnostics import HOLDS

    def wrong_entry(gid, **kw):
        e = gallery.build(gid, **kw)
        return gallery.GalleryEntry(e.id, e.params, e.law, e.z0_law, {"C0": HOLDS}, e.exact, e.description, e.frame)

    monkeypatch.setattr(cli, "build", wrong_entry)
    code = cli.run(["gallery", "verify", "E31", "--T", "64", "--R", "4"])
    out = json.loads(capsys.readouterr().out)
    assert code == 1
    assert out["verification"]["verdict_checks"]["C0"] == "contradiction"


def test_reports_identical_across_threads(capsys):
    argv = ["diagnose", "--law", GAUSS_LAW, "--T", "150", "--R", "9", "--seed", "1"]
    cli.run(argv + ["--threads", "1"])
    a = capsys.readouterr().out
    cli.run(argv + ["--threads", "4"])
    b = capsys.readouterr().out
    assert a == b


def test_epoch_recorded(capsys):
    _, rep = run_json(capsys, ["constant", "--matrix", "[[2]]", "--epoch", "1700000000"])
    assert rep["config"]["epoch"] == 1700000000


def test_env_threads(monkeypatch):
    monkeypatch.setenv("PERPETUA_THREADS", "3")
    args = cli.build_parser().parse_args(["simulate", "--law", GAUSS_LAW])
    assert cli._threads(args) == 3
    monkeypatch.setenv("PERPETUA_THREADS", "x")
    with pytest.raises(ConfigError):
        cli._threads(args)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "perpetua", "constant", "--matrix", "[[0.5]]"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["c0"] is True
