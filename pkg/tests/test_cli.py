import csv
import json
import math

import pytest

from multisle import cli
from multisle.errors import CollisionError


def run(argv, capsys):
    code = cli.run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("text, z", [
    ("4i", 4j), ("1+2i", 1 + 2j), ("-i", -1j), ("2.5", 2.5 + 0j), ("-1-0.5j", -1 - 0.5j),
    ("i", 1j), ("1e-3i", 1e-3j),
])
def test_parse_complex(text, z):
    assert cli.parse_complex(text) == z


@pytest.mark.parametrize("text", ["", "4k", "1+", "i+i"])
def test_parse_complex_rejects(text):
    with pytest.raises(cli.UsageError):
        cli.parse_complex(text)


def test_parse_measure():
    assert cli.parse_measure("delta0") == {"kind": "PointMass", "x": 0.0}
    assert cli.parse_measure("uniform:-1,2")["b"] == 2.0
    with pytest.raises(cli.UsageError):
        cli.parse_measure("gauss:1")


def test_oracle_example(tmp_path, capsys):
    code, out, err = run(["oracle", "--z", "4i", "--t", 1, "--out", tmp_path], capsys)
    assert code == 0 and err == ""
    row = json.loads((tmp_path / "oracle.json").read_text())["table"][0]
    assert abs(complex(*row["M"]) + 0.414214j) <= 1e-6
    assert abs(complex(*row["h"]) - 4.42929j) <= 1e-5
    assert abs(complex(*row["g"]) - 3.52621j) <= 1e-5
    assert json.loads(out)["json"].endswith("oracle.json")


def test_simulate_example(tmp_path, capsys):
    code, out, _ = run(["simulate", "--n", 2, "--kappa", 0, "--x0", "-1,1", "--t-max", 1,
                        "--out", tmp_path], capsys)
    assert code == 0
    rows = list(csv.reader((tmp_path / "paths.csv").open()))
    last = [float(v) for v in rows[-1]]
    assert float(rows[-1][0]) == 1.0
    assert abs(last[-1] - last[-2] - math.sqrt(12)) <= 1e-3
    side = json.loads((tmp_path / "paths.json").read_text())
    assert side["config"]["sde"]["kappa"] == 0.0 and side["config"]["command"] == "simulate"


@pytest.mark.slow
def test_hull_example_and_sidecar_rerun(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    code, _, _ = run(["hull", "--base", "delta0", "--t", 1, "--columns", 64, "--out", a], capsys)
    assert code == 0
    side = json.loads((a / "hull.json").read_text())
    assert abs(side["footprint"][1] - 3.2974) <= 1e-3 and abs(side["footprint"][0] + 3.2974) <= 1e-3
    assert side["config"]["run"]["columns"] == 64
    code, _, _ = run(["hull", "--config", a / "hull.json", "--out", b], capsys)
    assert code == 0
    for name in ("hull.csv", "hull.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_simulate_sidecar_rerun_is_bit_exact(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["simulate", "--n", 5, "--kappa", 2, "--t-max", 0.2, "--seed", 9,
                "--base", "uniform:-1,1", "--out", a], capsys)[0] == 0
    assert run(["simulate", "--config", a / "paths.json", "--out", b], capsys)[0] == 0
    assert (a / "paths.csv").read_bytes() == (b / "paths.csv").read_bytes()


def test_flags_override_toml(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[sde]\nkappa = 2.0\nx0 = [-1.0, 1.0]\nt_max = 0.5\nseed = 4\n'
                   '[run]\nout_dir = "%s"\n' % (tmp_path / "o"))
    assert run(["simulate", "--config", cfg, "--kappa", 0], capsys)[0] == 0
    side = json.loads((tmp_path / "o" / "paths.json").read_text())
    assert side["config"]["sde"]["kappa"] == 0.0 and side["config"]["sde"]["t_max"] == 0.5


def test_trace(tmp_path, capsys):
    code, _, _ = run(["trace", "--x0", "0", "--kappa", 0, "--t-max", 1, "--times", "1",
                      "--out", tmp_path], capsys)
    assert code == 0
    rows = list(csv.reader((tmp_path / "tips.csv").open()))
    assert rows[0] == ["k", "t", "re", "im"]
    assert abs(complex(float(rows[1][2]), float(rows[1][3])) - 2j) <= 1e-3


def test_converge_reports(tmp_path, capsys):
    code, out, _ = run(["converge", "--kind", "moment", "--x0", "-1,1", "--kappa", 0,
                        "--t-max", 1, "--seeds", 1, "--dt-base", 1e-6, "--out", tmp_path], capsys)
    assert code == 0
    summary = json.loads(out)
    assert summary["kind"] == "MomentLaw" and summary["passed"] is True
    assert json.loads(open(summary["report"]).read())["metrics"]["expected"] == 2.0


@pytest.mark.parametrize("argv", [
    ["simulate", "--n", 2, "--kappa", 7, "--x0", "-1,1"],
    ["simulate", "--bogus", 1],
    ["simulate", "--config", "/nonexistent/run.toml"],
    ["oracle", "--z", "-4i"],
    ["oracle", "--z", "4q"],
    ["hull", "--t", -1],
    ["converge", "--kind", "nope"],
    [],
])
def test_validation_errors_exit_1(argv, tmp_path, capsys):
    code, out, err = run(argv + ["--out", tmp_path] if argv else argv, capsys)
    assert code == 1 and out == ""
    assert err.startswith("multisle: error:") and err.count("\n") == 1


def test_bad_config_section(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[plot]\nx = 1\n")
    assert run(["simulate", "--config", cfg], capsys)[0] == 1


def test_numerical_failure_exits_2(tmp_path, capsys, monkeypatch):
    def boom(cfg):
        raise CollisionError("particles collided", t=0.5, pair=[0, 1])
    monkeypatch.setattr(cli, "simulate", boom)
    code, out, err = run(["simulate", "--x0", "-1,1", "--kappa", 2, "--out", tmp_path], capsys)
    assert code == 2 and out == ""
    payload = json.loads(err)
    assert payload == {"error": "collision", "message": "particles collided", "t": 0.5, "pair": [0, 1]}


def test_help_exits_0(capsys):
    assert run(["hull", "--help"], capsys)[0] == 0
