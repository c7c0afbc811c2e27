import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from renyisplit.cli import main, run
from renyisplit.config import ConfigError, ExperimentConfig, load_config, parse_config
from renyisplit.output import CSV_HEADER, fmt, to_json


def write_cfg(tmp_path: Path, body: str, name: str = "cfg.toml") -> Path:
    csv = (tmp_path / "out.csv").as_posix()
    rep = (tmp_path / "out.json").as_posix()
    text = body + f'\n[output]\ncsv = "{csv}"\nreport = "{rep}"\n'
    p = tmp_path / name
    p.write_text(text)
    return p


def read_rows(tmp_path):
    lines = (tmp_path / "out.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER
    return [dict(zip(CSV_HEADER.split(","), l.split(","))) for l in lines[1:]]


TC = """
[geometry]
Lx = 2
Ly = 2
[model]
family = "None"
lambdas = [0.0]
region = "star"
"""

CC = """
[geometry]
Lx = 2
Ly = 2
[model]
family = "CCExp"
range = { start = 0.0, stop = 0.6, step = 0.1 }
alphas = [0.0, 0.5, 1.0, 2.0, 3.0]
"""


def test_toric_code_point(tmp_path):
    assert run("sweep", write_cfg(tmp_path, TC)) == 0
    rows = read_rows(tmp_path)
    assert len(rows) == 9
    for r in rows:
        assert float(r["S"]) == pytest.approx(math.log(2), abs=1e-10)
        assert r["rank"] == "2"


def test_cc_sweep_report(tmp_path):
    assert run("sweep", write_cfg(tmp_path, CC)) == 0
    rep = json.loads((tmp_path / "out.json").read_text())
    assert rep["split"] is False
    assert rep["dlc"] == "convertible"
    assert rep["seed"] == 0
    for key in ("alpha0_interval", "derivative_table", "config_echo"):
        assert key in rep


def test_config_echo_round_trip(tmp_path):
    p = write_cfg(tmp_path, CC)
    run("sweep", p)
    rep = json.loads((tmp_path / "out.json").read_text())
    assert parse_config(rep["config_echo"]) == load_config(p)


def test_byte_determinism(tmp_path):
    p = write_cfg(tmp_path, CC.replace("CCExp", "UniformXZ").replace("stop = 0.6", "stop = 0.2"))
    run("sweep", p)
    first = ((tmp_path / "out.csv").read_bytes(), (tmp_path / "out.json").read_bytes())
    run("sweep", p)
    assert ((tmp_path / "out.csv").read_bytes(), (tmp_path / "out.json").read_bytes()) == first


def test_seventeen_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(math.log(2)) == "0.69314718055994529"
    assert float(fmt(1 / 3)) == 1 / 3
    assert to_json({"a": [0.1, None, True]}) == '{\n  "a": [0.10000000000000001, null, true]\n}'


def test_units_bits(tmp_path):
    p = write_cfg(tmp_path, TC)
    p.write_text(p.read_text().replace('report = ', 'units = "bits"\nreport = '))
    assert run("sweep", p) == 0
    for r in read_rows(tmp_path):
        assert float(r["S"]) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize(
    "body,path",
    [
        ("[model]\nalphas = [1.0, -2.0]\n", "model.alphas"),
        ('[model]\nalphas = "many"\n', "model.alphas"),
        ("[model]\nalphas = [1.0, 1.0]\n", "model.alphas"),
        ("[geometry]\nLx = 0\n", "geometry.Lx"),
        ('[model]\nfamily = "Nope"\n', "model.family"),
        ("[solver]\nbogus = 1\n", "solver.bogus"),
    ],
)
def test_schema_errors(tmp_path, capsys, body, path):
    assert run("sweep", write_cfg(tmp_path, body)) == 2
    assert path in capsys.readouterr().err


def test_malformed_toml(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[model\nalphas = [")
    assert run("sweep", p) == 2


def test_geometry_error_exit_2(tmp_path, capsys):
    assert run("sweep", write_cfg(tmp_path, "[geometry]\nLx = 1\n")) == 2
    assert "geometry" in capsys.readouterr().err


def test_cap_exit_4(tmp_path):
    assert run("sweep", write_cfg(tmp_path, "[geometry]\nLx = 5\nLy = 3\n")) == 4
    body = '[model]\nfamily = "TFIM-V1"\nlambdas = [0.5]\n[chain]\nN = 30\n'
    assert run("chain", write_cfg(tmp_path, body)) == 4


def test_solver_failure_exit_3(tmp_path, capsys):
    body = '[geometry]\nLx = 3\nLy = 2\n[model]\nfamily = "UniformXZ"\nlambdas = [0.1]\n[solver]\ntol = 1e-30\nmax_iter = 1\n'
    assert run("sweep", write_cfg(tmp_path, body)) == 3
    assert "residuals" in capsys.readouterr().err


def test_loopgas_matches_sweep(tmp_path):
    p = write_cfg(tmp_path, CC)
    run("sweep", p)
    ed = read_rows(tmp_path)
    assert run("loopgas", p) == 0
    ex = read_rows(tmp_path)
    for a, b in zip(ed, ex):
        assert float(a["S"]) == pytest.approx(float(b["S"]), abs=1e-8)
        assert a["rank"] == b["rank"]


def test_chain_subcommand(tmp_path):
    body = '[model]\nfamily = "TFIM-V1"\nrange = { start = 0.1, stop = 0.5, step = 0.1 }\nalphas = [0.5, 1.0, 2.0]\n[chain]\nN = 8\n'
    assert run("chain", write_cfg(tmp_path, body)) == 0
    rep = json.loads((tmp_path / "out.json").read_text())
    assert rep["split"] is False
    assert len(rep["magnetization_per_site"]) == 5


@pytest.mark.parametrize(
    "body",
    [
        '[geometry]\nLx = 2\nLy = 2\n[model]\nfamily = "CCExp"\nlambdas = [0.3]\nalphas = [0.0, 0.5, 1.0, 2.0, 3.0]\n',
        '[model]\nfamily = "TFIM-V1"\nlambdas = [0.5]\nalphas = [0.5, 1.0, 2.0]\n[chain]\nN = 12\n',
        '[geometry]\nLx = 3\nLy = 2\n[model]\nfamily = "HorizontalZ"\nlambdas = [0.2]\n',
    ],
)
def test_crosscheck_passes(tmp_path, body):
    assert run("crosscheck", write_cfg(tmp_path, body)) == 0
    rep = json.loads((tmp_path / "out.json").read_text())
    assert rep["passed"] is True
    assert max(rep["max_abs_deviation"].values()) < 1e-8


def test_crosscheck_no_exact_path(tmp_path):
    body = '[geometry]\nLx = 2\nLy = 2\n[model]\nfamily = "UniformXZ"\nlambdas = [0.1]\n'
    assert run("crosscheck", write_cfg(tmp_path, body)) == 5


def test_defaults_fill_every_field():
    cfg = ExperimentConfig()
    echo = cfg.echo()
    assert set(echo) == {"geometry", "model", "solver", "chain", "analysis", "output"}
    assert parse_config(echo) == cfg
    with pytest.raises(ConfigError):
        parse_config({"model": {"lambdas": [0.1], "range": {"stop": 1, "step": 0.1}}})


def test_console_entry_point(tmp_path):
    p = write_cfg(tmp_path, TC)
    assert main(["sweep", str(p)]) == 0
    out = subprocess.run([sys.executable, "-m", "renyisplit", "sweep", str(p)], capture_output=True)
    assert out.returncode == 0
