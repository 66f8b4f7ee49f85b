import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gaugelab import cli
from gaugelab.errors import SchemaError

SMALL = ["string-break", "--L", "4", "--N", "4", "--tmax", "2pi", "--nt", "11"]


def test_parse_frequency():
    assert cli.parse_frequency("120hz") == pytest.approx(2 * math.pi * 120)
    assert cli.parse_frequency("1.5 kHz") == pytest.approx(2 * math.pi * 1500)
    assert cli.parse_frequency("8MHz") == pytest.approx(2 * math.pi * 8e6)
    assert cli.parse_frequency("3.0") == 3.0
    with pytest.raises(SchemaError):
        cli.parse_frequency("12 ghz")


def test_parse_time_and_lists():
    assert cli.parse_time("40pi") == pytest.approx(40 * math.pi)
    assert cli.parse_time("pi") == pytest.approx(math.pi)
    assert cli.parse_time("2.5") == 2.5
    assert cli.parse_int_list("8, 10,12") == [8, 10, 12]
    assert cli.parse_bool("off") is False and cli.parse_bool("ON") is True
    for bad in (lambda: cli.parse_time("pie"), lambda: cli.parse_int_list("1,x"),
                lambda: cli.parse_bool("maybe")):
        with pytest.raises(SchemaError):
            bad()


def test_resolve_precedence(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[lattice]\nL = 6\n[model]\nmu = 0.5\n")
    strings, parsed = cli.resolve_config("string-break", cli.read_config(cfg), {"mu": "0.7"})
    assert parsed["L"] == 6 and parsed["mu"] == 0.7 and parsed["V"] == 0.2
    assert strings["tmax"] == "40pi"


def test_config_errors(tmp_path):
    bad_key = tmp_path / "a.ini"
    bad_key.write_text("[lattice]\nwidth = 3\n")
    with pytest.raises(SchemaError):
        cli.resolve_config("string-break", cli.read_config(bad_key), {})
    wrong_section = tmp_path / "b.ini"
    wrong_section.write_text("[model]\nL = 3\n")
    with pytest.raises(SchemaError):
        cli.resolve_config("string-break", cli.read_config(wrong_section), {})
    with pytest.raises(SchemaError):
        cli.read_config(tmp_path / "missing.ini")
    junk = tmp_path / "c.json"
    junk.write_text("{not json")
    with pytest.raises(SchemaError):
        cli.read_config(junk)


def test_csv_format():
    text = cli.format_csv({"t": [0.0, 1.0], "E": [-1.0, 0.25]})
    assert text == "t,E\n0.000000000000e+00,-1.000000000000e+00\n1.000000000000e+00,2.500000000000e-01\n"


def test_run_writes_outputs(tmp_path):
    assert cli.main(SMALL + ["--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "string-break.json").read_text())
    assert meta["scenario"] == "string-break"
    assert meta["config"]["L"] == "4"
    assert meta["files"] == ["string-break.csv"]
    assert meta["version"]
    data = np.loadtxt(tmp_path / "string-break.csv", delimiter=",", skiprows=1)
    assert data.shape == (11, 6)
    assert data[0, 1] == pytest.approx(-1.0)


def test_sidecar_replay_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(SMALL + ["--out", str(a)]) == 0
    assert cli.main(["string-break", "--config", str(a / "string-break.json"), "--out", str(b)]) == 0
    assert (a / "string-break.csv").read_bytes() == (b / "string-break.csv").read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["modes", "--name", "m"]) == 0
    assert (tmp_path / "env" / "m.csv").exists()
    res = json.loads((tmp_path / "env" / "m.json").read_text())["results"]
    assert res["nn_coupling_hz"] == pytest.approx(0.12e6, rel=0.05)


def test_exit_code_schema(tmp_path, capsys):
    assert cli.main(["string-break", "--L", "four", "--out", str(tmp_path)]) == 2
    assert "SchemaError" in capsys.readouterr().err


def test_exit_code_capacity(tmp_path):
    assert cli.main(["string-break", "--L", "64", "--N", "0", "--out", str(tmp_path)]) == 3


def test_exit_code_convergence(tmp_path):
    # soft trap and a two-quantum phonon cutoff: the drive populates the top level
    args = ["fvd", "--L", "2", "--n_max", "2", "--omega_z", "50khz", "--nt", "11", "--out", str(tmp_path)]
    assert cli.main(args) == 4


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gaugelab.cli", "modes", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "modes.json").exists()
