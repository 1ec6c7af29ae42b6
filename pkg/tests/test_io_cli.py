import io
import json
import math
import os

import pytest

from camplab import __version__
from camplab.cli import run_command
from camplab.errors import ConfigError
from camplab.io import (CliConfig, format_value, read_config, read_table, validate_params, write_config,
                        write_manifest, write_table)


def _run(argv):
    err = io.StringIO()
    code = run_command(argv, stderr=err)
    return code, err.getvalue()


# -- configuration -----------------------------------------------------------------

def test_config_round_trip(tmp_path):
    cfg = CliConfig(command="mc-phase", params=validate_params("mc-phase", {"deltas": [0.2, 0.3], "N": 500}),
                    output_path="out/x.csv", master_seed=5, threads=2)
    path = tmp_path / "cfg.json"
    write_config(cfg, path)
    back = read_config(path)
    assert back.to_dict() == cfg.to_dict()


def test_config_errors_name_the_key(tmp_path):
    with pytest.raises(ConfigError) as e:
        validate_params("ns", {"delta": 0.2})
    assert e.value.key == "rho"
    with pytest.raises(ConfigError) as e:
        validate_params("ns", {"delta": 0.2, "rho": 0.1, "bogus": 1})
    assert e.value.key == "bogus"
    with pytest.raises(ConfigError) as e:
        validate_params("se", {"delta": "abc", "rho": 0.1})
    assert e.value.key == "delta"
    with pytest.raises(ConfigError) as e:
        CliConfig.from_dict({"command": "ns", "extra": 1})
    assert e.value.key == "extra"
    with pytest.raises(ConfigError):
        CliConfig.from_dict({"command": "nope"})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        read_config(bad)


def test_format_value_round_trips_doubles():
    for v in (0.1, 1 / 3, math.pi * 1e-300, 2.0 ** 0.5 * 1e17, -0.0):
        assert float(format_value(v)) == v
    assert format_value(math.inf) == "inf" and format_value(math.nan) == "nan"
    assert format_value(True) == "true" and format_value(3) == "3"


def test_write_table_creates_dirs_and_rejects_extra_columns(tmp_path):
    path = tmp_path / "a" / "b" / "t.csv"
    write_table([{"x": 0.1, "y": "s"}], ["x", "y"], path)
    assert path.read_bytes() == b"x,y\r\n0.10000000000000001,s\r\n"
    assert read_table(path) == [{"x": "0.10000000000000001", "y": "s"}]
    with pytest.raises(ConfigError):
        write_table([{"x": 1, "z": 2}], ["x"], tmp_path / "u.csv")
    assert not (tmp_path / "u.csv").exists()


def test_manifest_is_strict_json_without_timestamps(tmp_path):
    cfg = CliConfig(command="minimax", params=validate_params("minimax", {}), output_path=str(tmp_path / "m.csv"))
    path = write_manifest(cfg.output_path, cfg, __version__, {"value": math.inf, "pair": (1, 2)})
    doc = json.loads(path.read_text())
    assert doc["results"] == {"value": "inf", "pair": [1, 2]}
    assert doc["camplab_version"] == __version__ and doc["master_seed"] == 0
    first = path.read_bytes()
    write_manifest(cfg.output_path, cfg, __version__, {"value": math.inf, "pair": (1, 2)})
    assert path.read_bytes() == first


# -- command line ---------------------------------------------------------------------

def test_cli_ns(tmp_path):
    out = tmp_path / "ns.csv"
    code, err = _run(["ns", "--delta", "0.25", "--rho", "0.2", "--out", str(out)])
    assert code == 0, err
    row = read_table(out)[0]
    assert float(row["ns"]) == pytest.approx(0.48489091037681714, rel=1e-12)
    assert (tmp_path / "ns.csv.manifest.json").exists()


def test_cli_phase_curve_row_count(tmp_path):
    out = tmp_path / "pc.csv"
    assert _run(["phase-curve", "--deltas", "9", "--out", str(out)])[0] == 0
    rows = read_table(out)
    assert len(rows) == 9
    assert float(rows[0]["delta"]) == pytest.approx(0.1)


def test_cli_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "se", "params": {"delta": 0.25, "rho": 0.1, "sigma": 0.1, "t_max": 5},
                               "output_path": str(tmp_path / "se.csv")}))
    assert _run(["se", "--config", str(cfg), "--t-max", "3"])[0] == 0
    rows = read_table(tmp_path / "se.csv")
    assert len(rows) == 4


def test_cli_exit_codes(tmp_path):
    assert _run([])[0] == 1
    code, err = _run(["ns", "--delta", "0.25", "--out", str(tmp_path / "x.csv")])
    assert code == 1 and "rho" in err
    code, err = _run(["ns", "--delta", "0.25", "--rho", "0.1", "--bogus", "1"])
    assert code == 1
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "ns", "params": {"delta": 0.2, "rho": 0.1, "bogus": 3}}))
    code, err = _run(["ns", "--config", str(cfg)])
    assert code == 1 and "bogus" in err
    code, err = _run(["calibrate", "--rho", "0.6", "--sigma", "0", "--out", str(tmp_path / "c.csv")])
    assert code == 2
    code, _ = _run(["ns", "--delta", "2", "--rho", "0.1", "--out", str(tmp_path / "d.csv")])
    assert code == 1


def test_cli_solve_saves_and_reloads_instance(tmp_path):
    inst = tmp_path / "inst.bin"
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    assert _run(["solve", "--N", "200", "--sigma", "0.05", "--save-instance", str(inst), "--out", str(out1)])[0] == 0
    assert _run(["solve", "--instance", str(inst), "--out", str(out2)])[0] == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "u.csv"
    argv = ["universality", "--N", "200", "--sigma-points", "3", "--out", str(out)]
    assert _run(argv)[0] == 0
    first = out.read_bytes(), (tmp_path / "u.csv.manifest.json").read_bytes()
    assert _run(argv)[0] == 0
    assert (out.read_bytes(), (tmp_path / "u.csv.manifest.json").read_bytes()) == first


def test_threads_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CAMP_LAB_THREADS", "2")
    out = tmp_path / "m.csv"
    assert _run(["minimax", "--eps-points", "5", "--out", str(out)])[0] == 0
    doc = json.loads((tmp_path / "m.csv.manifest.json").read_text())
    assert doc["threads"] == 2
    monkeypatch.setenv("CAMP_LAB_THREADS", "x")
    assert _run(["minimax", "--out", str(out)])[0] == 1
