import csv
import io
import json
from importlib import resources

import jsonschema
import pytest

from hgvm_qbc.cli import main

SCHEMA = json.loads(resources.files("hgvm_qbc").joinpath("schemas/report.schema.json").read_text())


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("preset = design-point\n[sim]\nperiods = 5\nrecord_stride = 50\n")
    return p


def test_steady_json(capsys):
    code, out, _ = run(["steady", "--vin", "12", "--duty", "0.55", "--io", "1.32", "--json"], capsys)
    rep = json.loads(out)
    jsonschema.validate(rep, SCHEMA)
    assert code == 0 and rep["results"]["gain"] == pytest.approx(12.5926, abs=1e-4)


def test_design_text_and_error(capsys):
    code, out, _ = run(["design", "--vin", "12", "--vo", "151", "--po", "200", "--fs", "50e3"], capsys)
    assert code == 0 and "l1_min" in out
    code, _, err = run(["design", "--vin", "12", "--vo", "20", "--po", "200", "--fs", "50e3"], capsys)
    assert code == 4 and "[gain-unreachable]" in err


def test_compare_shape(capsys, tmp_path):
    out_csv = tmp_path / "curves.csv"
    svg = tmp_path / "g.svg"
    code, _, err = run(["compare", "--dmin", "0.1", "--dmax", "0.8", "--step", "0.05",
                        "--out", str(out_csv), "--plot", str(svg)], capsys)
    rows = list(csv.reader(io.StringIO(out_csv.read_text())))
    assert code == 0 and len(rows) == 16 and len(rows[0]) == 1 + 7 * 3
    assert "off-scale" in err and svg.read_text().startswith("<svg")


def test_simulate_outputs(cfg_file, tmp_path, capsys):
    out_csv, rep, svg = tmp_path / "t.csv", tmp_path / "r.json", tmp_path / "p.svg"
    code, _, _ = run(["simulate", "--config", str(cfg_file), "--out", str(out_csv),
                      "--json", str(rep), "--plot", str(svg)], capsys)
    data = json.loads(rep.read_text())
    jsonschema.validate(data, SCHEMA)
    assert code == 0 and data["status"]["exit_code"] == 0
    assert out_csv.read_text().startswith("t,mode,iL1")
    assert any("500 ohm" in w for w in data["warnings"])


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("preset = design-point\n[sim]\nbogus = 1\n")
    rep = tmp_path / "r.json"
    code, _, err = run(["simulate", "--config", str(bad), "--json", str(rep)], capsys)
    assert code == 2 and "[config]" in err and "line 3" in err
    data = json.loads(rep.read_text())
    jsonschema.validate(data, SCHEMA)
    assert data["status"] == {"exit_code": 2, "category": "config",
                              "message": "line 3: unknown key 'bogus' in [sim]"}


def test_simulation_error_exit_code(tmp_path, capsys):
    p = tmp_path / "dcm.cfg"
    p.write_text("preset = prototype\n[components]\nr_load = 20e3\n[switching]\nduty = 0.3\n"
                 "[sim]\nperiods = 200\nrecord_stride = 100\n")
    code, _, err = run(["simulate", "--config", str(p)], capsys)
    assert code == 3 and "[dcm]" in err


def test_control_unreachable(cfg_file, capsys):
    code, _, err = run(["control", "--config", str(cfg_file), "--refs", "0:40,0.01:2000"], capsys)
    assert code == 4 and "unreachable reference" in err


def test_control_short_run(tmp_path, capsys):
    p = tmp_path / "t2.cfg"
    p.write_text("preset = prototype\n[sim]\nrecord_stride = 100\n")
    rep = tmp_path / "r.json"
    code, out, _ = run(["control", "--config", str(p), "--refs", "0:40,0.004:42",
                        "--duration", "0.01", "--json", str(rep)], capsys)
    data = json.loads(rep.read_text())
    jsonschema.validate(data, SCHEMA)
    assert code == 0 and len(data["results"]["segments"]) == 2
    assert "ref 42 V" in out


def test_bad_refs(cfg_file, capsys):
    code, _, err = run(["control", "--config", str(cfg_file), "--refs", "0-40"], capsys)
    assert code == 2
