import json

import jsonschema
import pytest

from conftest import PRODUCT
from wedgerbm.cli import dispatch, emit_report, format_float, report_schema
from wedgerbm.model import REFERENCE


@pytest.fixture
def model(tmp_path):
    f = tmp_path / "model.json"
    f.write_text(json.dumps(REFERENCE.to_dict()))
    return f


@pytest.fixture
def quarter_model(tmp_path):
    f = tmp_path / "quarter.json"
    f.write_text(json.dumps(PRODUCT.to_dict()))
    return f


def _run(argv, capsys):
    code = dispatch([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate(model, capsys):
    code, out, _ = _run(["validate", "-m", model], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["A0"] == 1.0 and rep["B0"] == 0.5 and rep["p0"] == -0.8 and rep["chi"] == 0
    assert rep["params"] == REFERENCE.to_dict()
    jsonschema.validate(rep, report_schema())


def test_exit_codes(model, tmp_path, capsys):
    code, _, err = _run(["validate", "-m", tmp_path / "missing.json"], capsys)
    assert code == 2 and "usage" in err
    code, _, _ = _run(["frobnicate"], capsys)
    assert code == 2
    code, _, _ = _run(["transform", "-m", model, "--at", "1,2,3"], capsys)
    assert code == 2
    code, _, _ = _run(["validate", "-m", model, "--tol", "0.5"], capsys)
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**REFERENCE.to_dict(), "mu1": 1.0}))
    code, _, err = _run(["validate", "-m", bad], capsys)
    assert code == 1 and "NotErgodic" in err


def test_transform_outputs(model, capsys):
    code, out, _ = _run(["transform", "-m", model, "--at", "1e-6,0", "--which", "A"], capsys)
    rep = json.loads(out)
    assert code == 0 and abs(rep["value_re"] - 1.0) < 1e-5
    assert {"value_re", "value_im", "est_error", "domain_tag"} <= set(rep)
    jsonschema.validate(rep, report_schema())
    code, out, _ = _run(["transform", "-m", model, "--at", "0,0,0,0", "--which", "L"], capsys)
    assert json.loads(out)["value_re"] == 1.0


def test_compare_is_deterministic(model, capsys):
    _, a, _ = _run(["compare", "-m", model], capsys)
    _, b, _ = _run(["compare", "-m", model], capsys)
    assert a == b
    rep = json.loads(a)
    assert set(rep["columns"]) == {"three_quarter", "quarter"}
    jsonschema.validate(rep, report_schema())


def test_curve_files(model, tmp_path, capsys):
    out = tmp_path / "out"
    code, _, _ = _run(["curve", "-m", model, "--out", out, "--n", "40"], capsys)
    assert code == 0
    assert len((out / "contour.csv").read_text().splitlines()) == 41
    assert (out / "uniformization.csv").read_text().splitlines()[0] == "s_re,s_im,p_re,p_im,q_re,q_im"


def test_density_csv_line_count_and_bytes(quarter_model, tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["density", "-m", quarter_model, "--zmin", "0", "--zmax", "2", "--step", "0.25"]
    assert _run(args + ["--out", out1], capsys)[0] == 0
    assert _run(args + ["--out", out2], capsys)[0] == 0
    text = (out1 / "density.csv").read_text()
    assert len(text.splitlines()) == 8 * 8 + 1
    assert text == (out2 / "density.csv").read_text()
    assert (out1 / "density.json").read_bytes() == (out2 / "density.json").read_bytes()


def test_boundary(quarter_model, capsys):
    code, out, _ = _run(["boundary", "-m", quarter_model, "--zmin", "0", "--zmax", "15",
                         "--step", "0.05"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["mass_relative_error"] < 0.02


def test_simulate_and_check(quarter_model, tmp_path, capsys):
    args = ["--horizon", "300", "--dt", "2e-3", "--paths", "2", "--seed", "1"]
    code, out, _ = _run(["simulate", "-m", quarter_model, "--out", tmp_path / "s"] + args, capsys)
    assert code == 0
    rep = json.loads(out)
    jsonschema.validate(rep, report_schema())
    assert (tmp_path / "s" / "histogram.csv").exists()
    _, again, _ = _run(["simulate", "-m", quarter_model] + args, capsys)
    assert json.loads(again)["boundary_mass"] == rep["boundary_mass"]
    code, out, _ = _run(["check", "-m", quarter_model] + args, capsys)
    rep = json.loads(out)
    assert code in (0, 1) and rep["ok"] == (code == 0)
    assert rep["report"]["n_points"] == 25


def test_float_formatting():
    assert format_float(0.1 + 0.2) == 0.3
    assert format_float(float("nan")) is None
    text = emit_report({"rows": [(1 / 3, 2.0)]}, "csv", header=["a", "b"])
    assert text == "a,b\n0.333333333333,2.0\n"
