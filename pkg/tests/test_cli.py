import json

import numpy as np
import pytest

from kscatter import cli
from kscatter.errors import SingularDenominatorError

THREE_POINT = {
    "points": [[1, 0, 0], [3, 0, 0], [3.5, 0, 0]],
    "coupling": {"diagonal": [1.0, 1.0, 1.0]},
}

ONE_POINT = {
    "points": [[0, 0, 0]],
    "coupling": {"diagonal": [1.0]},
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def run_cli(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_three_point(tmp_path, capsys):
    cfg = write_config(tmp_path, THREE_POINT)
    code, out, err = run_cli(["validate", "--config", cfg], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["delta"] == [1.0, 2.0, 0.5]
    assert doc["summability"]["verdict"] == "pass"
    assert doc["d"] == 0.5


def test_validate_single_point_csv(tmp_path, capsys):
    cfg = write_config(tmp_path, ONE_POINT)
    code, out, _ = run_cli(["validate", "--config", cfg, "--format", "csv"], capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "index,delta,d,verdict"
    assert lines[1].split(",") == ["0", "0", "", "pass"]


def test_validate_generator_lattice(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {"generator": {"lattice_line": {"count": 50, "spacing": 1.0, "weight_law": "n^4"}}},
    )
    code, out, _ = run_cli(["validate", "--config", cfg], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["n_points"] == 50
    assert doc["summability"]["verdict"] == "pass"
    assert doc["summability"]["orders"][-1] == 50


def test_qmat_single_point(tmp_path, capsys):
    cfg = write_config(tmp_path, ONE_POINT)
    code, out, _ = run_cli(["qmat", "--config", cfg, "--lambda", "1.0"], capsys)
    assert code == 0
    doc = json.loads(out)
    entry = doc["entries"][0][0]
    assert entry["re"] == 0.0
    assert entry["im"] == pytest.approx(1.0 / (4.0 * np.pi), rel=1e-15)


def test_smat_single_point(tmp_path, capsys):
    cfg = write_config(tmp_path, ONE_POINT)
    code, out, _ = run_cli(["smat", "--config", cfg, "--lambda", "1.0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["unitarity_defect"] <= 1e-8
    det = complex(doc["det"]["re"], doc["det"]["im"])
    oracle = (4 * np.pi - 1j / (4 * np.pi)) / (4 * np.pi + 1j / (4 * np.pi))
    assert det == pytest.approx(oracle, rel=1e-12)
    assert len(doc["kernel_samples"]) == 36
    # single point at the origin scatters isotropically
    vals = {(
        s["value"]["re"], s["value"]["im"]) for s in doc["kernel_samples"]}
    assert len(vals) == 1


def test_sweep_csv_rows(tmp_path, capsys):
    cfg = write_config(tmp_path, ONE_POINT)
    code, out, _ = run_cli(
        ["sweep", "--config", cfg, "--lambda", "0.5:5:0.5", "--format", "csv"], capsys
    )
    assert code == 0
    lines = out.strip().split("\n")
    header = lines[0].split(",")
    assert header == ["lambda", "det_phase", "det_mod", "sigma_total", "unitarity_defect", "cond"]
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    assert len(rows) == 10
    lams = [float(r["lambda"]) for r in rows]
    assert lams == sorted(lams)
    for row in rows:
        assert float(row["sigma_total"]) > 0.0
        assert abs(float(row["det_mod"]) - 1.0) <= 1e-10
        assert float(row["unitarity_defect"]) <= 1e-8


def test_dets_sweep(tmp_path, capsys):
    cfg = write_config(tmp_path, THREE_POINT)
    code, out, _ = run_cli(
        ["dets", "--config", cfg, "--lambda", "1:2:0.5", "--format", "csv"], capsys
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "lambda,det_mod,det_phase,cond"
    assert len(lines) == 4


def test_xsect_optical_theorem(tmp_path, capsys):
    cfg = write_config(tmp_path, THREE_POINT)
    code, out, _ = run_cli(
        ["xsect", "--config", cfg, "--lambda", "1.5", "--direction", "0,0,1"], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["sigma_total"] > 0
    assert abs(doc["optical_lhs"] - doc["optical_rhs"]) <= 1e-6 * doc["sigma_total"]
    assert len(doc["amplitude"]) == doc["n_theta"] * doc["n_phi"]


def test_add_trace_small_deviations(tmp_path, capsys):
    cfg = write_config(tmp_path, THREE_POINT)
    code, out, _ = run_cli(["add", "--config", cfg, "--lambda", "1.0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["det_d_exponent"] == -1
    assert len(doc["rows"]) == 3
    for row in doc["rows"]:
        assert row["xi_d_residual"] <= 1e-12
        assert row["dev_coeff"] <= 1e-10
        assert row["dev_kernel"] <= 1e-10
        assert row["dev_det"] <= 1e-8


def test_deterministic_output(tmp_path, capsys):
    cfg = write_config(tmp_path, THREE_POINT)
    outputs = []
    for fmt in ("json", "csv"):
        pair = []
        for run in range(2):
            path = tmp_path / f"out_{fmt}_{run}"
            code = cli.main(
                ["sweep", "--config", cfg, "--lambda", "0.5:2:0.5",
                 "--format", fmt, "--out", str(path)]
            )
            assert code == 0
            pair.append(path.read_bytes())
        assert pair[0] == pair[1]
        outputs.append(pair[0])
    capsys.readouterr()


def test_grid_overrides(tmp_path, capsys, monkeypatch):
    cfg = write_config(tmp_path, ONE_POINT)
    code, out, _ = run_cli(
        ["smat", "--config", cfg, "--lambda", "1.0", "--ntheta", "12"], capsys
    )
    assert json.loads(out)["n_theta"] == 12
    assert json.loads(out)["n_phi"] == 24
    monkeypatch.setenv("KS_DEFAULT_GRID", "10,22")
    code, out, _ = run_cli(["smat", "--config", cfg, "--lambda", "1.0"], capsys)
    doc = json.loads(out)
    assert (doc["n_theta"], doc["n_phi"]) == (10, 22)


def test_convention_flag(tmp_path, capsys):
    cfg = write_config(tmp_path, ONE_POINT)
    _, out_4pi, _ = run_cli(["smat", "--config", cfg, "--lambda", "1.0"], capsys)
    _, out_one, _ = run_cli(
        ["smat", "--config", cfg, "--lambda", "1.0", "--convention", "1"], capsys
    )
    det_4pi = json.loads(out_4pi)["det"]
    det_one = json.loads(out_one)["det"]
    assert det_4pi != det_one
    oracle = (1.0 - 1j / (4 * np.pi)) / (1.0 + 1j / (4 * np.pi))
    assert complex(det_one["re"], det_one["im"]) == pytest.approx(oracle, rel=1e-12)


def test_input_errors_exit_code_2(tmp_path, capsys):
    missing_coupling = write_config(tmp_path, {"points": [[0, 0, 0]]}, "bad1.json")
    code, _, err = run_cli(["validate", "--config", missing_coupling], capsys)
    assert code == 2
    payload = json.loads(err)
    assert payload["error"]["type"] == "ParseError"
    assert "coupling" in payload["error"]["message"]

    dup = write_config(
        tmp_path,
        {"points": [[0, 0, 0], [0, 0, 0]], "coupling": {"diagonal": [1, 1]}},
        "bad2.json",
    )
    code, _, err = run_cli(["validate", "--config", dup], capsys)
    assert code == 2
    assert json.loads(err)["error"]["type"] == "DuplicatePointError"

    code, _, err = run_cli(
        ["smat", "--config", write_config(tmp_path, ONE_POINT), "--lambda", "-1"], capsys
    )
    assert code == 2

    code, _, err = run_cli(["validate", "--config", str(tmp_path / "nope.json")], capsys)
    assert code == 2


def test_numerical_singularity_exit_code_3(tmp_path, capsys, monkeypatch):
    def boom(args):
        raise SingularDenominatorError("resonant energy")

    monkeypatch.setitem(cli._COMMANDS, "validate", boom)
    cfg = write_config(tmp_path, ONE_POINT)
    code, _, err = run_cli(["validate", "--config", cfg], capsys)
    assert code == 3
    assert json.loads(err)["error"]["type"] == "SingularDenominatorError"


def test_lambda_range_parsing():
    assert cli._parse_lambdas("2.0") == [2.0]
    vals = cli._parse_lambdas("0.5:5:0.5")
    assert len(vals) == 10
    assert vals[0] == 0.5 and vals[-1] == pytest.approx(5.0)
    from kscatter.errors import ParseError

    for bad in ("0:1:0.1", "1:0.5:0.1", "a:b:c", "-1", "1:2:-1", None):
        with pytest.raises(ParseError):
            cli._parse_lambdas(bad)
