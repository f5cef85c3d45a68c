import csv
import io
import json
import math
from pathlib import Path

import pytest

from warpharm.cli import main, parse_config
from warpharm.errors import SchemaError
from warpharm.report import config_hash

HEIS = {
    "fiber": {"kind": "unimodular", "lambda": [1, 0, 0]},
    "warp": {"kind": "linear", "slope": 0.5, "offset": 1.0},
    "field": {"kind": "left_invariant", "coeffs": [1, 0, 0]},
    "phi": {"kind": "euler", "c1": 1.0, "c2": 0.5},
    "check": {"samples": 64, "seed": 3, "points": 3},
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_minimal_config_round_trips():
    cfg = parse_config(json.dumps(HEIS))
    assert cfg.raw == HEIS


@pytest.mark.parametrize("patch, path", [
    ({"fiber": {"kind": "unimodular", "lambda": [1, 0]}}, "/fiber/lambda"),
    ({"fiber": {"kind": "unimodular", "lambda": [1, 0, 0], "mu": 1}}, "/fiber"),
    ({"warp": {"kind": "linear", "slope": 0.5}}, "/warp"),
    ({"check": {"tol": -1}}, "/check/tol"),
    ({"bogus": 1}, "/"),
    ({"fiber": {"kind": "non_unimodular", "alpha": 0.5, "beta": 0, "delta": 1}}, "/fiber"),
    ({"fiber": {"kind": "non_unimodular", "alpha": -1, "beta": 0, "delta": -2}}, "/fiber"),
    ({"phi": {"kind": "affine", "g1": 1, "g2": 0}}, "/phi/kind"),
    ({"field": {"kind": "family_params"}}, "/field/kind"),
    ({"fiber": {"kind": "chart_family", "family": "H3", "params": {"kappa": 1}}}, "/fiber/params"),
])
def test_schema_violations_carry_json_paths(patch, path):
    with pytest.raises(SchemaError) as exc:
        parse_config(json.dumps({**HEIS, **patch}))
    assert path in [p for p, _ in exc.value.errors]


def test_alpha_below_delta_cites_invariant():
    with pytest.raises(SchemaError) as exc:
        parse_config(json.dumps({**HEIS, "fiber": {"kind": "non_unimodular", "alpha": 0.5, "beta": 0, "delta": 1}}))
    assert "alpha >= delta" in str(exc.value)


def test_non_finite_literal_rejected():
    with pytest.raises(SchemaError):
        parse_config('{"fiber": {"kind": "unimodular", "lambda": [NaN, 0, 0]}}')


def test_table1_csv(capsys):
    code, out, _ = run(capsys, "--command", "table1")
    assert code == 0
    assert out.count("\r\n") == 7
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["signs", "tag", "group"]
    assert [r[0] for r in rows[1:]] == ["+,+,+", "+,+,-", "+,+,0", "+,0,-", "+,0,0", "0,0,0"]


def test_classify_su2_single_case(tmp_path, capsys):
    cfg = {"fiber": {"kind": "unimodular", "lambda": [1, 1, 1]}, "field": {"kind": "left_invariant",
                                                                         "coeffs": [1, 0, 0]}}
    code, out, _ = run(capsys, "--config", write(tmp_path, cfg), "--command", "classify")
    rep = json.loads(out)
    assert code == 0
    (case,) = rep["result"]["cases"]
    assert case["epsilon"] == 0.5


def test_classify_no_case_exit_1(tmp_path, capsys):
    cfg = {"fiber": {"kind": "unimodular", "lambda": [1, 2, 3]}, "field": {"kind": "left_invariant",
                                                                         "coeffs": [0.6, 0.8, 0]}}
    code, out, _ = run(capsys, "--config", write(tmp_path, cfg), "--command", "classify")
    assert code == 1
    assert json.loads(out)["result"]["cases"] == []


def test_check_passes_and_wrong_epsilon_fails(tmp_path, capsys):
    code, out, _ = run(capsys, "--config", write(tmp_path, HEIS), "--command", "check")
    assert code == 0 and json.loads(out)["result"]["verdict"]
    bad = {**HEIS, "warp": {"kind": "linear", "slope": math.sqrt(0.5), "offset": 1.0}}
    code, out, _ = run(capsys, "--config", write(tmp_path, bad), "--command", "check")
    assert code == 1
    assert json.loads(out)["result"]["max_abs"] > 1e-2


def test_numeric_warp_with_ivp_phi(tmp_path, capsys):
    cfg = {**HEIS, "warp": {"kind": "epsilon_numeric", "epsilon": 0.5, "t0": 0.0, "f0": 1.0, "df0": 0.2,
                            "bounds": [-1.0, 1.0]},
           "phi": {"kind": "ivp", "t0": 0.0, "phi0": 0.1, "dphi0": 0.3}}
    code, out, _ = run(capsys, "--config", write(tmp_path, cfg), "--command", "check")
    rep = json.loads(out)
    assert code == 0, rep
    assert rep["tolerances"]["tol"] == 1e-6


def test_error_object_on_stderr(tmp_path, capsys):
    bad = {**HEIS, "fiber": {"kind": "unimodular", "lambda": [1, 0]}}
    code, out, err = run(capsys, "--config", write(tmp_path, bad), "--command", "check")
    assert code == 2 and out == ""
    body = json.loads(err)
    assert body["error"] == "SchemaError"
    assert body["violations"][0]["path"] == "/fiber/lambda"


def test_missing_section_is_schema_error(tmp_path, capsys):
    cfg = {"fiber": HEIS["fiber"], "field": HEIS["field"]}
    code, _, err = run(capsys, "--config", write(tmp_path, cfg), "--command", "check")
    assert code == 2 and json.loads(err)["violations"][0]["path"] == "/warp"


def test_report_embeds_hash_tolerances_version(tmp_path, capsys):
    code, out, _ = run(capsys, "--config", write(tmp_path, HEIS), "--command", "check", "--tol", "1e-7")
    rep = json.loads(out)
    assert rep["config_hash"] == config_hash(HEIS)
    assert rep["tolerances"]["tol"] == 1e-7
    assert rep["version"] and rep["command"] == "check"


@pytest.mark.parametrize("command", ["classify", "solve", "check", "map-check", "oracle"])
def test_reports_are_byte_identical(tmp_path, capsys, command):
    path = write(tmp_path, HEIS)
    outs = []
    for k in range(2):
        dest = tmp_path / f"{command}_{k}.json"
        assert main(["--config", path, "--command", command, "--out", str(dest)]) in (0, 1)
        outs.append(dest.read_bytes())
    assert outs[0] == outs[1]


def test_csv_output_writes_metadata_sidecar(tmp_path, capsys):
    cfg = {**HEIS, "output": {"format": "csv", "path": str(tmp_path / "solve.csv")}}
    assert main(["--config", write(tmp_path, cfg), "--command", "solve"]) == 0
    text = (tmp_path / "solve.csv").read_bytes().decode()
    assert text.startswith("t,f,df,d2f,phi,dphi,d2phi\r\n")
    assert len(text.splitlines()) == 65
    meta = json.loads((tmp_path / "solve.csv.meta.json").read_text())
    assert meta["config_hash"] == config_hash(cfg)


def test_oracle_agrees_on_heisenberg(tmp_path, capsys):
    code, out, _ = run(capsys, "--config", write(tmp_path, HEIS), "--command", "oracle", "--h", "1e-3")
    rep = json.loads(out)["result"]
    assert code == 0
    assert rep["max_laplacian_diff"] < 1e-3 and rep["max_tension_diff"] < 1e-3
    assert rep["h"] == 1e-3


def test_oracle_on_chart_family(tmp_path, capsys):
    cfg = {"fiber": {"kind": "chart_family", "family": "RxH2",
                     "params": {"alpha": 1.0, "eps": 0.25, "b_coeffs": [1, 0.5], "c_coeffs": [1, -0.3]}},
           "field": {"kind": "family_params"}, "warp": {"kind": "linear", "slope": 0.5, "offset": 1.0},
           "phi": {"kind": "euler", "c1": 1.0, "c2": 0.5}, "check": {"points": 2}}
    code, out, _ = run(capsys, "--config", write(tmp_path, cfg), "--command", "oracle")
    assert code == 0, out


def test_family_check_and_map_check(tmp_path, capsys):
    cfg = {"fiber": {"kind": "chart_family", "family": "H3", "params": {"kappa": 1.0, "kappa_prime": 0.5}},
           "field": {"kind": "family_params"}, "warp": {"kind": "linear", "slope": 0.5, "offset": 1.0},
           "phi": {"kind": "euler", "c1": 1.0, "c2": 0.5}, "check": {"samples": 16}}
    path = write(tmp_path, cfg)
    assert run(capsys, "--config", path, "--command", "check")[0] == 0
    code, out, _ = run(capsys, "--config", path, "--command", "map-check")
    assert code == 1 and json.loads(out)["result"]["tension_max"] > 1e-2


def test_nonunimodular_map_check(tmp_path, capsys):
    cfg = {"fiber": {"kind": "non_unimodular", "alpha": 1.0, "beta": 0.0, "delta": 1.0},
           "field": {"kind": "left_invariant", "coeffs": [1, 0, 0]},
           "warp": {"kind": "linear", "slope": 1.0, "offset": 1.0}, "phi": {"kind": "euler", "c1": 1.0, "c2": 0.5}}
    code, out, _ = run(capsys, "--config", write(tmp_path, cfg), "--command", "map-check")
    rep = json.loads(out)["result"]
    assert code == 1 and rep["case_id"] == "1"


def test_sweep_over_warp_slope(tmp_path, capsys):
    cfg = {**HEIS, "fiber": {"kind": "unimodular", "lambda": [1, 1, 1]},
           "sweep": {"path": "/warp/slope", "values": [0.5, 1.0], "command": "map-check"}}
    code, out, _ = run(capsys, "--config", write(tmp_path, cfg), "--command", "sweep")
    rows = json.loads(out)["result"]["rows"]
    assert code == 0
    assert [r["exit_code"] for r in rows] == [0, 1]


def test_sweep_bad_path_recorded(tmp_path, capsys):
    cfg = {**HEIS, "sweep": {"path": "/warp/nope/x", "values": [1.0], "command": "check"}}
    code, out, _ = run(capsys, "--config", write(tmp_path, cfg), "--command", "sweep")
    (row,) = json.loads(out)["result"]["rows"]
    assert row["exit_code"] == 2 and "SchemaError" in row["error"]


@pytest.mark.parametrize("name", sorted(p.name for p in (Path(__file__).parents[1] / "configs").glob("*.json")))
def test_shipped_configs_validate(name):
    parse_config((Path(__file__).parents[1] / "configs" / name).read_text())
