import io
import json
import os
from pathlib import Path

import pytest

from uai.cli import dumps, run

GOLDEN = Path(__file__).parent / "golden"

# name -> argv; run inside tests/golden with relative paths so the echoed config is location-free
CASES = {
    "ce_gaussian": ["ce", "--utility", "exp", "--gamma", "1", "--gaussian", "0.08,0.2"],
    "ce_input_powerlike": ["ce", "--utility", "powerlike:alpha=1,beta=2", "--gamma", "2.5", "--input", "mixed.csv"],
    "index_gains": ["index", "--utility", "exp", "--input", "gains.csv"],
    "index_mixed": ["index", "--utility", "modexp", "--input", "mixed.csv", "--benchmark-rate", "0.01"],
    "perf_mixed": ["perf", "--utility", "exp", "--input", "mixed.csv", "--benchmark", "0.02"],
    "maximize": ["maximize", "--candidate", "mixed=mixed.csv", "--candidate", "alt=alt.csv",
                 "--benchmark", "0.0"],
    "longrun_fgn": ["longrun", "--model", "fgn:hurst=0.3,sigma=0.2,mean=0.05", "--tgrid", "8:64:x2",
                    "--paths", "200", "--seed", "7", "--method", "empirical"],
    "longrun_iid_exact": ["longrun", "--model", "iid:m=0.08,sigma=0.2", "--lambda", "0.02",
                          "--tgrid", "4,8,16"],
    "regularity_iterexp": ["regularity", "--utility", "iterexp", "--gamma-grid", "0.1:10:8",
                           "--x-grid=-5:5:11"],
    "regularity_exp": ["regularity", "--utility", "exp"],
    "duality": ["duality", "--m", "0.08", "--sigma", "0.2", "--lambda", "0.02", "--paths", "20000",
                "--seed", "3"],
}


def invoke(argv, cwd=GOLDEN):
    out, err = io.StringIO(), io.StringIO()
    old = os.getcwd()
    os.chdir(cwd)
    try:
        code = run(argv, stdout=out, stderr=err)
    finally:
        os.chdir(old)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden_byte_identical(name, monkeypatch):
    monkeypatch.setenv("UAI_THREADS", "2")
    a, b = invoke(CASES[name]), invoke(CASES[name])
    assert a[0] == 0, a[2]
    assert a[1] == b[1]
    if os.environ.get("UAI_REGEN_GOLDEN") == "1":
        (GOLDEN / f"{name}.json").write_text(a[1])
    assert a[1] == (GOLDEN / f"{name}.json").read_text()


def test_thread_count_does_not_change_output(monkeypatch):
    monkeypatch.setenv("UAI_THREADS", "1")
    one = invoke(CASES["maximize"])[1]
    monkeypatch.setenv("UAI_THREADS", "4")
    assert invoke(CASES["maximize"])[1] == one


# examples

def test_ce_gaussian_example():
    code, out, _ = invoke(CASES["ce_gaussian"])
    doc = json.loads(out)
    assert code == 0 and doc["mu"] == pytest.approx(-0.06, abs=1e-16)


def test_index_nonnegative_example():
    doc = json.loads(invoke(CASES["index_gains"])[1])
    assert doc["alpha"] == "inf" and doc["diagnostic"] == "nonneg_position"


def test_regularity_iterexp_reports_grid():
    doc = json.loads(invoke(["regularity", "--utility", "iterexp"])[1])
    assert doc["verdict"] in ("regular_on_grid", "violated")
    assert "witness" in doc and "config" in doc


def test_config_echoes_defaults_and_seed():
    doc = json.loads(invoke(CASES["longrun_iid_exact"])[1])
    cfg = doc["config"]
    assert cfg["seed"] == 0 and cfg["paths"] == 2000 and cfg["method"] == "auto"
    assert cfg["command"] == "longrun" and cfg["utility"] == "exp"


def test_single_json_document_on_stdout():
    for name in ("longrun_fgn", "duality"):
        out = invoke(CASES[name])[1]
        assert out.endswith("\n") and out.count("\n") == 1
        json.loads(out)


# exit codes

@pytest.mark.parametrize("argv", [
    [],
    ["ce", "--gamma", "1"],
    ["ce", "--gamma", "1", "--gaussian", "0.1,0.2", "--input", "x.csv"],
    ["ce", "--gamma", "1", "--gaussian", "0.1,0.2", "--utility", "modexp"],
    ["index", "--input", "gains.csv", "--bogus"],
    ["index", "--utility", "nope", "--input", "gains.csv"],
    ["longrun", "--model", "iid:m=0.1", "--tgrid", "8:4:x2"],
    ["simulate", "--model", "fgn", "--n", "10"],
], ids=["none", "ce-no-source", "ce-two-sources", "gaussian-non-exp", "unknown-flag", "bad-utility",
        "bad-tgrid", "simulate-no-out"])
def test_usage_errors_exit_2(argv):
    code, out, err = invoke(argv)
    assert code == 2 and out == "" and err


@pytest.mark.parametrize("argv", [
    ["index", "--input", "missing.csv"],
    ["index", "--utility", "linear", "--input", "mixed.csv"],
    ["duality", "--m", "0.08", "--sigma", "-1", "--lambda", "0.0"],
    ["ce", "--utility", "exp", "--gamma", "0", "--input", "mixed.csv"],
], ids=["missing-file", "linear-index", "bad-sigma", "zero-gamma"])
def test_computation_errors_exit_1_with_json(argv):
    code, out, _ = invoke(argv)
    assert code == 1
    doc = json.loads(out)
    assert set(doc["error"]) == {"type", "message"} and "config" in doc


# round trip

def test_simulate_then_index_roundtrip(tmp_path):
    code, out, err = invoke(["simulate", "--model", "fgn", "--hurst", "0.3", "--sigma", "0.2", "--mean", "0.05",
                             "--n", "500", "--seed", "4", "--out", "r.csv"], cwd=tmp_path)
    assert code == 0 and err == ""
    assert json.loads(out)["n"] == 500
    code, out, err = invoke(["index", "--input", "r.csv"], cwd=tmp_path)
    assert code == 0 and err == ""
    assert json.loads(out)["kind"] in ("zero", "finite", "infinite")
    again = invoke(["simulate", "--model", "fgn:hurst=0.3,sigma=0.2,mean=0.05", "--n", "500", "--seed", "4",
                    "--out", "s.csv"], cwd=tmp_path)
    assert again[0] == 0
    assert (tmp_path / "r.csv").read_bytes() == (tmp_path / "s.csv").read_bytes()


# serialization

def test_dumps_conventions():
    assert dumps({"a": float("inf"), "b": float("-inf"), "c": float("nan"), "d": 0.1}) == \
        '{"a": "inf", "b": "-inf", "c": null, "d": 0.10000000000000001}'
    assert dumps({"z": 1, "a": 2}) == '{"z": 1, "a": 2}'
