"""Runner behavior: artifact shapes, determinism, exit codes."""

import json

import pytest

from skewstab.cli import main

DOUBLING_DOC = {
    "base": {"kind": "linear", "l": 2},
    "fiber": {"kind": "translation", "theta": "golden",
              "indicator": [["0.5", "1"]]},
}

BAHH_FAMILY = {
    "kind": "prop-bahh",
    "theta": "liouville_j:3",
    "js": [1, 2],
    "gamma": 3.0,
    "gamma_prime": 2.5,
}


@pytest.fixture()
def doubling_path(tmp_path):
    p = tmp_path / "doubling.json"
    p.write_text(json.dumps(DOUBLING_DOC))
    return str(p)


def test_bound_prints_value(capsys):
    assert main(["bound", "--phi", "power:1,1", "--M", "1", "--C", "1",
                 "--eps", "0.01"]) == 0
    assert capsys.readouterr().out.strip() == "0.302843"


def test_bound_bad_phi(capsys):
    assert main(["bound", "--phi", "cubic:1", "--M", "1", "--C", "1",
                 "--eps", "0.01"]) == 2
    assert "phi" in capsys.readouterr().err


def test_validate(doubling_path, capsys):
    assert main(["validate", "--config", doubling_path, "--N", "1024"]) == 0
    assert capsys.readouterr().out.strip() == "ok"
    assert main(["validate", "--config", doubling_path, "--N", "100"]) == 0
    assert "multiple of branch count" in capsys.readouterr().out


def test_missing_config_exits_2(capsys):
    assert main(["validate", "--config", "/no/such/file.json"]) == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(dict(DOUBLING_DOC, junk=1)))
    assert main(["norm", "--config", str(p), "--measure", str(p)]) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_norm_lebesgue(doubling_path, tmp_path, capsys):
    m = tmp_path / "lebesgue.json"
    m.write_text(json.dumps(
        {"builtin": "lebesgue", "n_cells": 64, "fiber_atoms": 256}))
    assert main(["norm", "--config", doubling_path, "--measure", str(m)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert (doc["l1"], doc["var_p"], doc["pbv"]) == (1.0, 0.0, 1.0)


def test_decay_artifacts(doubling_path, tmp_path, capsys):
    args = ["decay", "--config", doubling_path, "--nmax", "12", "--N", "64",
            "--out-dir", str(tmp_path), "--out", "decay.csv"]
    assert main(args) == 0
    lines = (tmp_path / "decay.csv").read_text().splitlines()
    assert lines[0] == "n,norm"
    assert len(lines) == 14  # header + n = 0..12, no silent drops
    assert lines[1] == "0,0.5"
    meta = json.loads((tmp_path / "decay.csv.meta.json").read_text())
    assert meta["command"] == "decay"
    assert meta["seed"] == 0
    assert meta["config"]["system"] == DOUBLING_DOC
    assert meta["partial"] is False


def test_decay_rerun_byte_identical(doubling_path, tmp_path):
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        assert main(["decay", "--config", doubling_path, "--nmax", "8",
                     "--N", "64", "--out-dir", str(tmp_path / d),
                     "--out", "decay.csv"]) == 0
    for name in ("decay.csv", "decay.csv.meta.json"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_sweep_artifacts(tmp_path):
    p = tmp_path / "family.json"
    p.write_text(json.dumps(BAHH_FAMILY))
    assert main(["sweep", "--config", str(p), "--gamma", "3.0",
                 "--out-dir", str(tmp_path), "--out", "sweep.csv"]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "delta,distance,lower_bound,upper_bound_fit"
    assert len(lines) == 3  # one row per family member
    meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
    assert meta["results"]["lower_ok"] == [True, True]
    assert meta["results"]["upper_ok"] == [False, True]


def test_invariant_exit_codes(tmp_path):
    p = tmp_path / "precomposed.json"
    p.write_text(json.dumps({
        "base": {"kind": "linear_precomposed", "l": 2,
                 "sigma": {"kind": "sine", "amplitude": 0.01}},
        "fiber": {"kind": "translation", "theta": "golden",
                  "indicator": [["0.5", "1"]]},
    }))
    args = ["invariant", "--config", str(p), "--N", "64",
            "--fiber-atoms", "256", "--tol", "1e-12", "--nmax", "3",
            "--out-dir", str(tmp_path), "--out", "inv.json"]
    assert main(args) == 3
    meta = json.loads((tmp_path / "inv.json.meta.json").read_text())
    assert meta["partial"] is True
    assert main(args + ["--allow-partial"]) == 0


def test_invariant_writes_measure(doubling_path, tmp_path):
    assert main(["invariant", "--config", doubling_path, "--N", "32",
                 "--fiber-atoms", "128", "--tol", "1e-4", "--nmax", "200",
                 "--out-dir", str(tmp_path), "--out", "inv.json"]) == 0
    doc = json.loads((tmp_path / "inv.json").read_text())
    assert doc["n_cells"] == 32
    assert len(doc["fibers"]) == 32


def test_example_prop_bahh(capsys):
    assert main(["example", "prop-bahh", "--j", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["k"] == 16
    assert doc["closed_form_distance"] == "0.015625"
    assert doc["lower_bound_gamma_prime"]["pass"] is True
    assert doc["lower_bound_inverse_k"]["pass"] is True


def test_example_prop_30(capsys):
    assert main(["example", "prop-30", "--j", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value_float"] == pytest.approx(2 ** -8 + 2 ** -32)
    assert doc["lebesgue_value"] == "0"
    assert doc["bounds"]["half_amplitude"]["pass"] is True
    assert doc["bounds"]["sqrt_delta"]["pass"] is True


def test_example_prop_30_refusal(capsys):
    assert main(["example", "prop-30", "--j", "3"]) == 2
    assert "refused" in capsys.readouterr().err


def test_diophantine(capsys):
    assert main(["diophantine", "--theta", "golden",
                 "--depth", "10000"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert 0.9 < doc["gamma_hat"] < 1.1
    assert doc["is_rational"] is False
    assert all(len(s) == 3 for s in doc["samples"])
