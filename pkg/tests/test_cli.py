import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rgnf import cli
from rgnf.polyvec import PolyVF

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_entry_point_version():
    out = subprocess.run([sys.executable, "-m", "rgnf.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("rgnf ")


# -- nf -------------------------------------------------------------------

def test_nf_sine_radial_coefficients(capsys):
    code, out, _ = run(capsys, "nf", "--config", CONFIGS / "sine_poly.json")
    assert code == 0
    doc = json.loads(out)
    assert doc["polar"][0]["radial"] == ["1/1", "-1/2", "1/12", "-1/144"]
    assert doc["polar"][0]["angular"] == ["0/1"] * 4


def test_nf_zero_perturbation_is_linear_part(capsys):
    code, out, _ = run(capsys, "nf", "--config", CONFIGS / "zero.json")
    assert code == 0
    doc = json.loads(out)
    assert all(PolyVF.from_dict(d).is_zero for d in doc["normal_form"])


def test_nf_text_and_latex(capsys, tmp_path):
    code, out, _ = run(capsys, "nf", "--config", CONFIGS / "sine_poly.json", "--format", "text")
    assert code == 0 and "eps^1:" in out
    code, _, _ = run(capsys, "nf", "--config", CONFIGS / "sine_poly.json", "--format", "latex", "--out", tmp_path)
    assert code == 0
    assert r"\begin{align*}" in (tmp_path / "nf.tex").read_text()
    assert json.loads((tmp_path / "nf.json").read_text())["order"] == 1


def test_nf_resonant_real_spectrum(capsys):
    code, out, _ = run(capsys, "nf", "--config", CONFIGS / "resonant_real.json")
    assert code == 0
    doc = json.loads(out)
    res = [r for r in doc["resonance"][0] if r["resonant"]]
    # 2*lambda1 = lambda2 makes x1^2 resonant in the second component
    assert {"comp": 2, "exp": [2, 0]} in [{"comp": r["comp"], "exp": r["exp"]} for r in res]


def test_nf_cinf_table_is_bessel(capsys):
    import scipy.special as ssp

    code, out, _ = run(capsys, "nf", "--config", CONFIGS / "sine_cinf.json")
    assert code == 0
    t = json.loads(out)["polar_table"]
    assert np.max(np.abs(np.array(t["radial_1"]) - ssp.j1(2 * np.array(t["r"])))) < 1e-8
    assert np.max(np.abs(np.array(t["angular_1"]))) < 1e-10


def test_nf_output_is_deterministic(capsys):
    outs = [run(capsys, "nf", "--config", CONFIGS / "sine_poly.json")[1] for _ in range(2)]
    assert outs[0] == outs[1]


# -- exit codes -----------------------------------------------------------

def test_missing_config_is_usage_error(capsys):
    code, _, err = run(capsys, "nf")
    assert code == 2 and "--config" in err


def test_bad_config_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"dim": 2}')
    code, _, err = run(capsys, "nf", "--config", p)
    assert code == 2 and "configuration error" in err
    code, _, _ = run(capsys, "nf", "--config", tmp_path / "missing.json")
    assert code == 2


def test_order_out_of_range(capsys):
    code, _, _ = run(capsys, "nf", "--config", CONFIGS / "sine_poly.json", "--order", "9")
    assert code == 2
    code, _, _ = run(capsys, "nf", "--config", CONFIGS / "sine_cinf.json", "--order", "3")
    assert code == 2


def test_numeric_failure_exit_code(capsys, tmp_path):
    d = json.loads((CONFIGS / "sine_poly.json").read_text())
    d["options"]["x0"] = [40.0, 0.0]
    d["order"] = 3
    p = tmp_path / "far.json"
    p.write_text(json.dumps(d))
    code, _, err = run(capsys, "simulate", "--config", p, "--eps", "2.0", "--out", tmp_path / "o")
    assert code == 3 and "numeric failure" in err


def test_bad_cli_lists(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--config", CONFIGS / "sine_poly.json", "--x0", "a,b", "--out", tmp_path)
    assert code == 2
    code, _, _ = run(capsys, "simulate", "--config", CONFIGS / "sine_poly.json", "--t-span", "3,1", "--out", tmp_path)
    assert code == 2


# -- simulate -------------------------------------------------------------

def test_simulate_writes_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--config", CONFIGS / "sine_poly.json", "--out", tmp_path)
    assert code == 0
    for name in ("original.csv", "normal_form.csv", "transformed.csv", "summary.json"):
        assert (tmp_path / name).exists()
    assert (tmp_path / "original.csv").read_text().splitlines()[0] == "t,x1,x2"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary == json.loads(out)


def test_simulate_is_deterministic(capsys, tmp_path):
    texts = []
    for k in range(2):
        code, _, _ = run(capsys, "simulate", "--config", CONFIGS / "sine_poly.json", "--t-span", "0,5",
                         "--out", tmp_path / str(k))
        assert code == 0
        texts.append([(tmp_path / str(k) / f).read_bytes() for f in ("summary.json", "original.csv", "transformed.csv")])
    assert texts[0] == texts[1]


def test_simulate_unperturbed_radius_is_constant(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--config", CONFIGS / "sine_poly.json", "--eps", "0",
                     "--x0", "1.3,0", "--out", tmp_path)
    assert code == 0
    data = np.loadtxt(tmp_path / "original.csv", delimiter=",", skiprows=1)
    r = np.hypot(data[:, 1], data[:, 2])
    assert np.ptp(r) < 1e-9
    assert json.loads((tmp_path / "summary.json").read_text())["max_discrepancy"] < 1e-12


def test_simulate_zero_config_matches_linear_flow(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--config", CONFIGS / "zero.json", "--out", tmp_path)
    assert code == 0
    data = np.loadtxt(tmp_path / "original.csv", delimiter=",", skiprows=1)
    t = data[:, 0]
    z1 = data[:, 1] + 1j * data[:, 2]
    assert np.max(np.abs(z1 - (0.3 + 0.1j) * np.exp(1j * t))) < 1e-9


@pytest.mark.parametrize("name", ["sine_poly", "sine_cinf"])
def test_first_order_discrepancy_is_second_order_in_eps(capsys, tmp_path, name):
    eps = [0.1, 0.05, 0.025]
    disc = []
    for e in eps:
        code, out, _ = run(capsys, "simulate", "--config", CONFIGS / f"{name}.json", "--eps", e,
                           "--t-span", "0,10", "--out", tmp_path)
        assert code == 0
        disc.append(json.loads(out)["max_discrepancy"])
    assert np.polyfit(np.log(eps), np.log(disc), 1)[0] > 2 - 0.4


# -- verify and props -----------------------------------------------------

def test_verify_single_suite_json_is_reproducible(capsys):
    outs = [run(capsys, "verify", "--suite", "hierarchy", "--seed", "3")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    doc = json.loads(outs[0])
    assert doc["passed"] and doc["seed"] == 3 and doc["suites"][0]["suite"] == "hierarchy"


def test_verify_text(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "scaling", "--format", "text")
    assert code == 0 and out.startswith("PASS  scaling")


def test_verify_failure_exit_code(capsys, monkeypatch):
    from rgnf import verify as vf

    def failing(name, seed):
        res = vf.SuiteResult(name)
        res.add("forced", False)
        return res

    monkeypatch.setattr(vf, "run", failing)
    code, out, _ = run(capsys, "verify", "--suite", "scaling")
    assert code == 4 and json.loads(out)["passed"] is False


def test_props_command(capsys):
    code, out, _ = run(capsys, "props", "--count", "20", "--seed", "1")
    assert code == 0
    assert json.loads(out)["passed"]
