import json
import subprocess
import sys

import pytest

from gridnet.cli import main


def run(argv, capsys):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture(autouse=True)
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("GRIDNET_OUTPUT_DIR", str(tmp_path))
    return tmp_path


def test_gamma_writes_outputs(capsys, outdir):
    code, out = run(["gamma", "--window", "5", "--out", "g.json", "--dot", "g.dot"], capsys)
    assert code == 0
    assert out["problems"] == [] and out["face_kinds"]["logarithmic"] == 5
    data = json.loads((outdir / "g.json").read_text())
    assert "labels" in data
    assert (outdir / "g.dot").read_text().startswith("graph")


def test_net_verify_needs_surgery(capsys, outdir):
    run(["gamma", "--window", "6", "--out", "g.json"], capsys)
    code, out = run(["net", "--from", "g.json", "--verify"], capsys)
    assert code == 1
    assert out["error"] == "assertion-failed" and out["invariant"] == "square-grid"
    assert out["witness"]["reason"] == "staircase"
    code, out = run(["net", "--from", "g.json", "--rewrite-spines", "--verify", "--svg", "n.svg",
                     "--out", "n.json"], capsys)
    assert code == 0 and out["square_grid"] and out["spines_valid"]
    assert (outdir / "n.svg").exists() and (outdir / "n.json").exists()


def test_qc_lemma1(capsys, outdir):
    code, out = run(["qc", "--lemma1", "--nx", "100", "--ny", "20", "--csv", "k.csv"], capsys)
    assert code == 0 and out["lemma1"]["pass"]
    assert (outdir / "k.csv").read_text().startswith("w_re,w_im,K,mu")


def test_qc_lemma2(capsys):
    code, out = run(["qc", "--lemma2", "--nx", "40", "--ny", "200"], capsys)
    assert code == 0
    s = out["lemma2"]
    assert s["M"] == 47 and s["real_preimage"]["ok"]
    assert s["band"]["sup_mu"] <= 0.5


def test_qc_small_constant_fails(capsys):
    code, out = run(["qc", "--lemma2", "--M", "20"], capsys)
    assert code == 1 and out["error"] == "constant-too-small"


def test_uniformize_deterministic(capsys, outdir):
    code, out = run(["uniformize", "--samples", "201", "--csv", "a.csv", "--table", "t.csv"], capsys)
    assert code == 0
    assert out["verdict"]["verdict"] == "hyperbolic-indicative"
    first = (outdir / "a.csv").read_bytes()
    run(["uniformize", "--samples", "201", "--csv", "a.csv"], capsys)
    assert (outdir / "a.csv").read_bytes() == first


def test_type_verdicts(capsys, outdir):
    code, out = run(["type", "--radii", "4,8,16,32", "--expect", "parabolic-indicative", "--out", "t.json"],
                    capsys)
    assert code == 0 and out["verdict"] == "parabolic-indicative"
    assert json.loads((outdir / "t.json").read_text())["verdict"] == out["verdict"]
    code, out = run(["type", "--labels", "spine-decay", "--radii", "4,8,16,32", "--expect",
                     "parabolic-indicative"], capsys)
    assert code == 1 and out["invariant"] == "type-verdict"


def test_type_rejects_bad_radii(capsys):
    code, out = run(["type", "--radii", "4,8,16"], capsys)
    assert code == 1 and out["error"] == "invalid-parameter"


@pytest.mark.parametrize("argv", [["gamma", "--window", "0"], ["nope"], ["qc", "--eta", "linear"], []])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gridnet", "gamma", "--window", "3"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["window"] == 3
