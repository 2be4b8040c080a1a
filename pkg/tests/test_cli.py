import json
import subprocess
import sys

import pytest

from ifsm.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", "market", "--grid", "17")
    assert code == EXIT_OK and json.loads(out)["normalized"] is True


def test_validation_failure_exit_code(capsys, tmp_path):
    doc = {"domain": {"lower": [0], "upper": [1]}, "maps": [{"label": "a", "matrix": [[1.0]], "offset": [0.5]}],
           "apriori": [1.0], "weighting": {"density": [1.0]}}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert run(capsys, "validate", str(path))[0] == EXIT_VALIDATION
    doc["apriori"] = [-1.0]
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "spectral", str(path))
    assert code == EXIT_VALIDATION and "apriori/0" in err


def test_io_exit_code(capsys, tmp_path):
    assert run(capsys, "validate", str(tmp_path / "missing.json"))[0] == EXIT_IO
    assert run(capsys, "ingest", str(tmp_path / "missing.csv"))[0] == EXIT_IO


def test_numeric_exit_code(capsys, tmp_path):
    doc = {"domain": {"lower": [0], "upper": [1]}, "maps": [{"label": "r", "exprs": ["1 - x"]}],
           "apriori": [1.0], "weighting": {"potential": "1 + x"}, "grid": 9}
    path = tmp_path / "flip.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "equilibrium", str(path), "--tol", "1e-14")
    assert code == EXIT_NUMERIC and "normalize" in err


def test_spectral_and_pressure(capsys, tmp_path):
    code, out, _ = run(capsys, "spectral", "e2", "--gelfand", "20", "--export", str(tmp_path / "B.bin"), "--grid", "64")
    assert code == 0 and json.loads(out)["gelfand"]["N"] == 20
    assert (tmp_path / "B.bin").read_bytes()[:8] == b"IFSMMAT1"
    code, out, _ = run(capsys, "pressure", "e2", "--out", str(tmp_path / "p.json"))
    assert json.loads(out)["pressure"] == pytest.approx(0.6201145069582775, abs=1e-6)
    assert json.loads((tmp_path / "p.json").read_text()) == json.loads(out)


def test_invariant_entropy_equilibrium(capsys, tmp_path):
    code, out, _ = run(capsys, "invariant", "market", "--grid", "33", "--measure-out", str(tmp_path / "nu.csv"))
    assert code == 0 and json.loads(out)["mean"] == pytest.approx([0.46, 0.44], abs=1e-12)
    assert len((tmp_path / "nu.csv").read_text().splitlines()) == 33 * 33
    code, out, _ = run(capsys, "entropy", "market", "--grid", "33")
    rep = json.loads(out)
    assert code == 0 and rep["h_a"] <= rep["h_v"] <= 1e-9
    code, out, _ = run(capsys, "equilibrium", "e1", "--grid", "65")
    assert code == 0 and json.loads(out)["equilibrium_defect"] < 1e-12


def test_probe_pressure(capsys):
    code, out, _ = run(capsys, "probe-pressure", "e2", "--directions", "2", "--grid", "256")
    rep = json.loads(out)
    assert code == 0 and rep["convex"] and rep["min_subgradient_slack"] > -1e-6


def test_chaos_outputs_are_deterministic(capsys, tmp_path):
    outs = []
    for k in range(2):
        pgm = tmp_path / f"w{k}.pgm"
        hist = tmp_path / f"h{k}.csv"
        code, out, _ = run(capsys, "chaos", "market", "--steps", "20000", "--seed", "42", "--level", "3",
                           "--pgm", str(pgm), "--block", "2", "--hist-out", str(hist))
        assert code == 0
        outs.append((pgm.read_bytes(), hist.read_bytes(), json.loads(out)["cells"]))
    assert outs[0] == outs[1]
    assert outs[0][0].startswith(b"P2\n16 16\n255\n")


def test_ingest_and_emit(capsys, tmp_path):
    csv = tmp_path / "s.csv"
    csv.write_text("price\n100\n99\n98.9999\n98.99995\n99.1\n")
    cfg = tmp_path / "c.json"
    code, out, _ = run(capsys, "ingest", str(csv), "--emit-config", str(cfg))
    assert code == 0 and json.loads(out)["symbols"] == "ABCD"
    code, out, _ = run(capsys, "validate", str(cfg), "--grid", "9")
    assert code == 0


def test_ingest_refuses_unobserved_band(capsys, tmp_path):
    csv = tmp_path / "s.csv"
    csv.write_text("price\n100\n99\n99.9999\n100.00005\n101\n")
    cfg = tmp_path / "c.json"
    code, _, err = run(capsys, "ingest", str(csv), "--emit-config", str(cfg))
    assert code == EXIT_VALIDATION and "B" in err and not cfg.exists()


def test_ingest_bad_cell(capsys, tmp_path):
    csv = tmp_path / "s.csv"
    csv.write_text("price\n100\nabc\n")
    code, _, err = run(capsys, "ingest", str(csv))
    assert code == EXIT_VALIDATION and "3" in err


def test_verify(capsys):
    code, out, err = run(capsys, "verify", "market", "--grid", "17")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    assert err.count("[PASS]") == len(rep["checks"])


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ifsm.cli", "validate", "e1", "--grid", "9"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["passed"]
