import json
import subprocess
import sys

import numpy as np
import pytest

from netsteer import qcore, schemas
from netsteer.cli import EXIT_INCOMPLETE, EXIT_INVALID, EXIT_RESOURCE, main, sig


@pytest.fixture(autouse=True)
def no_output_dir(monkeypatch):
    monkeypatch.delenv("NETSTEER_OUTPUT_DIR", raising=False)


def run_json(capsys, *argv):
    assert main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def csv_body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_bound_brute(capsys):
    doc = run_json(capsys, "bound", "--n", "4", "--nc", "2", "--method", "brute")
    assert doc["results"][0]["bound"] == pytest.approx(0.683013, abs=1e-6)
    assert doc["config"]["method"] == "brute"
    schemas.validate(doc, "bound")


def test_bound_closed(capsys):
    doc = run_json(capsys, "bound", "--n", "3", "--method", "closed")
    assert doc["results"][0]["bound"] == pytest.approx(0.666667, abs=1e-6)


def test_bound_small_grid_csv(capsys):
    assert main(["bound", "--table", "s1", "--format", "csv"]) == 0
    rows = csv_body(capsys.readouterr().out)
    assert rows[0] == "n,n_c,method,protocol,bound"
    assert len(rows) == 1 + 15


def test_bound_large_n_rows_closed(capsys):
    doc = run_json(capsys, "bound", "--table", "s2", "--method", "closed")
    ones = [r["bound"] for r in doc["results"] if r["n_c"] == 1]
    assert ones == pytest.approx([0.6569, 0.6564, 0.6560, 0.6558, 0.6556, 0.6555], abs=5e-4)


def test_bound_resource_limit(capsys):
    assert main(["bound", "--n", "8", "--nc", "3", "--method", "brute"]) == EXIT_RESOURCE
    assert "resource limit" in capsys.readouterr().err


def test_bound_needs_size(capsys):
    assert main(["bound"]) == EXIT_INVALID


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit):
        main(["bound", "--n", "3", "--bogus"])


def test_decompose(capsys):
    doc = run_json(capsys, "decompose", "--n", "3", "--protocol", "ghz-xy")
    assert len(doc["terms"]) == 7 and doc["setting_count"] == 4
    doc = run_json(capsys, "decompose", "--n", "4", "--protocol", "pauli")
    assert len(doc["terms"]) == 16 and doc["setting_count"] == 9
    schemas.validate(doc, "decomposition")


def test_decompose_two_nodes_rebuilds_bell_projector(capsys):
    doc = run_json(capsys, "decompose", "--n", "2")
    from netsteer.protocol import Decomposition

    d = Decomposition.from_dict({k: doc[k] for k in ("n", "protocol", "terms")})
    bell = qcore.ghz_state(2)
    assert np.linalg.norm(d.matrix() - np.outer(bell, bell)) < 1e-8


def test_simulate_ghz(capsys):
    doc = run_json(capsys, "simulate", "--scenario", "ghz", "--n", "4", "--shots", "100000", "--seed", "7")
    assert doc["steering_positive"] and doc["config"]["seed"] == 7
    schemas.validate(doc, "certification")


def test_simulate_hybrid(capsys):
    doc = run_json(capsys, "simulate", "--scenario", "hybrid", "--case", "e3_4", "--shots", "100000")
    assert doc["ew_positive"] and not doc["steering_positive"]


def test_simulate_noise_at_threshold_is_marginal(capsys):
    doc = run_json(capsys, "simulate", "--scenario", "noise", "--n", "3", "--p", "0.38095")
    assert doc["marginal_flag"]


def test_simulate_density_file(tmp_path, capsys):
    rho = qcore.white_noise_mix(qcore.ghz_state(3), 0.1)
    path = tmp_path / "rho.json"
    path.write_text(json.dumps([[[z.real, z.imag] for z in row] for row in rho]))
    doc = run_json(capsys, "simulate", "--scenario", "density", "--density", str(path), "--shots", "20000")
    assert doc["n"] == 3 and doc["steering_positive"]


def test_simulate_then_certify_round_trip(tmp_path, capsys):
    records = tmp_path / "r.json"
    sim = run_json(capsys, "simulate", "--scenario", "noise", "--n", "3", "--p", "0.2",
                   "--records", str(records), "--seed", "5")
    cert = run_json(capsys, "certify", "--records", str(records))
    strip = lambda d: {k: v for k, v in d.items() if k != "config"}
    assert strip(sim) == strip(cert)
    schemas.validate(json.loads(records.read_text()), "records")


def test_certify_protocol_mismatch(tmp_path, capsys):
    records = tmp_path / "r.json"
    run_json(capsys, "simulate", "--scenario", "ghz", "--n", "3", "--records", str(records), "--shots", "100")
    assert main(["certify", "--records", str(records), "--protocol", "pauli"]) == EXIT_INVALID


def test_certify_all_zero_expectations(tmp_path, capsys):
    contexts = [[4, 4, 4], [1, 1, 1], [2, 2, 2], [3, 3, 3]]
    counts = {format(i, "03b"): 1 for i in range(8)}
    doc = {"n": 3, "protocol": "ghz-xy", "records": [{"setting": c, "shots": 8, "counts": counts} for c in contexts]}
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(doc))
    out = run_json(capsys, "certify", "--records", str(path))
    assert out["fidelity"] == pytest.approx(1 / 8)


def test_certify_truncated_file_names_missing_setting(tmp_path, capsys):
    records = tmp_path / "r.json"
    run_json(capsys, "simulate", "--scenario", "ghz", "--n", "3", "--records", str(records), "--shots", "100")
    doc = json.loads(records.read_text())
    doc["records"] = [r for r in doc["records"] if r["setting"] != [1, 1, 1]]
    records.write_text(json.dumps(doc))
    assert main(["certify", "--records", str(records)]) == EXIT_INCOMPLETE
    assert "(1, 1, 1)" in capsys.readouterr().err


def test_certify_schema_violation(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 3, "protocol": "ghz-xy", "records": [{"setting": [4, 4, 4], "shots": "x", "counts": {}}]}))
    assert main(["certify", "--records", str(path)]) == EXIT_INVALID
    assert "$.records[0].shots" in capsys.readouterr().err


def test_certify_missing_file(tmp_path, capsys):
    assert main(["certify", "--records", str(tmp_path / "absent.json")]) == EXIT_INVALID


def test_noise_table(capsys):
    assert main(["noise", "--n-max", "14"]) == 0
    rows = csv_body(capsys.readouterr().out)
    assert rows[0] == "n,p_xy,p_pauli" and len(rows) == 14
    values = {int(r.split(",")[0]): tuple(map(float, r.split(",")[1:])) for r in rows[1:]}
    assert values[3] == pytest.approx((0.38095, 0.36230), abs=5e-5)
    assert values[4][0] == values[4][1]
    assert all(a >= b for a, b in values.values())


def test_noise_rejects_large_n(capsys):
    assert main(["noise", "--n-max", "15"]) == EXIT_INVALID


def test_config_echo_in_csv(capsys):
    assert main(["noise", "--n-max", "3", "--seed", "4"]) == 0
    out = capsys.readouterr().out
    assert "# command=\"noise\"" in out and "# seed=4" in out


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NETSTEER_OUTPUT_DIR", str(tmp_path / "out"))
    assert main(["simulate", "--scenario", "ghz", "--n", "3", "--shots", "100"]) == 0
    assert capsys.readouterr().out == ""
    assert (tmp_path / "out" / "certification.json").exists()
    assert (tmp_path / "out" / "records.json").exists()


def test_explicit_output_file(tmp_path, capsys):
    target = tmp_path / "bound.csv"
    assert main(["bound", "--n", "5", "--method", "closed", "--format", "csv", "-o", str(target)]) == 0
    assert csv_body(target.read_text())[1].endswith("0.658927083")


def test_outputs_use_nine_significant_digits():
    assert sig(2 / 3) == 0.666666667
    assert sig({"a": [1 / 3, True, None, 5]}) == {"a": [0.333333333, True, None, 5]}


def test_commands_are_deterministic(capsys):
    argv = ["simulate", "--scenario", "noise", "--n", "4", "--p", "0.3", "--shots", "5000", "--seed", "2"]
    assert run_json(capsys, *argv) == run_json(capsys, *argv)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "netsteer.cli", "bound", "--n", "3", "--method", "closed",
                           "--format", "csv"], capture_output=True, text=True, check=True)
    assert csv_body(proc.stdout)[1] == "3,1,closed,ghz-xy,0.666666667"
