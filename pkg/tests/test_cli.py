import json
import subprocess
import sys

import pytest

from ahs_crosstalk.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, run
from ahs_crosstalk.program import reference_program
from ahs_crosstalk.serialization import serialize_program


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


def rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_control_json(tmp_path):
    cfg = write(tmp_path, "c.json", {"seed": 1, "shots": 500, "repeats": 4})
    out = tmp_path / "control.json"
    assert run(["control", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert len(doc["expected_counts"]) == 3
    assert doc["expected_counts"][2] < 5
    assert doc["seed"] == 1 and doc["artifact"] == "ahs-control/1"
    assert len(doc["program_sha256"]) == 64 and doc["config"]["shots"] == 500


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, "c.json", {"seed": 4, "shots": 200, "repeats": 2})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["control", "--config", str(cfg), "--out", str(a)])
    run(["control", "--config", str(cfg), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_seed_override(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"seed": 4, "shots": 200, "repeats": 2})
    run(["control", "--config", str(cfg), "--seed", "9"])
    assert json.loads(capsys.readouterr().out)["seed"] == 9


def test_missing_seed(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"shots": 100})
    assert run(["control", "--config", str(cfg)]) == EXIT_CONFIG
    assert "seed" in capsys.readouterr().err


def test_program_file(tmp_path, capsys):
    write(tmp_path, "p.json", serialize_program(reference_program((12, 12))))
    cfg = write(tmp_path, "c.json", {"seed": 1, "shots": 100, "repeats": 1, "program": {"file": "p.json"}})
    assert run(["control", "--config", str(cfg)]) == EXIT_OK


def test_malformed_program_reports_location(tmp_path, capsys):
    doc = json.loads(serialize_program(reference_program((12, 12))))
    doc["register"]["sites"][1] = [1.0]
    write(tmp_path, "p.json", doc)
    cfg = write(tmp_path, "c.json", {"seed": 1, "program": {"file": "p.json"}})
    assert run(["control", "--config", str(cfg)]) == EXIT_CONFIG
    assert "sites[1]" in capsys.readouterr().err


def test_bad_json(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", "{seed: 1")
    assert run(["control", "--config", str(cfg)]) == EXIT_CONFIG
    assert "line 1" in capsys.readouterr().err


def test_unknown_key(tmp_path):
    cfg = write(tmp_path, "c.json", {"seed": 1, "shots_per_cell": 10})
    assert run(["control", "--config", str(cfg)]) == EXIT_CONFIG


def test_missing_file(tmp_path):
    assert run(["control", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG


def test_heatmap_csv(tmp_path):
    cfg = write(tmp_path, "h.json", {"seed": 2, "shots": 200})
    out = tmp_path / "h.csv"
    assert run(["heatmap", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    meta = json.loads(text.splitlines()[0][2:])
    assert meta["artifact"] == "ahs-heatmap/1" and meta["seed"] == 2
    header, body = rows(text)
    assert header == ["ix", "iy", "x_um", "y_um", "rf"] and len(body) == 20
    assert all(0 <= float(r[4]) <= 1 for r in body)


def test_sweep_too_close(tmp_path, capsys):
    cfg = write(tmp_path, "s.json", {"seed": 1, "shots": 100, "repeats": 1, "distances_um": [3]})
    assert run(["sweep", "--config", str(cfg)]) == EXIT_CONFIG
    assert "spacing" in capsys.readouterr().err.lower()


def test_sweep_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, "s.json", {"seed": 5, "shots": 200, "repeats": 3, "distances_um": [5, 12]})
    run(["sweep", "--config", str(cfg)])
    first = capsys.readouterr().out
    run(["sweep", "--config", str(cfg)])
    assert capsys.readouterr().out == first
    header, body = rows(first)
    assert header == ["distance_um", "rf", "rf_err"] and [r[0] for r in body] == ["5.0", "12.0"]


def test_mtd_outputs(tmp_path):
    cfg = write(tmp_path, "m.json", {"seed": 3, "shots": 500, "repeats": 2, "mtd": {"batches": 5}})
    out = tmp_path / "m.csv"
    assert run(["mtd", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    header, body = rows(out.read_text())
    assert header == ["batch", "dx", "dy", "rf"] and len(body) == 5
    summary = json.loads((tmp_path / "m.summary.json").read_text())
    assert summary["rf_mtd"] > summary["rf_static"]
    assert summary["shots"] == 500 and len(summary["post_measure_moves"]) == 5


def test_mtd_zero_batches(tmp_path, capsys):
    cfg = write(tmp_path, "m.json", {"seed": 3, "mtd": {"batches": 0}})
    assert run(["mtd", "--config", str(cfg)]) == EXIT_CONFIG
    assert "batches" in capsys.readouterr().err


def test_mtd_uneven_shots(tmp_path):
    cfg = write(tmp_path, "m.json", {"seed": 3, "shots": 1001})
    assert run(["mtd", "--config", str(cfg)]) == EXIT_CONFIG


def test_mtd_attacker_disabled(tmp_path, capsys):
    cfg = write(tmp_path, "m.json", {"seed": 3, "shots": 500, "repeats": 4, "attack": {"enabled": False}})
    assert run(["mtd", "--config", str(cfg)]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["rf_static"] > 0.9 and doc["rf_mtd"] > 0.9


def test_numeric_failure(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"seed": 1, "shots": 10, "repeats": 1, "integrator": {"dt": 1e-6}})
    assert run(["control", "--config", str(cfg)]) == EXIT_NUMERIC
    assert "numerical" in capsys.readouterr().err


def test_entry_point(tmp_path):
    cfg = write(tmp_path, "c.json", {"seed": 1, "shots": 50, "repeats": 1})
    proc = subprocess.run([sys.executable, "-m", "ahs_crosstalk.cli", "control", "--config", str(cfg)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "expected_counts" in proc.stdout


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        run(["nonsense"])
    assert exc.value.code == 2
