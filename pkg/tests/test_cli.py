import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from usqed.cli import main, run


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def invoke(tmp_path, command, cfg, *extra, env=None):
    path = write_cfg(tmp_path, cfg)
    return subprocess.run([sys.executable, "-m", "usqed.cli", command, "--config", path, *extra],
                          capture_output=True, text=True, env={**os.environ, **(env or {})})


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# usqed ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


SPECTRUM = {"model": {"omega": 1.0, "Omega": 0.6, "g": 0.0}, "methods": ["exact", "jc"], "n_levels": 4}
STEADY = {"omega": 1.0, "Omega": 1.0, "g_grid": [0.2, 0.5, 0.8], "cutoff": 12, "n_levels": 8}
GAUGE = {"omega": 1.0, "Omega": 1.0, "g_grid": [0.0, 0.2], "orders": [2, 4], "n_levels": 4, "cutoff": 24,
         "cutoff_max": 80}


def test_spectrum_uncoupled(tmp_path, capsys):
    assert main(["spectrum", "--config", write_cfg(tmp_path, SPECTRUM)]) == 0
    rows = parse_csv(capsys.readouterr().out)
    exact = sorted(float(r["energy"]) for r in rows if r["method"] == "exact")
    np.testing.assert_allclose(exact, [-0.3, 0.3, 0.7, 1.3], atol=1e-10)
    jc = sorted(float(r["energy"]) for r in rows if r["method"] == "jc")
    np.testing.assert_allclose(jc, exact, atol=1e-12)


def test_gauge_scan_zero_row(tmp_path, capsys):
    assert main(["gauge-scan", "--config", write_cfg(tmp_path, GAUGE)]) == 0
    rows = parse_csv(capsys.readouterr().out)
    assert {r["variant"] for r in rows} == {"coulomb_full", "coulomb_taylor"}
    for r in rows:
        assert r["converged"] in ("1", "True", "true")
        if float(r["g"]) == 0.0:
            assert float(r["deviation"]) < 1e-12
    full = [r for r in rows if r["variant"] == "coulomb_full"]
    assert all(int(r["order"]) == -1 for r in full)


def test_steady_excess_grows(tmp_path, capsys):
    assert main(["steady", "--config", write_cfg(tmp_path, STEADY)]) == 0
    rows = parse_csv(capsys.readouterr().out)
    ex = [float(r["excess"]) for r in rows]
    assert all(b > a > 0 for a, b in zip(ex, ex[1:]))
    for r in rows:
        assert abs(float(r["fidelity_dressed"]) - 1) < 1e-8
        assert abs(float(r["flux_dressed"])) < 1e-10


def test_output_is_byte_stable(tmp_path):
    outs = []
    for i, threads in enumerate(["1", "1", "3"]):
        out = tmp_path / f"o{i}.csv"
        r = invoke(tmp_path, "steady", STEADY, "--out", str(out), "--threads", threads)
        assert r.returncode == 0, r.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert b"\r\n" not in outs[0]


def test_json_format(tmp_path, capsys):
    assert main(["spectrum", "--config", write_cfg(tmp_path, SPECTRUM), "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["command"] == "spectrum"
    assert doc["columns"] == ["level_index", "parity", "energy", "method", "cutoff_used"]
    assert len(doc["rows"]) == 8
    assert len(doc["config_sha256"]) == 64


def test_config_hash_ignores_key_order(tmp_path):
    a = invoke(tmp_path, "spectrum", SPECTRUM).stdout.splitlines()[0]
    b = invoke(tmp_path, "spectrum", dict(reversed(list(SPECTRUM.items())))).stdout.splitlines()[0]
    assert a == b


def test_unknown_key_is_config_error(tmp_path):
    r = invoke(tmp_path, "spectrum", {**SPECTRUM, "bogus": 1})
    assert r.returncode == 2
    assert json.loads(r.stderr)["error"] == "ConfigError"


def test_missing_file_is_config_error(tmp_path, capsys):
    assert main(["steady", "--config", str(tmp_path / "nope.json")]) == 2


def test_dark_g2_is_numeric_failure(tmp_path):
    cfg = {"model": {"omega": 1.0, "Omega": 1.0, "g": 0.3}, "cutoff": 20, "n_levels": 4,
           "drive": {"F": 0.0}, "N_F": 4, "tau_grid": [0.0, 1.0]}
    r = invoke(tmp_path, "g2", cfg)
    assert r.returncode == 3
    assert json.loads(r.stderr)["error"] == "DarkStateError"


def test_dimension_cap_is_numeric_failure(tmp_path):
    r = invoke(tmp_path, "steady", STEADY, env={"USQED_DIM_CAP": "10"})
    assert r.returncode == 3
    assert json.loads(r.stderr)["error"] == "DimensionError"


def test_run_validates():
    import jsonschema
    with pytest.raises(jsonschema.ValidationError):
        run("steady", {"omega": 1.0})
