import csv
import json
import math

import numpy as np
import pytest

from oulab.cli import main
from oulab.config import (ConfigError, load_default_config, parse_config)
from oulab.domains import interval
from oulab.expr import coordinate

SMALL_CONFIG = {
    "seed": 11,
    "output_dir": "out",
    "domains": {
        "line": {"shape": "whole_space", "dim": 1},
        "interval": {"shape": "slab", "direction": [1.0],
                     "lower": -1.0, "upper": 1.0},
    },
    "functions": {
        "linear": {"dim": 1, "directions": [[1.0]], "profile": "v1"},
        "square": {"dim": 1, "directions": [[1.0]], "profile": "(pow v1 2)"},
    },
    "engine": {"samples": 20000, "mc_paths": 2000, "mc_step": 0.005,
               "grid_resolution": 100, "tail_mass": 1e-12, "cn_steps": 100},
    "checks": [
        {"kind": "poincare", "function": "linear", "domain": "line"},
        {"kind": "invariance", "function": "square", "domain": "interval",
         "engine": "grid", "t": 0.5},
        {"kind": "decay", "function": "square", "domain": "interval",
         "times": [0.5]},
    ],
    "spectrum": {"domains": ["line"], "count": 3, "resolution": 400},
    "evolve": {"domain": "line", "function": "linear",
               "times": [0.0, 0.5], "resolution": 120},
    "converge": {"ball": "interval", "function": "linear", "t": 0.3,
                 "sides": [4, 8], "points": 3, "paths_per_point": 400,
                 "step": 0.005},
}


def write_config(tmp_path, cfg=None, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg if cfg is not None else SMALL_CONFIG))
    return str(path)


def read_reports(out_dir):
    with open(out_dir / "reports.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_round_trip_preserves_objects():
    cfg = parse_config(json.dumps(SMALL_CONFIG))
    assert cfg.seed == 11
    dom = cfg.domain("interval")
    assert type(dom) is type(interval(-1.0, 1.0))
    fn = cfg.function("linear")
    pts = np.random.default_rng(0).standard_normal((10, 1))
    assert np.array_equal(fn.eval(pts), coordinate(1).eval(pts))


def test_default_config_is_consistent():
    cfg = load_default_config()
    assert cfg.checks
    for check in cfg.checks:
        key = "base" if check["kind"] == "factorization" else "domain"
        assert check[key] in cfg.domains
        if "function" in check:
            assert check["function"] in cfg.functions


def test_verify_small_config(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "run"
    assert main(["verify", path, "--out", str(out)]) == 0
    rows = read_reports(out)
    assert len(rows) == 3
    assert all(r["pass"] == "true" for r in rows)
    assert {"check", "name", "lhs", "rhs", "margin", "tolerance", "pass",
            "engine", "budget", "seed"} <= set(rows[0])
    summary = (out / "summary.txt").read_text()
    assert summary.strip().endswith("RESULT: PASS")


def test_verify_outputs_are_byte_identical(tmp_path):
    path = write_config(tmp_path)
    out1, out2, out3 = (tmp_path / n for n in ("a", "b", "c"))
    main(["verify", path, "--out", str(out1)])
    main(["verify", path, "--out", str(out2)])
    main(["verify", path, "--out", str(out3), "--jobs", "3"])
    data = (out1 / "reports.csv").read_bytes()
    assert data == (out2 / "reports.csv").read_bytes()
    assert data == (out3 / "reports.csv").read_bytes()


def test_verify_seed_override_changes_sampled_rows(tmp_path):
    path = write_config(tmp_path)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    main(["verify", path, "--out", str(out1)])
    main(["verify", path, "--out", str(out2), "--seed", "99"])
    a = read_reports(out1)
    b = read_reports(out2)
    assert a[0]["lhs"] != b[0]["lhs"]  # sampled check moved with the seed
    assert a[1]["lhs"] == b[1]["lhs"]  # grid check is seed independent


def test_verify_flags_deliberate_failure(tmp_path):
    cfg = json.loads(json.dumps(SMALL_CONFIG))
    cfg["checks"][0]["rhs_scale"] = 0.5  # poincare sharp case must now fail
    path = write_config(tmp_path, cfg)
    out = tmp_path / "run"
    assert main(["verify", path, "--out", str(out)]) == 1
    rows = read_reports(out)
    assert rows[0]["pass"] == "false"
    assert all(r["pass"] == "true" for r in rows[1:])
    assert "RESULT: FAIL" in (out / "summary.txt").read_text()


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"seed": 1,,}')
    assert main(["verify", str(path)]) == 2
    err = capsys.readouterr().err
    assert "line 1" in err


def test_malformed_dsl_exits_2(tmp_path, capsys):
    cfg = json.loads(json.dumps(SMALL_CONFIG))
    cfg["functions"]["linear"]["profile"] = "(exp v1"
    assert main(["verify", write_config(tmp_path, cfg)]) == 2
    assert "position" in capsys.readouterr().err


def test_unknown_names_exit_2(tmp_path, capsys):
    cfg = json.loads(json.dumps(SMALL_CONFIG))
    cfg["checks"][0]["domain"] = "nowhere"
    assert main(["verify", write_config(tmp_path, cfg)]) == 2

    cfg = json.loads(json.dumps(SMALL_CONFIG))
    cfg["checks"][0]["kind"] = "teleport"
    assert main(["verify", write_config(tmp_path, cfg)]) == 2


def test_dimension_mismatch_exits_2(tmp_path):
    cfg = json.loads(json.dumps(SMALL_CONFIG))
    cfg["functions"]["linear"]["dim"] = 2
    cfg["functions"]["linear"]["directions"] = [[1.0, 0.0]]
    assert main(["verify", write_config(tmp_path, cfg)]) == 2


def test_spectrum_command(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "spec"
    assert main(["spectrum", path, "--out", str(out)]) == 0
    with open(out / "eigenvalues.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    values = [float(r["eigenvalue"]) for r in rows if r["domain"] == "line"]
    assert np.abs(np.array(values) - np.array([0.0, -1.0, -2.0])).max() < 5e-3
    assert all(float(r["gap"]) >= 1.0 - 0.02 for r in rows)


def test_evolve_command(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "ev"
    assert main(["evolve", path, "--out", str(out)]) == 0
    with open(out / "evolution.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    start = [r for r in rows if r["t"] == "0.0"]
    assert all(float(r["value"]) == float(r["x1"]) for r in start)
    later = [r for r in rows if r["t"] == "0.5"]
    mid = [r for r in later if abs(float(r["x1"])) < 2.0]
    decay = math.exp(-0.5)
    assert all(abs(float(r["value"]) - decay * float(r["x1"])) < 5e-3
               for r in mid)


def test_converge_command(tmp_path):
    cfg = json.loads(json.dumps(SMALL_CONFIG))
    cfg["domains"]["ball2"] = {"shape": "ball", "center": [0.0, 0.0],
                               "radius": 1.0}
    cfg["functions"]["diag"] = {
        "dim": 2, "directions": [[0.7071067811865476, 0.7071067811865476]],
        "profile": "(tanh v1)"}
    cfg["converge"] = {"ball": "ball2", "function": "diag", "t": 0.3,
                       "sides": [4, 8], "points": 3, "paths_per_point": 400,
                       "step": 0.005}
    path = write_config(tmp_path, cfg)
    out = tmp_path / "cv"
    assert main(["converge", path, "--out", str(out)]) == 0
    with open(out / "convergence.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["sides"] for r in rows] == ["4", "8"]
    assert float(rows[0]["excess_mass"]) > float(rows[1]["excess_mass"])


def test_bundled_default_verify_runs_clean(tmp_path):
    out = tmp_path / "default"
    assert main(["verify", "--out", str(out)]) == 0
    rows = read_reports(out)
    assert all(r["pass"] == "true" for r in rows)
    assert len(rows) >= 16
