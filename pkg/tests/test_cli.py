import json
from pathlib import Path

import pytest

from jetconj.cli import build_parser, main

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def is_index(obj):
    return set(obj) == {"alpha", "i"} and isinstance(obj["i"], int) and all(isinstance(a, int) for a in obj["alpha"])


def test_poset_json_schema(capsys):
    code, out, _ = run(capsys, "poset", "--d", "2")
    data = json.loads(out)
    assert code == 0
    assert all(is_index(e) for e in data["elements"] + data["triangular"] + data["resonant"])
    for key in ("chain_relation", "order"):
        assert all(len(p) == 2 and is_index(p[0]) and is_index(p[1]) for p in data[key])
    assert data["resonant"] == [{"alpha": [0, 2], "i": 1}, {"alpha": [2, 0], "i": 2}]


def test_verify_nilpotency(capsys):
    code, out, err = run(capsys, "verify-nilpotency", "--d", "3", "--trials", "5", "--seed", "2")
    assert code == 0 and "PASS relation word d=3" in err
    data = json.loads(out)
    assert data["word"] == [2, 2, 3] and data["relation_empty"] and data["matrix_max_entry"] == 0.0


def test_decomp_bounds_csv(capsys):
    code, out, err = run(capsys, "decomp-bounds", "--d", "2", "--lambda", "0.5", "--m", "4", "--horizon", "10",
                         "--emit", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "n,norm_m0,norm_m1" and len(lines) == 12
    assert "slope m0" in err


def test_decomp_bounds_bad_parameters(capsys):
    code, _, err = run(capsys, "decomp-bounds", "--d", "2", "--lambda", "1.5", "--m", "4")
    assert code == 2 and "config error" in err


@pytest.mark.parametrize("name", ["solve_d2.toml", "solve_d3.toml", "solve_explicit.toml"])
def test_solve_configs(capsys, name):
    code, out, err = run(capsys, "solve-jets", "--config", str(CONFIGS / name))
    data = json.loads(out)
    assert code == 0, err
    assert all(data["checks"].values()) and data["max_residual"] <= 1e-8


def test_solve_explicit_wrong_sizes(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('d = 2\nhorizon = 5\n[[jets]]\nlinear_re = [1.0, 0.0, 0.0]\n')
    code, _, err = run(capsys, "solve-jets", "--config", str(cfg))
    assert code == 2 and "expected 4 linear" in err


def test_basin_slice_matches_golden(capsys):
    code, out, _ = run(capsys, "basin", "--config", str(GOLDEN / "basin_slice.toml"), "--emit", "svg")
    assert code == 0
    assert out.count("<rect") == 81
    assert out == (GOLDEN / "basin_slice.svg").read_text()


def test_basin_csv_and_schedule_error(tmp_path, capsys):
    cfg = tmp_path / "b.toml"
    cfg.write_text('d = 2\n[sampling]\nn_grid = 10\nn_far = 5\n')
    code, out, _ = run(capsys, "basin", "--config", str(cfg), "--emit", "csv")
    assert code == 0 and len(out.strip().splitlines()) == 16
    assert out.splitlines()[0] == "re_z1,im_z1,re_z2,im_z2,verdict,iterations,final_norm"
    cfg.write_text('d = 2\nschedule = "random"\n')
    code, _, err = run(capsys, "basin", "--config", str(cfg))
    assert code == 2 and "schedule" in err


def test_epsilon_table(capsys):
    code, out, _ = run(capsys, "epsilon-table", "--dmax", "4")
    rows = json.loads(out)
    assert code == 0
    assert [r["epsilon"] for r in rows[:2]] == ["1/14", "1/5591039"]
    assert all(r["easy_inequality"] for r in rows)


def test_pipeline_violating_config(capsys):
    code, out, err = run(capsys, "pipeline", "--config", str(CONFIGS / "pipeline_violating.toml"))
    data = json.loads(out)
    assert code == 1
    assert [s["name"] for s in data["stages"]] == ["pinching", "bunching"]
    assert "bunching hypothesis violated" in data["stages"][-1]["message"]
    assert "FAIL bunching" in err


def test_out_dir_and_env(tmp_path, capsys, monkeypatch):
    code, out, err = run(capsys, "epsilon-table", "--dmax", "3", "--out-dir", str(tmp_path / "a"))
    assert code == 0 and out == "" and (tmp_path / "a" / "epsilon_table.json").exists()
    monkeypatch.setenv("JETCONJ_OUT_DIR", str(tmp_path / "b"))
    run(capsys, "poset", "--d", "1")
    assert (tmp_path / "b" / "poset_d1.json").exists()


@pytest.mark.parametrize("argv", [[], ["poset"], ["nosuch"], ["poset", "--d", "0"],
                                  ["basin", "--config", "/nonexistent.toml"]])
def test_usage_errors_exit_2(capsys, argv):
    assert main(argv) == 2


def test_global_flags_before_or_after_command():
    p = build_parser()
    before = p.parse_args(["--emit", "csv", "--seed", "5", "epsilon-table"])
    after = p.parse_args(["epsilon-table", "--emit", "csv", "--seed", "5"])
    assert (before.emit, before.seed) == (after.emit, after.seed) == ("csv", 5)
    assert p.parse_args(["epsilon-table"]).emit == "json"
