import json

import pytest

from topgraph.cli import EXIT_INFINITE, EXIT_INPUT, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, main, parse_weights


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_decide_loop_exact(capsys, data_dir):
    code, out, _ = run(capsys, "decide-finiteness", "--graph", data_dir / "loop.graph", "--exact")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["verdict"] == "consistent-with-finite" and report["schema"] == "topgraph-report/1"


def test_shift_analyze_four(capsys, data_dir):
    code, out, _ = run(
        capsys, "shift-analyze", "--tree", data_dir / "four.tree", "--weights", data_dir / "w.tbl", "--format", "text"
    )
    assert code == EXIT_OK
    assert out.splitlines()[0] == "ker=2 coker=2 index=0"


def test_shift_analyze_json_weights(capsys, data_dir, tmp_path):
    w = tmp_path / "w.json"
    w.write_text('{"2": [0, 1], "3": "0.5", "4": 2}')
    code, out, _ = run(capsys, "shift-analyze", "--tree", data_dir / "four.tree", "--weights", w)
    report = json.loads(out)
    assert code == EXIT_OK and report["dense_oracle"]["agrees"]
    assert report["weights"]["2"] == [0.0, 1.0]


def test_unknown_flag_is_usage_error(capsys, data_dir):
    code, _, err = run(capsys, "validate", data_dir / "loop.graph", "--bogus")
    assert code == EXIT_USAGE and "unrecognized" in err


def test_unknown_command(capsys):
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE


def test_bad_eps_is_usage_error(capsys, data_dir):
    assert run(capsys, "decide-finiteness", "--graph", data_dir / "loop.graph", "--eps", "0,-1")[0] == EXIT_USAGE
    assert run(capsys, "decide-finiteness", "--graph", data_dir / "loop.graph")[0] == EXIT_USAGE


def test_missing_file_is_input_error(capsys, tmp_path):
    code, _, err = run(capsys, "validate", tmp_path / "nope.graph")
    assert code == EXIT_INPUT and "cannot read" in err


def test_schema_error_is_input_error(capsys, tmp_path):
    p = tmp_path / "bad.graph"
    p.write_text('{"vertices": ["v"], "edges": [], "extra": 1}')
    assert run(capsys, "validate", p)[0] == EXIT_INPUT


def test_fail_on_infinite(capsys, data_dir):
    args = ["decide-finiteness", "--graph", data_dir / "loop_and_exit.graph", "--eps", "0.5"]
    assert run(capsys, *args)[0] == EXIT_OK
    code, out, _ = run(capsys, *args, "--fail-on-infinite")
    assert code == EXIT_INFINITE and json.loads(out)["verdict"] == "infinite"


def test_validate_report(capsys, data_dir):
    code, out, _ = run(capsys, "validate", data_dir / "orbit_example.graph")
    report = json.loads(out)
    assert code == EXIT_OK and report["sinks"] == ["w"] and report["s_injective"] is False


def test_orbit_rep(capsys, data_dir):
    code, out, _ = run(capsys, "orbit-rep", data_dir / "orbit_example.graph", "--cycle", "e", "--window", "-3", "3", "--battery", "4")
    report = json.loads(out)
    assert code == EXIT_OK and report["ok"]
    assert report["window"] == [-3, 3]
    assert set(report["nodes_per_level"].values()) == {3}
    assert report["unit_shift"]["left_inverse_defect"] == 0


def test_orbit_rep_bad_lasso(capsys, data_dir):
    code, _, err = run(capsys, "orbit-rep", data_dir / "orbit_example.graph", "--cycle", "f")
    assert code == EXIT_INPUT and "not composable" in err


def test_dynsys_check(capsys, data_dir):
    code, out, _ = run(capsys, "dynsys-check", data_dir / "rotation3.system", "--eps", "0.5", "--exact", "--inverse-limit-depth", "3")
    report = json.loads(out)
    assert code == EXIT_OK
    assert report["results"]["0.5"]["witnesses"]["a"] == ["a", "b", "c"]
    assert report["inverse_limit"]["lift"]["0.5"]["ok"]


def test_dynsys_non_surjective_inverse_limit(capsys, data_dir):
    code, _, err = run(capsys, "dynsys-check", data_dir / "walk.system", "--eps", "0.5", "--inverse-limit-depth", "2", "--normalize")
    assert code == EXIT_INPUT and "surjective" in err
    code, out, _ = run(capsys, "dynsys-check", data_dir / "walk.system", "--eps", "0.5")
    assert code == EXIT_OK and json.loads(out)["results"]["0.5"]["witnesses"]["1"] is None


def test_dynsys_unnormalized(capsys, data_dir):
    code, _, err = run(capsys, "dynsys-check", data_dir / "walk.system", "--eps", "0.5", "--inverse-limit-depth", "2")
    assert code == EXIT_INPUT and "--normalize" in err


@pytest.mark.parametrize("name", ["shift-oracle", "rho", "lift"])
def test_battery_deterministic(capsys, name):
    a = run(capsys, "battery", name, "--seed", "3", "--count", "5")
    b = run(capsys, "battery", name, "--seed", "3", "--count", "5")
    assert a[0] == EXIT_OK and a[1] == b[1]


def test_battery_failure_exit(capsys, monkeypatch):
    import topgraph.cli as cli

    monkeypatch.setattr(cli, "run_battery", lambda name, seed, count: {"battery": name, "ok": False})
    assert run(capsys, "battery", "rho")[0] == EXIT_INVARIANT


def test_parse_weights_formats():
    assert parse_weights("a 1\nb -2i\n# c 3\n") == {"a": 1, "b": -2j}
    assert parse_weights("a: 2\nb: [1, 1]\n") == {"a": 2, "b": 1 + 1j}
