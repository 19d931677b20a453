"""End-to-end CLI runs, in process: exit codes, JSON, CSV determinism."""

from __future__ import annotations

import json

import pytest

from ruinopt.cli import main
from conftest import assert_close

BASE = """\
mu = 0.42
r = 0.32
c = 0.36
lambda = 0.3            # claim arrival rate
rho = -0.2
sigma = 0.1
sigma1 = 0.2
claim.family = exponential
claim.p1 = 1.0
grid.h = 0.005
grid.xmax = 5.0
mc.dt = 0.01
mc.paths = 100
mc.horizon = 5.0
mc.seed = 12
mc.safe_level = 8.0
"""


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "bench1.txt"
    path.write_text(BASE, encoding="utf-8")
    return path


def run(capsys, argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_usage_errors_exit_2():
    for argv in ([], ["frobnicate"], ["solve", "x.txt"], ["simulate", "x.txt"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2


def test_missing_scenario_exits_3(capsys, tmp_path):
    code, _, err = run(capsys, ["constants", tmp_path / "absent.txt"])
    assert code == 3
    assert "missing file" in err


def test_bad_value_exits_4_and_names_key(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(BASE.replace("sigma = 0.1", "sigma = -1.0"), encoding="utf-8")
    code, _, err = run(capsys, ["constants", path])
    assert code == 4
    assert "key: sigma" in err

    path.write_text(BASE.replace("sigma = 0.1", "sigma = oops"), encoding="utf-8")
    code, _, err = run(capsys, ["constants", path])
    assert code == 4
    assert "key: sigma" in err

    path.write_text(BASE.replace("mu = 0.42\n", ""), encoding="utf-8")
    code, _, err = run(capsys, ["constants", path])
    assert code == 4
    assert "mu" in err

    path.write_text(BASE + "just a stray line\n", encoding="utf-8")
    code, _, err = run(capsys, ["constants", path])
    assert code == 4

    path.write_text(BASE.replace("exponential", "cauchy"), encoding="utf-8")
    code, _, err = run(capsys, ["constants", path])
    assert code == 4
    assert "key: claim.family" in err


def test_unknown_key_exits_5(capsys, tmp_path):
    path = tmp_path / "typo.txt"
    path.write_text(BASE + "capA = 1.0\n", encoding="utf-8")
    code, _, err = run(capsys, ["constants", path])
    assert code == 5
    assert "capA" in err


def test_constants_json_and_echo_round_trip(capsys, tmp_path):
    path = tmp_path / "bench1.txt"
    path.write_text(BASE + "cap_A = 1.0\n", encoding="utf-8")
    d1, d2 = tmp_path / "d1", tmp_path / "d2"

    code, out, _ = run(capsys, ["constants", path, "--out", d1])
    assert code == 0
    doc = json.loads(out)
    assert_close(doc["constants"]["B"], 22.016175755895873, 1e-8, "B")
    assert_close(doc["constants"]["a_star_zero"], 0.8542114902640175, 1e-8, "a*(0)")
    assert doc["regimes"]["zero_surplus"]["regime"] == "interior"
    assert doc["regimes"]["large_surplus"]["regime"] == "full_cap"

    # parsing the echoed scenario must reproduce constants.json byte for byte
    echo = (d1 / "scenario_echo.txt").read_text(encoding="utf-8")
    path2 = tmp_path / "echoed.txt"
    path2.write_text(echo, encoding="utf-8")
    code, _, _ = run(capsys, ["constants", path2, "--out", d2])
    assert code == 0
    assert (d1 / "constants.json").read_bytes() == (d2 / "constants.json").read_bytes()


def test_constants_without_cap_has_no_regimes(capsys, scenario_file):
    code, out, _ = run(capsys, ["constants", scenario_file])
    assert code == 0
    doc = json.loads(out)
    assert doc["regimes"] == {}
    assert doc["constants"]["rho2"] is None


def test_solve_unconstrained_csv_deterministic(capsys, scenario_file, tmp_path):
    outs = []
    for d in ("s1", "s2"):
        code, out, _ = run(
            capsys, ["solve", scenario_file, "--mode", "unconstrained", "--out", tmp_path / d]
        )
        assert code == 0
        outs.append(json.loads(out))
    doc = outs[0]
    assert_close(doc["a_star_zero"], 0.8542114902640175, 1e-8, "a*(0)")
    assert_close(doc["v_prime_zero"], -22.016175755895873, 1e-8, "v'(0)")
    assert doc["residuals"]["self_consistency"] <= 1e-6
    assert doc["residuals"]["independent"] <= 5e-3 * 0.3
    assert doc["windows"]["max_contraction_ratio"] <= 0.5
    assert not doc["normalization"]["truncated"]

    csv1 = (tmp_path / "s1" / "solve_unconstrained.csv").read_bytes()
    csv2 = (tmp_path / "s2" / "solve_unconstrained.csv").read_bytes()
    assert csv1 == csv2
    header = csv1.decode().splitlines()[0]
    assert header == "x,v,V,delta,a_star,hjb_residual"


def test_solve_constrained_needs_cap(capsys, scenario_file, tmp_path):
    code, _, err = run(
        capsys, ["solve", scenario_file, "--mode", "constrained", "--out", tmp_path / "c"]
    )
    assert code == 4
    assert "cap_A" in err


def test_solve_constrained_respects_cap(capsys, tmp_path):
    path = tmp_path / "capped.txt"
    path.write_text(BASE + "cap_A = 1.0\n", encoding="utf-8")
    code, out, _ = run(capsys, ["solve", path, "--mode", "constrained", "--out", tmp_path])
    assert code == 0
    doc = json.loads(out)
    assert doc["residuals"]["fixed_point"] <= 1e-8
    lines = (tmp_path / "solve_constrained.csv").read_text().splitlines()
    a_col = [float(row.split(",")[4]) for row in lines[1:]]
    assert all(0.0 <= a <= 1.0 for a in a_col)
    assert a_col[-1] == 1.0  # cap binds by the end of the grid


def test_asymptotes_report(capsys, scenario_file):
    code, out, _ = run(capsys, ["asymptotes", scenario_file])
    assert code == 0
    doc = json.loads(out)
    assert_close(doc["strategy_slope_zero"], 0.020394697973225462, 1e-8, "slope")
    assert_close(doc["infinity_limit"], 10.4, 1e-8, "limit")
    assert_close(doc["infinity_coeff"], -0.625, 1e-8, "coeff")
    assert doc["K1_ruin"] is None  # no solved grid on this route


def test_exp_validate_agrees(capsys, tmp_path):
    path = tmp_path / "bench1_long.txt"
    path.write_text(BASE.replace("grid.xmax = 5.0", "grid.xmax = 10.0"), encoding="utf-8")
    code, out, _ = run(capsys, ["exp-validate", path])
    assert code == 0
    doc = json.loads(out)
    assert doc["window"] == [1.0, 10.0]
    assert doc["max_rel_deviation"] < 1e-3
    assert doc["seed"]["note"] is None

    path.write_text(
        BASE.replace("exponential", "half_normal").replace(
            "claim.p1 = 1.0", "claim.p1 = 1.2533141373155003"
        ),
        encoding="utf-8",
    )
    code, _, err = run(capsys, ["exp-validate", path])
    assert code == 4
    assert "claim.family" in err


def test_simulate_deterministic(capsys, scenario_file):
    docs = []
    for _ in range(2):
        code, out, _ = run(capsys, ["simulate", scenario_file, "--x0", "1.0", "--strategy", "const:0.8542"])
        assert code == 0
        doc = json.loads(out)
        doc.pop("runtime_s")
        docs.append(doc)
    assert docs[0] == docs[1]
    doc = docs[0]
    assert doc["n_paths"] == 100
    assert doc["n_ruined"] + doc["n_safe"] + doc["n_horizon"] == 100
    assert 0.0 <= doc["survival"] <= 1.0
    assert doc["strategy"] == "const:0.8542"


def test_simulate_strategy_specs(capsys, scenario_file, tmp_path):
    code, out, _ = run(capsys, ["simulate", scenario_file, "--x0", "1.0", "--strategy", "zero"])
    assert code == 0

    table = tmp_path / "strat.csv"
    table.write_text("x,a\n0.0,0.8542\n40.0,0.8542\n", encoding="utf-8")
    code, out, _ = run(
        capsys, ["simulate", scenario_file, "--x0", "1.0", "--strategy", f"file:{table}"]
    )
    assert code == 0
    assert json.loads(out)["strategy"].startswith("file:")

    code, _, err = run(capsys, ["simulate", scenario_file, "--x0", "1.0", "--strategy", "nope"])
    assert code == 4
    assert "key: strategy" in err

    code, _, err = run(
        capsys, ["simulate", scenario_file, "--x0", "1.0", "--strategy", "file:/no/such.csv"]
    )
    assert code == 3


def test_example1_runner(capsys, tmp_path):
    code, out, _ = run(capsys, ["example1", "--out", tmp_path])
    assert code == 0
    doc = json.loads(out)
    assert_close(doc["asymptotes"]["a_star_zero"], 0.8542114902640175, 1e-8, "a*(0)")
    assert set(doc["claims"]) == {"exponential", "half_normal", "log_normal"}
    for entry in doc["claims"].values():
        assert_close(entry["mean"], 1.0, 1e-9, "claim mean")
        assert not entry["truncated"]
    assert doc["claims"]["exponential"]["tail_fit"]["ok"]

    low = (tmp_path / "example1_low_surplus.csv").read_text().splitlines()
    high = (tmp_path / "example1_large_surplus.csv").read_text().splitlines()
    assert low[0] == "x,a_exponential,a_half_normal,a_log_normal"
    assert high[0] == low[0]
    assert low[1].startswith("0,")
    assert float(high[-1].split(",")[0]) == 40.0


def test_example2_reports_legacy_values_as_inconsistent(capsys, tmp_path):
    code, out, _ = run(capsys, ["example2", "--out", tmp_path])
    assert code == 0
    doc = json.loads(out)
    legacy = doc["legacy_reference_values"]
    assert legacy["consistent_with_parameters"] is False
    # reported for reference, but distinct from what the parameters imply
    assert abs(doc["asymptotes"]["a_star_zero"] - legacy["a_star_zero"]) > 1e-3
    assert abs(doc["asymptotes"]["infinity_limit"] - legacy["infinity_limit"]) > 1e-2
    assert_close(doc["asymptotes"]["infinity_limit"], 0.11419753086419755, 1e-8, "limit 2")
