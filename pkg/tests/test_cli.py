import csv
import hashlib
import io
import json
import math
from pathlib import Path

import pytest

from hetnet import cli
from hetnet.analytic import coverage_marp
from hetnet.config import ConfigError, config_from_dict, load_config, parse_los_spec
from hetnet.model import ExponentialLos, ThreeGppTwoPieceLos, paper_two_tier
from hetnet.numerics import QuadratureError

ROOT = Path(__file__).resolve().parents[1]
PRESET = ["--preset", "paper-2tier", "--los", "exp:0.01"]


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def table(text):
    return list(csv.reader(io.StringIO(text)))


def test_coverage_shape():
    code, out, _ = call("coverage", *PRESET, "--threshold-db", "1")
    rows = table(out)
    assert code == 0
    assert rows[0] == ["p_cov_total", "p_cov_t1", "p_cov_t2", "p_nl", "p_l", "pt", "ee"]
    assert len(rows) == 2 and len(rows[1]) == 7
    assert all(math.isfinite(float(v)) for v in rows[1])


def test_tier_override_reduces_to_single_tier():
    code, out, _ = call("coverage", *PRESET, "--tier2.density", "0")
    expected = coverage_marp(paper_two_tier(1e-5, 0.0, ExponentialLos(0.01))).total
    assert code == 0
    assert float(table(out)[1][0]) == pytest.approx(expected, rel=1e-10)
    code2, out2, _ = call("coverage", *PRESET, "--tier2.density=0")
    assert out2 == out


def test_mirp_negative_threshold_exit_2():
    code, _, err = call("coverage", *PRESET, "--scheme", "mirp", "--threshold-db", "-3")
    assert code == 2 and ">= 0 dB" in err


@pytest.mark.parametrize("argv, needle", [
    (["coverage", "--preset", "paper-2tier"], "--los"),
    (["coverage", *PRESET, "--tier3.density", "1"], "--tier3.density"),
    (["coverage", *PRESET, "--tier1.bogus", "1"], "unknown tier field"),
    (["coverage", *PRESET, "--tier1.alpha_nl", "1.5"], "alpha"),
    (["coverage", "--preset", "paper-2tier", "--los", "exp:x"], "--los"),
    (["sweep", *PRESET, "--lambda1", "10:1:3"], "--lambda1"),
    (["coverage"], "--config or --preset"),
])
def test_config_errors_exit_2(argv, needle):
    code, out, err = call(*argv)
    assert code == 2 and out == "" and needle in err


def test_numerical_error_exit_3(monkeypatch):
    def boom(*a, **k):
        raise QuadratureError("budget exhausted")
    monkeypatch.setattr(cli, "coverage", boom)
    code, _, err = call("coverage", *PRESET)
    assert code == 3 and "numerical error" in err


def test_los_spec_parsing():
    assert parse_los_spec("exp:0.02") == ExponentialLos(0.02)
    assert parse_los_spec("two-piece:156,30") == ThreeGppTwoPieceLos(156.0, 30.0)
    assert parse_los_spec("nlos").never_los
    with pytest.raises(ConfigError):
        parse_los_spec("linear")


def test_scenario_file_matches_preset():
    cfg = load_config(ROOT / "scenarios" / "paper-2tier.toml")
    assert cfg == paper_two_tier(1e-5, 1e-4, ExponentialLos(0.01))
    _, a, _ = call("coverage", "--config", str(ROOT / "scenarios" / "paper-2tier.toml"))
    _, b, _ = call("coverage", *PRESET)
    assert a == b


def test_scenario_file_field_diagnostics():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"noise_dbm": -95, "los": {"model": "exp"},
                          "tier": [{"density": 1.0, "alpha_nl": 4.0}]})
    text = "\n".join(info.value.problems)
    assert "tier[1].density: unknown field" in text
    assert "tier[1].tx_power_dbm: missing" in text
    assert "los.kappa" in text


def test_single_point_sweep_equals_coverage():
    _, cov, _ = call("coverage", *PRESET)
    code, sw, _ = call("sweep", *PRESET, "--lambda1", "10", "--lambda2", "100")
    rows = table(sw)
    assert code == 0
    assert rows[0][:2] == ["lambda1_per_km2", "lambda2_per_km2"]
    assert rows[1][2:] == table(cov)[1]


def test_sweep_single_peak_and_power_model():
    axis = ["--lambda1", "1:10000:7", "--lambda2", "100"]
    _, fixed, _ = call("sweep", *PRESET, *axis)
    _, dens, _ = call("sweep", *PRESET, *axis, "--power", "density")
    p = [float(r[2]) for r in table(fixed)[1:]]
    peak = p.index(max(p))
    assert 0 < peak < len(p) - 1
    assert all(a <= b for a, b in zip(p[:peak], p[1:peak + 1]))
    assert all(a >= b for a, b in zip(p[peak:], p[peak + 1:]))
    q = [float(r[2]) for r in table(dens)[1:]]
    assert all(abs(a - b) > 1e-6 for a, b in zip(p, q))


def test_sweep_2d_long_format_and_gnuplot(tmp_path):
    out = tmp_path / "s.csv"
    gp = tmp_path / "s.gp"
    code, _, _ = call("sweep", *PRESET, "--lambda1", "1:100:2", "--lambda2", "10:1000:3",
                      "--out", str(out), "--gnuplot", str(gp))
    rows = table(out.read_text())
    assert code == 0 and len(rows) == 1 + 6
    assert [r[:2] for r in rows[1:4]] == [["1", "10"], ["1", "100"], ["1", "1000"]]
    assert "splot" in gp.read_text()


def test_manifest_sidecar(tmp_path):
    out = tmp_path / "c.csv"
    code, stdout, _ = call("coverage", *PRESET, "--out", str(out))
    manifest = json.loads((tmp_path / "c.csv.manifest.json").read_text())
    assert code == 0 and stdout == ""
    assert manifest["command"] == "coverage"
    assert manifest["config"]["tier"][0]["tx_power_dbm"] == 46.0
    assert manifest["output_sha256"] == hashlib.sha256(out.read_bytes()).hexdigest()
    assert {"version", "quadrature", "started_utc", "elapsed_s"} <= set(manifest)


def test_simulate_reproducible_and_schema():
    argv = ["simulate", *PRESET, "--scheme", "both", "--trials", "200", "--seed", "9"]
    _, a, _ = call(*argv)
    _, b, _ = call(*argv)
    assert a == b
    rows = table(a)
    assert rows[0] == ["lambda1_per_km2", "lambda2_per_km2", "scheme", "mc_mean", "mc_se",
                       "ci_low", "ci_high", "analytic", "agree"]
    assert [r[2] for r in rows[1:]] == ["MIRP", "MARP"]


def test_simulate_degenerate_agrees():
    cfg = str(ROOT / "scenarios" / "single-tier-nlos.toml")
    code, out, _ = call("simulate", "--config", cfg, "--scheme", "both", "--trials", "4000",
                        "--seed", "2")
    rows = table(out)[1:]
    assert code == 0
    assert float(rows[0][-2]) == pytest.approx(2 / math.pi, abs=1e-6)
    assert float(rows[1][-2]) == pytest.approx(1 / (1 + math.pi / 4), abs=1e-6)
    assert [r[-1] for r in rows] == ["true", "true"]


def test_simulate_single_trial_suppresses_flag(tmp_path):
    dump = tmp_path / "d.csv"
    code, out, _ = call("simulate", *PRESET, "--trials", "1", "--dump", str(dump))
    row = table(out)[1]
    assert code == 0 and float(row[4]) == 0.5 and row[8] == ""
    assert dump.read_text().startswith("trial,serving_tier,link,sinr_db,success")


def test_optimize_unattainable_exit_4():
    code, out, err = call("optimize", *PRESET, "--kind", "op2", "--constraint", "0.999",
                          "--grid1", "0.1:1000:3", "--grid2", "0.1:1000:3")
    rows = table(out)
    assert code == 4 and "no feasible" in err
    assert rows[0] == ["constraint", "objective", "lambda1_per_km2", "lambda2_per_km2", "feasible"]
    assert [r[4] for r in rows[1:]] == ["false"]


def test_optimize_op2_range():
    code, out, _ = call("optimize", *PRESET, "--kind", "op2", "--range", "0.3:0.5:3",
                        "--grid1", "0.1:1000:3", "--grid2", "0.1:1000:3")
    rows = table(out)[1:]
    assert code == 0 and [r[0] for r in rows] == ["0.3", "0.4", "0.5"]
    ee = [float(r[1]) for r in rows if r[4] == "true"]
    assert all(a >= b for a, b in zip(ee, ee[1:]))


def test_main_module_help(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--help"])
    assert info.value.code == 0
    assert "coverage" in capsys.readouterr().out
