import csv
import json
import math

import numpy as np
import pytest

from demonbell import cli, harness
from demonbell.harness import ExperimentSpec, SpecError
from demonbell.thermo import kt_ln2


def write_config(path, **data):
    path.write_text(json.dumps(data))
    return path


def test_spec_validation_lists_fields():
    with pytest.raises(SpecError) as err:
        ExperimentSpec(scenario="steering_honest", n_runs=0)
    assert "n_runs" in str(err.value)
    with pytest.raises(SpecError) as err:
        ExperimentSpec.from_dict({"scenario": "steering_demon", "n_runs": 10, "n_run": 5, "policy": {"p": 1}})
    assert err.value.problems == ["n_run: unknown key", "policy.p: unknown key"]
    with pytest.raises(SpecError, match="scenario"):
        ExperimentSpec(scenario="bell_magic", n_runs=5)
    with pytest.raises(SpecError, match="steering"):
        ExperimentSpec(scenario="steering_honest", n_runs=5, setting_angles_deg=(0, 0))
    with pytest.raises(SpecError, match="policy"):
        ExperimentSpec.from_dict({"scenario": "steering_demon", "n_runs": 5, "policy": {"activation_probability": 2}})


def test_load_spec_errors(tmp_path):
    with pytest.raises(OSError, match="missing.json"):
        harness.load_spec(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(SpecError):
        harness.load_spec(bad)


def test_run_experiment_steering_demon(tmp_path):
    spec = ExperimentSpec(scenario="steering_demon", n_runs=10**4, seed=3, temperature=300.0)
    summary = harness.run_experiment(spec, tmp_path)
    assert summary["value"] == 1.0
    assert summary["ledger"]["joules"] == pytest.approx(2.870978885078724e-17, rel=1e-12)
    assert summary["detector"]["reject"]
    assert summary["exceeds_bound"]
    assert {p.name for p in tmp_path.iterdir()} == {"transcript.csv", "heat.csv", "summary.json"}
    assert json.loads((tmp_path / "summary.json").read_text()) == json.loads(json.dumps(summary))


@pytest.mark.parametrize("scenario", ["steering_demon", "bell_demon_signaling", "bell_demon_nonsignaling"])
def test_heat_csv_conserves_ledger(tmp_path, scenario):
    spec = ExperimentSpec(scenario=scenario, n_runs=20_000, seed=1,
                          policy={"activation_probability": 0.6})
    summary = harness.run_experiment(spec, tmp_path)
    _, demon = harness.read_heat_csv(tmp_path / "heat.csv")
    assert math.fsum(demon) == summary["ledger"]["joules"]
    with (tmp_path / "transcript.csv").open() as fh:
        active = sum(r["demon_active"] == "1" for r in csv.DictReader(fh))
    assert active == summary["demon_active_runs"]


def test_run_experiment_bell_honest():
    summary = harness.run_experiment(ExperimentSpec(scenario="bell_honest", n_runs=10**6, seed=2))
    assert abs(summary["value"] - 2 * math.sqrt(2)) <= 0.01
    assert summary["ledger"]["joules"] == 0


def test_run_experiment_reports_io_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    spec = ExperimentSpec(scenario="steering_honest", n_runs=10)
    with pytest.raises(OSError, match="file"):
        harness.run_experiment(spec, blocker / "sub")


def test_outputs_independent_of_threads(tmp_path):
    spec = ExperimentSpec(scenario="steering_demon", n_runs=150_000, seed=8,
                          policy={"activation_probability": 0.5})
    harness.run_experiment(spec, tmp_path / "a", threads=1)
    harness.run_experiment(spec, tmp_path / "b", threads=3)
    for name in ("transcript.csv", "heat.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


P_GRID = (0.0, 0.25, 0.5, 0.7071, 0.75, 1.0)


@pytest.fixture(scope="module")
def steering_sweep():
    spec = ExperimentSpec(scenario="steering_demon", n_runs=200_000, seed=5)
    return harness.sweep_activation(spec, P_GRID, repetitions=2)


@pytest.fixture(scope="module")
def signaling_sweep():
    spec = ExperimentSpec(scenario="bell_demon_signaling", n_runs=200_000, seed=6)
    return harness.sweep_activation(spec, (0.0, 0.25, 0.5, 0.75, 1.0), repetitions=1)


def test_steering_sweep_is_linear_in_p(steering_sweep):
    for row in steering_sweep.rows:
        assert abs(row.value - row.p) <= 4 * row.std_err + 1e-12
        assert row.heat_per_run_kTln2 == pytest.approx(row.heat_per_run_J / kt_ln2(300.0))
    assert steering_sweep.threshold_p == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert abs(steering_sweep.threshold_p_fit - 1 / math.sqrt(2)) <= 0.01
    assert steering_sweep.threshold_heat_kTln2 > 0.7071
    # the grid point just below the threshold does not beat the bound on average, the next does
    below = [r for r in steering_sweep.rows if r.p == 0.7071][0]
    above = [r for r in steering_sweep.rows if r.p == 0.75][0]
    assert above.value > steering_sweep.classical_bound
    assert below.heat_per_run_kTln2 < 0.7071 + 5 * math.sqrt(0.25 / 400_000)


def test_detected_fraction_grows_with_p(steering_sweep):
    fractions = [r.detected_fraction for r in steering_sweep.rows]
    assert fractions[0] <= 0.5 and fractions[-1] == 1.0


def test_nonsignaling_sweep_never_beats_two():
    spec = ExperimentSpec(scenario="bell_demon_nonsignaling", n_runs=100_000, seed=2)
    result = harness.sweep_activation(spec, (0.0, 0.5, 1.0))
    assert all(r.value <= 2 + 4 * r.std_err for r in result.rows)
    assert result.threshold_p is None


def test_hierarchy(steering_sweep, signaling_sweep):
    assert signaling_sweep.threshold_p == pytest.approx(0.5)
    assert signaling_sweep.threshold_heat_kTln2 == pytest.approx(1.0)
    row = harness.hierarchy_comparison(steering_sweep, signaling_sweep)
    assert row["steering_cheaper"] and row["steering_cheaper_fit"]
    assert row["steering_threshold_heat_kTln2"] < 1.0 <= row["bell_threshold_heat_kTln2"]


def test_sweep_argument_checks():
    spec = ExperimentSpec(scenario="steering_demon", n_runs=100)
    with pytest.raises(ValueError, match="empty"):
        harness.sweep_activation(spec, [])
    with pytest.raises(ValueError, match="increasing"):
        harness.sweep_activation(spec, [0.5, 0.2])
    with pytest.raises(ValueError, match="demon"):
        harness.sweep_activation(spec.replace(scenario="steering_honest"), [0.5])


def test_emit_plot_data_round_trip(tmp_path, steering_sweep):
    path = harness.emit_plot_data(steering_sweep, tmp_path / "sweep.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 7 and lines[0] == ",".join(harness.PLOT_COLUMNS)
    back = harness.read_plot_data(path)
    for a, b in zip(back, steering_sweep.rows):
        for col in harness.PLOT_COLUMNS:
            assert getattr(a, col) == pytest.approx(getattr(b, col), rel=1e-12, abs=0)
    empty = harness.SweepResult("steering_demon", [], 0.7, 1.0, 0.0, 1.0, None, None, 300.0)
    with pytest.raises(ValueError):
        harness.emit_plot_data(empty, tmp_path / "empty.csv")


# ---------------------------------------------------------------- CLI


def test_cli_run_and_detect(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", scenario="steering_demon", n_runs=2000, seed=1,
                       policy={"activation_probability": 1.0})
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "4"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["seed"] == 4 and summary["value"] == 1.0
    assert cli.main(["detect", str(tmp_path / "o" / "heat.csv"), "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["reject"] is True
    assert cli.main(["run", "--config", str(cfg), "--format", "csv"]) == 0
    header, values = capsys.readouterr().out.splitlines()
    assert "ledger.joules" in header.split(",")


def test_cli_validation_failure(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", scenario="steering_honest", n_runs=0)
    assert cli.main(["run", "--config", str(cfg)]) == 2
    assert "n_runs" in capsys.readouterr().err
    cfg = write_config(tmp_path / "d.json", scenario="steering_honest", n_runs=3, colour="red")
    assert cli.main(["run", "--config", str(cfg)]) == 2


def test_cli_sweep_and_bounds(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", scenario="steering_demon", n_runs=5000, seed=1)
    assert cli.main(["sweep", "--config", str(cfg), "--p-values", "0,0.5,1", "--out", str(tmp_path),
                     "--format", "csv"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 4
    assert len(harness.read_plot_data(tmp_path / "sweep.csv")) == 3
    angles = write_config(tmp_path / "a.json", setting_angles_deg=[0, 60, 120])
    assert cli.main(["bounds", "--config", str(angles)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lhs_bound"]["value"] == pytest.approx(2 / 3)
    assert out["lhv_chsh_bound"]["value"] == 2.0


def test_cli_missing_file(tmp_path, capsys):
    assert cli.main(["detect", str(tmp_path / "nope.csv")]) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_detect_on_honest_heat_record(tmp_path):
    spec = ExperimentSpec(scenario="steering_honest", n_runs=1000, seed=7)
    harness.run_experiment(spec, tmp_path)
    joules, demon = harness.read_heat_csv(tmp_path / "heat.csv")
    assert np.all(demon == 0) and joules.size == 1000
