import csv
import json

import pytest

from twinbeam import cli

BASE_CONFIG = {
    "matched_pairs": 30,
    "mean_photons_per_mode": 1.2,
    "signal_efficiency": 0.77,
    "idler_efficiency": 0.70,
    "signal_noise_electrons": 1.0,
    "idler_noise_electrons": 0.5,
}


def _write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def test_predict_outputs_reportable_json(tmp_path, capsys):
    config = _write_json(tmp_path / "cfg.json", BASE_CONFIG)
    assert cli.main(["predict", "--config", config]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert 0 < payload["nrf"] < 1
    assert payload["nrf_db"] > 0
    total = sum(payload["contributions"].values())
    assert total == pytest.approx(payload["nrf"], rel=1e-12)


def test_predict_rejects_malformed_config_naming_field(tmp_path, capsys):
    bad = dict(BASE_CONFIG, signal_efficiency=1.4)
    config = _write_json(tmp_path / "bad.json", bad)
    assert cli.main(["predict", "--config", config]) == 2
    assert "efficiency" in capsys.readouterr().err


def test_predict_rejects_unknown_field(tmp_path, capsys):
    bad = dict(BASE_CONFIG, signal_eta=0.5)
    config = _write_json(tmp_path / "bad.json", bad)
    assert cli.main(["predict", "--config", config]) == 2
    assert "signal_eta" in capsys.readouterr().err


def test_predict_missing_file_is_config_error(capsys):
    assert cli.main(["predict", "--config", "/nonexistent/x.json"]) == 2


def test_runtime_errors_map_to_exit_three(tmp_path, capsys):
    dark = dict(BASE_CONFIG, mean_photons_per_mode=0.0)
    config = _write_json(tmp_path / "dark.json", dark)
    # Valid config, but the NRF is undefined without any light.
    assert cli.main(["predict", "--config", config]) == 3
    assert "NRF undefined" in capsys.readouterr().err


def test_simulate_csv_is_byte_identical_across_runs(tmp_path):
    config = _write_json(tmp_path / "cfg.json", BASE_CONFIG)
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["simulate", "--config", config, "--pulses", "500", "--seed", "7",
            "--resamples", "50"]
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2), "--workers", "4"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    with out1.open() as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["pulse", "n1", "n2"]
    assert len(rows) == 501


def test_simulate_summary_on_stdout_when_csv_goes_to_file(tmp_path, capsys):
    config = _write_json(tmp_path / "cfg.json", BASE_CONFIG)
    out = tmp_path / "r.csv"
    assert cli.main([
        "simulate", "--config", config, "--pulses", "400", "--seed", "1",
        "--resamples", "50", "--out", str(out),
    ]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert "nrf" in summary and "backend" in summary


def test_fit_subcommand(tmp_path, capsys):
    import math
    rows = ["power,photons"]
    for p in [2, 4, 6, 9, 12, 16, 20, 25]:
        rows.append(f"{p},{3750 * math.sinh(0.4 * math.sqrt(p)) ** 2}")
    points = tmp_path / "points.csv"
    points.write_text("\n".join(rows) + "\n")
    assert cli.main(["fit", "--points", str(points), "--modes", "3750"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["gain_coefficient"] == pytest.approx(0.4, rel=1e-6)
    assert len(payload["gamma"]) == 8


def test_fit_rejects_missing_header(tmp_path, capsys):
    points = tmp_path / "points.csv"
    points.write_text("a,b\n1,2\n")
    assert cli.main(["fit", "--points", str(points), "--modes", "10"]) == 2


def test_scenario_template_round_trips(tmp_path, capsys):
    for kind in cli.SCENARIO_KINDS:
        assert cli.main(["scenario", "--template", kind]) == 0
        spec = json.loads(capsys.readouterr().out)
        parsed = cli.parse_scenario(spec)
        assert parsed.kind == kind
        assert parsed.grid


def test_scenario_runs_and_emits_pinned_columns(tmp_path):
    spec = cli.default_scenario("nrf_vs_mean_photons")
    # Shrink to a fast smoke-scale sweep.
    spec["geometry"]["signal_aperture_diameter_mm"] = 2.0
    spec["geometry"]["idler_aperture_diameter_mm"] = 2.0 * 811.5 / 628.5
    spec["grid"] = [1.0, 4.0]
    spec["pulses_per_point"] = 2000
    spec["resamples"] = 50
    config = _write_json(tmp_path / "spec.json", spec)
    out = tmp_path / "rows.csv"
    assert cli.main(["scenario", "--config", config, "--out", str(out)]) == 0
    with out.open() as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == cli.CSV_COLUMNS
    assert len(rows) == 3
    for row in rows[1:]:
        assert row[cli.CSV_COLUMNS.index("error")] == ""
        assert float(row[cli.CSV_COLUMNS.index("nrf_mc")]) >= 0.0


def test_scenario_byte_identical_reruns(tmp_path):
    spec = cli.default_scenario("nrf_vs_mean_photons")
    spec["geometry"]["signal_aperture_diameter_mm"] = 2.0
    spec["geometry"]["idler_aperture_diameter_mm"] = 2.0 * 811.5 / 628.5
    spec["grid"] = [2.0, 6.0]
    spec["pulses_per_point"] = 1000
    spec["resamples"] = 40
    config = _write_json(tmp_path / "spec.json", spec)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert cli.main(["scenario", "--config", config, "--out", str(a)]) == 0
    assert cli.main(["scenario", "--config", config, "--out", str(b), "--workers", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_scenario_point_errors_are_recorded_not_fatal(tmp_path):
    spec = cli.default_scenario("nrf_vs_mean_photons")
    spec["geometry"]["signal_aperture_diameter_mm"] = 2.0
    spec["geometry"]["idler_aperture_diameter_mm"] = 2.0 * 811.5 / 628.5
    spec["grid"] = [0.0, 2.0]  # zero mean photons: NRF undefined at point 0
    spec["pulses_per_point"] = 500
    spec["resamples"] = 0
    config = _write_json(tmp_path / "spec.json", spec)
    out = tmp_path / "rows.csv"
    assert cli.main(["scenario", "--config", config, "--out", str(out)]) == 0
    with out.open() as handle:
        rows = list(csv.DictReader(handle))
    assert rows[0]["error"] != ""
    assert rows[1]["error"] == ""
    assert rows[1]["nrf_analytic"] != ""


def test_scenario_requires_config_or_template(capsys):
    assert cli.main(["scenario"]) == 2


def test_mc_ci_covers_analytic_on_most_grid_points(tmp_path):
    # Small-mode sweep at 1e5 pulses per point: the bootstrap interval must
    # cover the analytic value on at least 90% of points.
    spec = cli.default_scenario("nrf_vs_mean_photons")
    spec["geometry"]["signal_aperture_diameter_mm"] = 2.0
    spec["geometry"]["idler_aperture_diameter_mm"] = 2.0 * 811.5 / 628.5
    spec["geometry"]["idler_displacement_mm"] = 0.3
    spec["signal_efficiency"] = 0.77
    spec["idler_efficiency"] = 0.70
    spec["grid"] = [0.5, 1.0, 2.0, 4.0, 7.0, 10.0, 13.0, 16.0, 19.0, 22.0]
    spec["pulses_per_point"] = 100_000
    spec["resamples"] = 500
    spec["seed"] = 2
    rows = cli.run_scenario(cli.parse_scenario(spec))
    covered = 0
    for row in rows:
        assert row["error"] == ""
        if row["nrf_ci_lo"] <= row["nrf_analytic"] <= row["nrf_ci_hi"]:
            covered += 1
    assert covered >= 9
