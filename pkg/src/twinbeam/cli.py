"""Command-line interface: predict, simulate, fit and figure-style sweeps.

Configuration files are JSON with units spelled out in the field names.
Numeric CSV cells are written with repr(), so re-running a subcommand with
identical inputs and seed yields byte-identical output.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Sequence

from . import analytic, estimator, gainfit, model, sampler

__all__ = ["main", "run_scenario", "ScenarioSpec", "default_scenario", "SCENARIO_KINDS"]

SCENARIO_KINDS = (
    "aperture_sweep_both",
    "aperture_sweep_signal",
    "gain_sweep",
    "displacement_sweep",
    "nrf_vs_mean_photons",
)

CSV_COLUMNS = [
    "grid_value",
    "nrf_analytic",
    "nrf_mc",
    "nrf_ci_lo",
    "nrf_ci_hi",
    "mean_n1",
    "mean_n2",
    "g11",
    "g22",
    "g12",
    "m",
    "k_s",
    "k_i",
    "error",
    "nrf_mc_db",
]


class ConfigError(ValueError):
    """Malformed configuration input; maps to exit code 2."""


def _get(data: dict, key: str, kind, default=None, required: bool = False):
    if key not in data:
        if required:
            raise ConfigError(f"{key}: missing required field")
        return default
    value = data[key]
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from None


def _reject_unknown(data: dict, allowed: set[str], where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"{name}: unknown field in {where}")


_CONFIG_FIELDS = {
    "matched_pairs",
    "unmatched_signal",
    "unmatched_idler",
    "mean_photons_per_mode",
    "signal_efficiency",
    "idler_efficiency",
    "signal_noise_electrons",
    "idler_noise_electrons",
    "signal_background_photons",
    "idler_background_photons",
}


def parse_experiment_config(data: dict) -> model.ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    _reject_unknown(data, _CONFIG_FIELDS, "experiment config")
    try:
        partition = model.ModePartition(
            matched_pairs=_get(data, "matched_pairs", int, 0),
            unmatched_signal=_get(data, "unmatched_signal", int, 0),
            unmatched_idler=_get(data, "unmatched_idler", int, 0),
        )
        return model.ExperimentConfig(
            partition=partition,
            mean_photons_per_mode=_get(data, "mean_photons_per_mode", float, required=True),
            signal_channel=model.DetectionChannel(
                efficiency=_get(data, "signal_efficiency", float, 1.0),
                electronic_noise_rms=_get(data, "signal_noise_electrons", float, 0.0),
            ),
            idler_channel=model.DetectionChannel(
                efficiency=_get(data, "idler_efficiency", float, 1.0),
                electronic_noise_rms=_get(data, "idler_noise_electrons", float, 0.0),
            ),
            background_signal=_get(data, "signal_background_photons", float, 0.0),
            background_idler=_get(data, "idler_background_photons", float, 0.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


_GEOMETRY_FIELDS = {
    "signal_aperture_diameter_mm",
    "idler_aperture_diameter_mm",
    "idler_displacement_mm",
    "transverse_coherence_length_mm",
    "pulse_duration_ps",
    "coherence_time_ps",
    "signal_wavelength_min_nm",
    "signal_wavelength_max_nm",
    "idler_wavelength_min_nm",
    "idler_wavelength_max_nm",
}


def parse_geometry(data: dict) -> model.OpticalGeometry:
    if not isinstance(data, dict):
        raise ConfigError("geometry: expected a JSON object")
    _reject_unknown(data, _GEOMETRY_FIELDS, "geometry")
    kwargs = {}
    for name in _GEOMETRY_FIELDS:
        if name == "idler_displacement_mm":
            kwargs[name] = _get(data, name, float, 0.0)
        else:
            kwargs[name] = _get(data, name, float, required=True)
    try:
        return model.OpticalGeometry(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@dataclass
class ScenarioSpec:
    """One figure-style sweep: a base setup plus a grid over one parameter."""

    kind: str
    geometry: model.OpticalGeometry
    grid: list[float]
    mean_photons_per_mode: float = 1.0
    signal_efficiency: float = 1.0
    idler_efficiency: float = 1.0
    signal_noise_electrons: float = 0.0
    idler_noise_electrons: float = 0.0
    signal_background_photons: float = 0.0
    idler_background_photons: float = 0.0
    pulses_per_point: int = 20000
    seed: int = 1
    resamples: int = 400
    gain_coefficient: float = 0.4
    background_slope: float = 0.0

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"kind: must be one of {', '.join(SCENARIO_KINDS)}")
        if not self.grid:
            raise ConfigError("grid: must be a nonempty list")
        if self.pulses_per_point < 2:
            raise ConfigError("pulses_per_point: must be >= 2")


_SCENARIO_FIELDS = {
    "kind",
    "geometry",
    "grid",
    "mean_photons_per_mode",
    "signal_efficiency",
    "idler_efficiency",
    "signal_noise_electrons",
    "idler_noise_electrons",
    "signal_background_photons",
    "idler_background_photons",
    "pulses_per_point",
    "seed",
    "resamples",
    "gain_coefficient",
    "background_slope",
}


def parse_scenario(data: dict) -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ConfigError("scenario: expected a JSON object")
    _reject_unknown(data, _SCENARIO_FIELDS, "scenario spec")
    if "geometry" not in data:
        raise ConfigError("geometry: missing required field")
    grid = data.get("grid")
    if not isinstance(grid, list) or not grid:
        raise ConfigError("grid: must be a nonempty list of numbers")
    return ScenarioSpec(
        kind=_get(data, "kind", str, required=True),
        geometry=parse_geometry(data["geometry"]),
        grid=[float(g) for g in grid],
        mean_photons_per_mode=_get(data, "mean_photons_per_mode", float, 1.0),
        signal_efficiency=_get(data, "signal_efficiency", float, 1.0),
        idler_efficiency=_get(data, "idler_efficiency", float, 1.0),
        signal_noise_electrons=_get(data, "signal_noise_electrons", float, 0.0),
        idler_noise_electrons=_get(data, "idler_noise_electrons", float, 0.0),
        signal_background_photons=_get(data, "signal_background_photons", float, 0.0),
        idler_background_photons=_get(data, "idler_background_photons", float, 0.0),
        pulses_per_point=_get(data, "pulses_per_point", int, 20000),
        seed=_get(data, "seed", int, 1),
        resamples=_get(data, "resamples", int, 400),
        gain_coefficient=_get(data, "gain_coefficient", float, 0.4),
        background_slope=_get(data, "background_slope", float, 0.0),
    )


def _point_setup(spec: ScenarioSpec, value: float):
    """(partition, mean photons, backgrounds) for one grid point."""
    geom = spec.geometry
    nbar = spec.mean_photons_per_mode
    bg1 = spec.signal_background_photons
    bg2 = spec.idler_background_photons

    if spec.kind == "aperture_sweep_both":
        ratio = geom.idler_wavelength_max_nm / geom.signal_wavelength_min_nm
        geom = geom.with_(
            signal_aperture_diameter_mm=value,
            idler_aperture_diameter_mm=value * ratio,
        )
    elif spec.kind == "aperture_sweep_signal":
        geom = geom.with_(signal_aperture_diameter_mm=value)
    elif spec.kind == "displacement_sweep":
        geom = geom.with_(idler_displacement_mm=value)
    elif spec.kind == "nrf_vs_mean_photons":
        nbar = value
    elif spec.kind == "gain_sweep":
        gain = model.GainModel(
            gain_coefficient=spec.gain_coefficient,
            pump_power=value,
            background_slope=spec.background_slope,
        )
        nbar = gain.mean_photons_per_mode
        bg1 = bg2 = gain.background_at(value)

    return model.mode_partition(geom), nbar, bg1, bg2


def _point_config(spec: ScenarioSpec, value: float) -> model.ExperimentConfig:
    partition, nbar, bg1, bg2 = _point_setup(spec, value)
    return model.ExperimentConfig(
        partition=partition,
        mean_photons_per_mode=nbar,
        signal_channel=model.DetectionChannel(
            efficiency=spec.signal_efficiency,
            electronic_noise_rms=spec.signal_noise_electrons,
        ),
        idler_channel=model.DetectionChannel(
            efficiency=spec.idler_efficiency,
            electronic_noise_rms=spec.idler_noise_electrons,
        ),
        background_signal=bg1,
        background_idler=bg2,
    )


def run_scenario(
    spec: ScenarioSpec,
    workers: int = 1,
    subtract_noise: bool = True,
) -> list[dict]:
    """Evaluate every grid point: analytic prediction plus Monte Carlo.

    A failing point gets its message in the `error` cell and the sweep
    continues. Point i simulates with seed spec.seed + i so that grid
    points are statistically independent.
    """
    rows = []
    for index, value in enumerate(spec.grid):
        row = {name: "" for name in CSV_COLUMNS}
        row["grid_value"] = value
        try:
            config = _point_config(spec, value)
            part = config.partition
            row["m"] = part.matched_pairs
            row["k_s"] = part.unmatched_signal
            row["k_i"] = part.unmatched_idler

            predicted = analytic.nrf_predict(config)
            row["nrf_analytic"] = predicted.nrf

            samples = sampler.simulate(
                config,
                n_pulses=spec.pulses_per_point,
                seed=spec.seed + index,
                workers=workers,
            )
            estimate = estimator.nrf_estimate(
                samples,
                subtract_noise=subtract_noise,
                resamples=spec.resamples,
                bootstrap_seed=spec.seed + index,
            )
            row["nrf_mc"] = estimate.nrf
            row["nrf_ci_lo"] = estimate.ci_low if estimate.ci_low is not None else ""
            row["nrf_ci_hi"] = estimate.ci_high if estimate.ci_high is not None else ""
            row["mean_n1"] = estimate.mean_n1
            row["mean_n2"] = estimate.mean_n2
            if estimate.nrf > 0:
                row["nrf_mc_db"] = -10.0 * math.log10(estimate.nrf)

            g = estimator.g2_estimates(samples)
            row["g11"] = g.g11
            row["g22"] = g.g22
            row["g12"] = g.g12
        except Exception as exc:  # recorded, sweep continues
            row["error"] = str(exc)
        rows.append(row)
    return rows


def default_scenario(kind: str) -> dict:
    """A plausible, fully overridable spec dict for each sweep kind."""
    geometry = model.reference_geometry()
    base = {
        "kind": kind,
        "geometry": {
            "signal_aperture_diameter_mm": geometry.signal_aperture_diameter_mm,
            "idler_aperture_diameter_mm": geometry.idler_aperture_diameter_mm,
            "idler_displacement_mm": 0.0,
            "transverse_coherence_length_mm": geometry.transverse_coherence_length_mm,
            "pulse_duration_ps": geometry.pulse_duration_ps,
            "coherence_time_ps": geometry.coherence_time_ps,
            "signal_wavelength_min_nm": geometry.signal_wavelength_min_nm,
            "signal_wavelength_max_nm": geometry.signal_wavelength_max_nm,
            "idler_wavelength_min_nm": geometry.idler_wavelength_min_nm,
            "idler_wavelength_max_nm": geometry.idler_wavelength_max_nm,
        },
        "mean_photons_per_mode": 13.15,
        "signal_efficiency": 0.77,
        "idler_efficiency": 0.70,
        "signal_noise_electrons": 0.0,
        "idler_noise_electrons": 0.0,
        "signal_background_photons": 0.0,
        "idler_background_photons": 0.0,
        "pulses_per_point": 20000,
        "seed": 1,
        "resamples": 400,
    }
    if kind == "aperture_sweep_both":
        # A small residual misalignment makes the mismatch penalty shrink as
        # the apertures grow; perfectly aligned apertures would be flat.
        base["geometry"]["idler_displacement_mm"] = 0.3
        base["grid"] = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0]
    elif kind == "aperture_sweep_signal":
        fixed_idler = 10.2
        base["geometry"]["idler_aperture_diameter_mm"] = fixed_idler
        matched = model.matched_signal_diameter(fixed_idler, model.reference_geometry())
        base["grid"] = [f * matched for f in (0.5, 0.7, 0.85, 1.0, 1.15, 1.3, 1.5)]
        base["geometry"]["signal_aperture_diameter_mm"] = matched
    elif kind == "gain_sweep":
        base["gain_coefficient"] = 0.4
        base["background_slope"] = 0.0
        base["grid"] = [2.0, 6.0, 12.0, 20.0, 30.0, 45.0, 65.0, 100.0]
    elif kind == "displacement_sweep":
        base["geometry"]["idler_aperture_diameter_mm"] = 10.2
        base["geometry"]["signal_aperture_diameter_mm"] = model.matched_signal_diameter(
            10.2, model.reference_geometry()
        )
        base["mean_photons_per_mode"] = model.gain_to_mean_photons(3.7)
        base["grid"] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0]
    elif kind == "nrf_vs_mean_photons":
        base["geometry"]["idler_aperture_diameter_mm"] = 10.2
        base["geometry"]["signal_aperture_diameter_mm"] = model.matched_signal_diameter(
            10.2, model.reference_geometry()
        )
        base["geometry"]["idler_displacement_mm"] = 0.5
        base["signal_efficiency"] = 1.0
        base["idler_efficiency"] = 1.0
        base["grid"] = [1.0, 4.0, 7.0, 10.0, 13.0, 16.0, 19.0, 22.0]
    else:
        raise ConfigError(f"kind: must be one of {', '.join(SCENARIO_KINDS)}")
    return base


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return repr(value)
    if isinstance(value, int):
        return repr(value)
    return repr(float(value))


def _write_csv(rows: list[dict], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(row[name]) for name in CSV_COLUMNS])


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from None


def _open_out(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _cmd_predict(args) -> int:
    config = parse_experiment_config(_load_json(args.config))
    report = analytic.nrf_predict(config)
    payload = {
        "nrf": report.nrf,
        "nrf_db": -10.0 * math.log10(report.nrf) if report.nrf > 0 else None,
        "mean_n1": report.mean_n1,
        "mean_n2": report.mean_n2,
        "contributions": {
            "loss_term": report.contributions.loss_term,
            "mismatch_term": report.contributions.mismatch_term,
            "background_term": report.contributions.background_term,
            "efficiency_imbalance_term": report.contributions.efficiency_imbalance_term,
        },
    }
    out, close = _open_out(args.out)
    try:
        json.dump(payload, out, indent=2)
        out.write("\n")
    finally:
        if close:
            out.close()
    return 0


def _cmd_simulate(args) -> int:
    config = parse_experiment_config(_load_json(args.config))
    samples = sampler.simulate(config, args.pulses, args.seed, workers=args.workers)
    estimate = estimator.nrf_estimate(
        samples,
        subtract_noise=not args.no_noise_subtraction,
        resamples=args.resamples if args.pulses >= 100 else 0,
        bootstrap_seed=args.seed,
    )
    summary = {
        "nrf": estimate.nrf,
        "nrf_ci": [estimate.ci_low, estimate.ci_high],
        "mean_n1": estimate.mean_n1,
        "mean_n2": estimate.mean_n2,
        "low_signal": estimate.low_signal,
        "backend": sampler.ACTIVE_BACKEND,
    }
    out, close = _open_out(args.out)
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["pulse", "n1", "n2"])
        for i in range(samples.n_pulses):
            writer.writerow([i, repr(float(samples.n1[i])), repr(float(samples.n2[i]))])
    finally:
        if close:
            out.close()
    summary_stream = sys.stdout if close else sys.stderr
    json.dump(summary, summary_stream, indent=2)
    summary_stream.write("\n")
    return 0


def _cmd_fit(args) -> int:
    points = []
    try:
        with open(args.points, "r", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or not {"power", "photons"} <= set(reader.fieldnames):
                raise ConfigError("points: CSV must have a header with power,photons")
            for line in reader:
                points.append(
                    gainfit.PowerPoint(
                        pump_power=float(line["power"]),
                        mean_photons=float(line["photons"]),
                    )
                )
    except FileNotFoundError:
        raise ConfigError(f"points: file not found: {args.points}") from None
    except ValueError as exc:
        raise ConfigError(f"points: {exc}") from None

    try:
        fit = gainfit.fit_gain_curve(
            points,
            mode_count=args.modes,
            background_slope=args.background_slope,
            weighting=args.weighting,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    payload = {
        "gain_coefficient": fit.gain_coefficient,
        "residual_norm": fit.residual_norm,
        "gamma": [float(g) for g in fit.gammas],
        "at_boundary": fit.at_boundary,
    }
    out, close = _open_out(args.out)
    try:
        json.dump(payload, out, indent=2)
        out.write("\n")
    finally:
        if close:
            out.close()
    return 0


def _cmd_scenario(args) -> int:
    if args.template:
        payload = default_scenario(args.template)
        out, close = _open_out(args.out)
        try:
            json.dump(payload, out, indent=2)
            out.write("\n")
        finally:
            if close:
                out.close()
        return 0
    if not args.config:
        raise ConfigError("config: --config is required unless --template is given")
    spec = parse_scenario(_load_json(args.config))
    if args.pulses is not None:
        if args.pulses < 2:
            raise ConfigError("pulses: must be >= 2")
        spec.pulses_per_point = args.pulses
    if args.seed is not None:
        spec.seed = args.seed
    rows = run_scenario(
        spec,
        workers=args.workers,
        subtract_noise=not args.no_noise_subtraction,
    )
    buffer = io.StringIO()
    _write_csv(rows, buffer)
    out, close = _open_out(args.out)
    try:
        out.write(buffer.getvalue())
    finally:
        if close:
            out.close()
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinbeam",
        description="Twin-beam photon statistics: predictions, Monte Carlo and sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    predict = sub.add_parser("predict", help="analytic NRF for a config")
    predict.add_argument("--config", required=True, help="experiment config JSON")
    predict.add_argument("--out", default=None, help="output path (default stdout)")
    predict.set_defaults(func=_cmd_predict)

    simulate = sub.add_parser("simulate", help="generate pulse records")
    simulate.add_argument("--config", required=True, help="experiment config JSON")
    simulate.add_argument("--out", default=None, help="records CSV path (default stdout)")
    simulate.add_argument("--pulses", type=int, default=10000)
    simulate.add_argument("--seed", type=int, default=1)
    simulate.add_argument("--workers", type=int, default=1)
    simulate.add_argument("--resamples", type=int, default=400)
    simulate.add_argument("--no-noise-subtraction", action="store_true")
    simulate.set_defaults(func=_cmd_simulate)

    fit = sub.add_parser("fit", help="fit the gain law to power,photons data")
    fit.add_argument("--points", required=True, help="CSV with header power,photons")
    fit.add_argument("--modes", type=int, required=True, help="mode count from geometry")
    fit.add_argument("--background-slope", type=float, default=0.0)
    fit.add_argument("--weighting", choices=["uniform", "inverse"], default="uniform")
    fit.add_argument("--out", default=None)
    fit.set_defaults(func=_cmd_fit)

    scenario = sub.add_parser("scenario", help="run a figure-style sweep")
    scenario.add_argument("--config", default=None, help="scenario spec JSON")
    scenario.add_argument("--template", choices=SCENARIO_KINDS, default=None,
                          help="print a default spec for this kind and exit")
    scenario.add_argument("--out", default=None)
    scenario.add_argument("--pulses", type=int, default=None, help="override pulses per point")
    scenario.add_argument("--seed", type=int, default=None)
    scenario.add_argument("--workers", type=int, default=1)
    scenario.add_argument("--no-noise-subtraction", action="store_true")
    scenario.set_defaults(func=_cmd_scenario)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"twinbeam: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"twinbeam: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
