import math

import numpy as np
import pytest

from twinbeam import PowerPoint, fit_gain_curve, gain_to_mean_photons


def _synthetic_points(c_true, modes, slope, powers, noise=0.0, rng=None):
    points = []
    for p in powers:
        photons = modes * math.sinh(c_true * math.sqrt(p)) ** 2 + slope * p
        if noise:
            photons *= 1.0 + noise * rng.standard_normal()
        points.append(PowerPoint(pump_power=p, mean_photons=max(photons, 0.0)))
    return points


def test_exact_recovery_on_noiseless_data():
    powers = np.linspace(2.0, 25.0, 12)
    points = _synthetic_points(0.4, 3750, 0.0, powers)
    fit = fit_gain_curve(points, mode_count=3750, background_slope=0.0)
    assert fit.gain_coefficient == pytest.approx(0.4, rel=1e-6)
    assert not fit.at_boundary


def test_recovery_with_background():
    powers = np.linspace(1.0, 30.0, 15)
    points = _synthetic_points(0.35, 2400, 50.0, powers)
    fit = fit_gain_curve(points, mode_count=2400, background_slope=50.0)
    assert fit.gain_coefficient == pytest.approx(0.35, rel=1e-6)


def test_noisy_recovery_median_error_under_two_percent():
    rng = np.random.default_rng(7)
    powers = np.linspace(2.0, 25.0, 12)
    errors = []
    for _ in range(100):
        points = _synthetic_points(0.4, 3750, 0.0, powers, noise=0.05, rng=rng)
        fit = fit_gain_curve(points, mode_count=3750, background_slope=0.0)
        errors.append(abs(fit.gain_coefficient - 0.4) / 0.4)
    assert float(np.median(errors)) < 0.02


def test_reported_residual_matches_independent_reevaluation():
    rng = np.random.default_rng(3)
    powers = np.linspace(2.0, 25.0, 12)
    points = _synthetic_points(0.4, 3750, 10.0, powers, noise=0.05, rng=rng)
    fit = fit_gain_curve(points, mode_count=3750, background_slope=10.0)
    c = fit.gain_coefficient
    sse = sum(
        (p.mean_photons - 3750 * math.sinh(c * math.sqrt(p.pump_power)) ** 2 - 10.0 * p.pump_power) ** 2
        for p in points
    )
    assert math.sqrt(sse) == pytest.approx(fit.residual_norm, rel=1e-12, abs=1e-12)


def test_power_unit_rescaling_leaves_gammas_invariant():
    rng = np.random.default_rng(11)
    powers = np.linspace(2.0, 25.0, 12)
    points = _synthetic_points(0.4, 3750, 0.0, powers, noise=0.03, rng=rng)
    fit = fit_gain_curve(points, mode_count=3750, background_slope=0.0)

    for unit in (4.0, 3.7):
        rescaled = [
            PowerPoint(pump_power=p.pump_power * unit, mean_photons=p.mean_photons)
            for p in points
        ]
        refit = fit_gain_curve(rescaled, mode_count=3750, background_slope=0.0)
        assert np.max(np.abs(refit.gammas - fit.gammas) / fit.gammas) < 1e-9
        assert refit.gain_coefficient * math.sqrt(unit) == pytest.approx(
            fit.gain_coefficient, rel=1e-9
        )


def test_pure_background_reports_boundary():
    powers = np.linspace(1.0, 10.0, 8)
    points = [PowerPoint(pump_power=p, mean_photons=5.0 * p) for p in powers]
    with pytest.warns(UserWarning, match="boundary"):
        fit = fit_gain_curve(points, mode_count=100, background_slope=5.0)
    assert fit.at_boundary
    assert fit.gammas.max() < 2e-3  # pinned at the low edge of the search


def test_gamma_two_maps_to_paper_scale_mean():
    assert gain_to_mean_photons(2.0) == pytest.approx(13.15, abs=0.005)


def test_inverse_weighting_and_explicit_weights():
    powers = np.linspace(2.0, 25.0, 12)
    points = _synthetic_points(0.4, 100, 0.0, powers)
    uniform = fit_gain_curve(points, mode_count=100, background_slope=0.0)
    inverse = fit_gain_curve(points, mode_count=100, background_slope=0.0, weighting="inverse")
    assert inverse.gain_coefficient == pytest.approx(uniform.gain_coefficient, rel=1e-5)
    explicit = [
        PowerPoint(p.pump_power, p.mean_photons, weight=2.0) for p in points
    ]
    refit = fit_gain_curve(explicit, mode_count=100, background_slope=0.0)
    assert refit.gain_coefficient == pytest.approx(uniform.gain_coefficient, rel=1e-9)


def test_validation_errors():
    good = PowerPoint(1.0, 5.0)
    with pytest.raises(ValueError):
        fit_gain_curve([good, good], mode_count=10, background_slope=0.0)
    with pytest.raises(ValueError):
        fit_gain_curve([good] * 5, mode_count=0, background_slope=0.0)
    with pytest.raises(ValueError):
        fit_gain_curve([good] * 5, mode_count=10, background_slope=-1.0)
    with pytest.raises(ValueError):
        PowerPoint(-1.0, 5.0)
    with pytest.raises(ValueError):
        PowerPoint(1.0, -5.0)
    with pytest.raises(ValueError):
        fit_gain_curve([good] * 5, mode_count=10, background_slope=0.0, weighting="bogus")