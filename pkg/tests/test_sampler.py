import numpy as np
import pytest

from conftest import make_config
from twinbeam import enumerate_moments, sample_pulse, sample_thermal, simulate
from twinbeam.estimator import moments, nrf_estimate


def test_simulate_is_deterministic_in_seed():
    config = make_config(matched=5, mean=1.3, eta1=0.8, noise1=1.0, noise2=2.0, bg1=0.5)
    a = simulate(config, 5000, seed=99)
    b = simulate(config, 5000, seed=99)
    assert np.array_equal(a.n1, b.n1)
    assert np.array_equal(a.n2, b.n2)
    c = simulate(config, 5000, seed=100)
    assert not np.array_equal(a.n1, c.n1)


def test_simulate_worker_count_does_not_change_output():
    config = make_config(matched=20, mean=2.0, eta1=0.7, bg1=1.0, noise2=0.5)
    serial = simulate(config, 20000, seed=3, workers=1)
    threaded = simulate(config, 20000, seed=3, workers=8)
    assert np.array_equal(serial.n1, threaded.n1)
    assert np.array_equal(serial.n2, threaded.n2)


def test_simulate_prefix_stability_across_lengths():
    # Chunk keying means a longer run extends a shorter one verbatim.
    config = make_config(matched=4, mean=1.0, eta1=0.77, eta2=0.7)
    short = simulate(config, 6000, seed=11)
    long = simulate(config, 12000, seed=11)
    assert np.array_equal(short.n1, long.n1[:6000])
    assert np.array_equal(short.n2, long.n2[:6000])


def test_ideal_twins_are_identical_every_pulse():
    for m, nbar, seed in [(1, 0.5, 0), (13, 4.0, 7), (200, 13.0, 123)]:
        samples = simulate(make_config(matched=m, mean=nbar), 3000, seed=seed)
        assert np.array_equal(samples.n1, samples.n2)
        assert np.all(samples.n1 >= 0)


def test_dark_config_yields_all_zero():
    samples = simulate(make_config(matched=5, mean=0.0), 1000, seed=5)
    assert not samples.n1.any()
    assert not samples.n2.any()


def test_sample_thermal_moments(rng):
    draws = sample_thermal(1.0, rng, size=1_000_000)
    assert draws.mean() == pytest.approx(1.0, abs=0.005)
    assert draws.var() == pytest.approx(2.0, abs=0.02)


def test_sample_thermal_bunching(rng):
    nbar = 13.154116418008245
    draws = sample_thermal(nbar, rng, size=1_000_000).astype(float)
    g2 = (np.mean(draws * draws) - draws.mean()) / draws.mean() ** 2
    assert g2 == pytest.approx(2.0, abs=0.01)


def test_sample_thermal_zero_mean(rng):
    assert sample_thermal(0.0, rng) == 0
    assert not sample_thermal(0.0, rng, size=100).any()


def test_sample_pulse_reference_agrees_with_chunked_kernel(rng):
    # The kernels draw aggregated sums (negative binomial, thinned
    # components); the reference path draws every mode. Same distribution.
    config = make_config(
        matched=8, unmatched_signal=2, unmatched_idler=3, mean=1.6,
        eta1=0.77, eta2=0.64, bg1=0.9, bg2=0.3,
    )
    n = 60_000
    ref = np.array([sample_pulse(config, rng) for _ in range(n)])
    kernel = simulate(config, n, seed=2024)
    exact = enumerate_moments(config, truncation=160)

    for arm, label in ((0, "n1"), (1, "n2")):
        ref_mean = ref[:, arm].mean()
        ker_mean = (kernel.n1 if arm == 0 else kernel.n2).mean()
        true_mean = exact.mean_n1 if arm == 0 else exact.mean_n2
        true_var = exact.var_n1 if arm == 0 else exact.var_n2
        se = np.sqrt(true_var / n)
        assert abs(ref_mean - true_mean) < 4 * se, label
        assert abs(ker_mean - true_mean) < 4 * se, label


def test_simulate_moments_match_enumeration_within_four_se():
    config = make_config(
        matched=3, unmatched_signal=1, unmatched_idler=2, mean=1.2,
        eta1=0.9, eta2=0.55, bg1=0.2,
    )
    n = 100_000
    samples = simulate(config, n, seed=77)
    exact = enumerate_moments(config, truncation=140)
    summary = moments(samples)

    se_mean1 = np.sqrt(exact.var_n1 / n)
    se_mean2 = np.sqrt(exact.var_n2 / n)
    assert abs(summary.mean1 - exact.mean_n1) < 4 * se_mean1
    assert abs(summary.mean2 - exact.mean_n2) < 4 * se_mean2
    # Gaussian-scale standard error for the variances is good enough at 1e5.
    se_var1 = exact.var_n1 * np.sqrt(8.0 / n)
    se_var2 = exact.var_n2 * np.sqrt(8.0 / n)
    assert abs(summary.var1 - exact.var_n1) < 4 * se_var1
    assert abs(summary.var2 - exact.var_n2) < 4 * se_var2


def test_lossy_matched_nrf_lands_on_one_minus_eta():
    config = make_config(matched=50, mean=1.0, eta1=0.7)
    samples = simulate(config, 100_000, seed=8)
    estimate = nrf_estimate(samples, resamples=500)
    assert estimate.ci_low <= 0.30 <= estimate.ci_high


def test_independent_thermal_nrf_is_mean_plus_one_for_any_mode_count():
    for k, seed in [(1, 31), (10, 32), (100, 33)]:
        config = make_config(matched=0, unmatched_signal=k, unmatched_idler=k, mean=1.0)
        samples = simulate(config, 100_000, seed=seed)
        estimate = nrf_estimate(samples, resamples=500)
        assert estimate.ci_low <= 2.0 <= estimate.ci_high, f"k={k}"


def test_simulate_validates_arguments():
    config = make_config(matched=1, mean=1.0)
    with pytest.raises(ValueError):
        simulate(config, 0, seed=1)
    with pytest.raises(ValueError):
        simulate(config, 10, seed=1, chunk_size=0)


def test_sample_set_record_access():
    samples = simulate(make_config(matched=2, mean=1.0), 50, seed=4)
    assert len(samples) == 50
    rec = samples[7]
    assert rec.n1 == samples.n1[7]
    assert sum(1 for _ in samples.records) == 50
