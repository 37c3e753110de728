"""Backend contract: both kernels emit bit-identical sample sets."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtri as scipy_ndtri

from conftest import make_config
from twinbeam.sampler import _kernel_py, available_backends, build_kernel_plan, chunk_uniforms
from twinbeam.sampler._plan import (
    KIND_GAUSS,
    ComponentPlan,
    _negative_binomial_cdf,
    _poisson_cdf,
    _thinning_plan,
)

_cython = available_backends().get("cython")
needs_cython = pytest.mark.skipif(_cython is None, reason="compiled kernel not built")


def _run(kernel, config, n=8192, seed=7):
    plan = build_kernel_plan(config)
    u = chunk_uniforms(seed, 0, n)
    out1 = np.empty(n)
    out2 = np.empty(n)
    kernel(plan, u, out1, out2)
    return out1, out2


PATH_CONFIGS = {
    "table_matched_exact_thinning": make_config(matched=50, mean=1.0, eta1=0.7),
    "flipped_thinning_asymmetric": make_config(
        matched=100, unmatched_signal=5, unmatched_idler=3, mean=13.15,
        eta1=0.77, eta2=0.70,
    ),
    "lossless": make_config(matched=100, unmatched_signal=20, unmatched_idler=20, mean=13.0),
    "gaussian_matched_sum": make_config(
        matched=3750, unmatched_signal=100, unmatched_idler=100, mean=13.15,
        eta1=0.77, eta2=0.70, noise1=180.0, noise2=180.0,
    ),
    "backgrounds_and_noise": make_config(
        matched=5, unmatched_signal=1, unmatched_idler=2, mean=1.3,
        eta1=0.77, eta2=0.70, noise1=1.5, noise2=2.0, bg1=0.4, bg2=0.2,
    ),
    "background_only": make_config(matched=1, mean=0.0, eta1=0.9, eta2=0.8, bg1=5.0, bg2=3.0),
    "extreme_efficiencies": make_config(
        matched=10, unmatched_signal=2, unmatched_idler=2, mean=2.0,
        eta1=0.01, eta2=0.99,
    ),
    "all_gaussian_paths": make_config(
        matched=3750, unmatched_signal=500, unmatched_idler=500, mean=745.0,
        eta1=0.77, eta2=0.70, bg1=20000.0, bg2=15000.0,
    ),
    "efficiency_half": make_config(matched=20, mean=3.0, eta1=0.5),
}


@needs_cython
@pytest.mark.parametrize("name", sorted(PATH_CONFIGS))
def test_kernels_bit_identical(name):
    config = PATH_CONFIGS[name]
    py1, py2 = _run(_kernel_py.sample_chunk, config)
    cy1, cy2 = _run(_cython, config)
    assert np.array_equal(py1, cy1)
    assert np.array_equal(py2, cy2)


@needs_cython
def test_full_simulation_identical_across_backends(monkeypatch):
    import twinbeam.sampler as sampler_module

    config = make_config(
        matched=40, unmatched_signal=4, unmatched_idler=4, mean=2.5,
        eta1=0.8, eta2=0.6, noise1=2.0, noise2=1.0, bg1=0.7,
    )
    results = {}
    for name, kernel in available_backends().items():
        monkeypatch.setattr(sampler_module, "sample_chunk", kernel)
        samples = sampler_module.simulate(config, 30000, seed=55, workers=2)
        results[name] = samples
    assert np.array_equal(results["python"].n1, results["cython"].n1)
    assert np.array_equal(results["python"].n2, results["cython"].n2)


def test_ndtri_accuracy_against_scipy():
    rng = np.random.default_rng(0)
    u = np.concatenate([
        rng.random(100_000),
        np.array([1e-300, 1e-50, 1e-18, 1e-8, 0.074, 0.075, 0.076, 0.5, 0.925, 1 - 1e-9, 1 - 1e-16]),
    ])
    mine = _kernel_py.ndtri(u)
    ref = scipy_ndtri(u)
    assert np.max(np.abs(mine - ref) / np.maximum(np.abs(ref), 1e-8)) < 5e-15


def test_exact_binomial_inversion_distribution():
    # Deterministic dense-grid inversion: per-outcome masses must match the
    # binomial pmf to grid resolution.
    grid = (np.arange(200_000) + 0.5) / 200_000
    for n_src, eta in [(37, 0.7), (12, 0.99), (5, 0.5), (9, 0.06)]:
        thin = _thinning_plan(eta, ComponentPlan(kind=KIND_GAUSS, mean=1e9, sd=1.0))
        src = np.full(grid.size, n_src, dtype=np.int64)
        out = _kernel_py._binomial_exact(src, grid.copy(), thin)
        counts = np.bincount(out, minlength=n_src + 1) / grid.size
        ref = stats.binom.pmf(np.arange(n_src + 1), n_src, eta)
        assert np.abs(counts - ref).max() < 2e-5


def test_negative_binomial_table_distribution():
    grid = (np.arange(200_000) + 0.5) / 200_000
    for modes, nu in [(1, 1.0), (3, 0.5), (50, 13.15)]:
        cdf = _negative_binomial_cdf(modes, nu)
        draws = np.minimum(np.searchsorted(cdf, grid, side="right"), cdf.size - 1)
        mean, var = modes * nu, modes * nu * (1 + nu)
        assert draws.mean() == pytest.approx(mean, rel=2e-3)
        assert draws.var() == pytest.approx(var, rel=5e-3)
        ref = stats.nbinom.pmf(np.arange(cdf.size), modes, 1.0 / (1.0 + nu))
        counts = np.bincount(draws, minlength=cdf.size) / grid.size
        assert np.abs(counts - ref).max() < 2e-5


def test_poisson_table_distribution():
    grid = (np.arange(200_000) + 0.5) / 200_000
    cdf = _poisson_cdf(4.2)
    draws = np.minimum(np.searchsorted(cdf, grid, side="right"), cdf.size - 1)
    ref = stats.poisson.pmf(np.arange(cdf.size), 4.2)
    counts = np.bincount(draws, minlength=cdf.size) / grid.size
    assert np.abs(counts - ref).max() < 2e-5


def test_gaussian_count_approximation_moments():
    # The normal-approximation path is only used for means above 1e4, where
    # rounding and clamping are negligible; spot-check the moments.
    comp = ComponentPlan(kind=KIND_GAUSS, mean=48750.0, sd=math.sqrt(3750 * 13.0 * 14.0))
    u = chunk_uniforms(1, 0, 200_000)[:, 0]
    draws = _kernel_py._draw_component(comp, u)
    assert draws.mean() == pytest.approx(comp.mean, rel=1e-3)
    assert draws.std() == pytest.approx(comp.sd, rel=1e-2)


def test_table_tail_truncation_is_tiny():
    cdf = _negative_binomial_cdf(50, 13.15)
    assert 1.0 - cdf[-1] < 1e-11
    assert cdf.size < 3000
