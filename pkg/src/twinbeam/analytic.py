"""Closed-form photon-number statistics for twin-beam configurations.

Two independent routes to the same quantities live here:

* direct moment algebra (`nrf_predict`), fast and exact for any mode counts;
* a brute-force enumeration oracle (`enumerate_moments`) that sums the joint
  photon-number distribution per mode and composes independent modes by
  cumulant additivity. It exists to validate the algebra and the sampler
  and deliberately shares no formulas with `nrf_predict`.

The difference-signal variance for two beams with equal mean photon number N
is N**2 * (g11 + g22 - 2*g12) + 2*N, and the noise reduction factor is that
variance divided by the summed means. Loss is modeled as independent
binomial thinning per arm; electronic noise is handled downstream by the
estimator, never here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import ExperimentConfig

__all__ = [
    "CorrelationTriple",
    "NrfContributions",
    "NrfReport",
    "ExactMoments",
    "variance_difference",
    "nrf_from_variance",
    "delta_unmatched",
    "twin_beam_correlations",
    "classicality_witness",
    "nrf_predict",
    "enumerate_moments",
]

ENUMERATION_TAIL = 1e-12


@dataclass(frozen=True)
class CorrelationTriple:
    """Normalized second-order auto- and cross-correlations of the two arms."""

    g11: float
    g22: float
    g12: float

    def __post_init__(self):
        for name in ("g11", "g22", "g12"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name}: must be finite and nonnegative")


@dataclass(frozen=True)
class NrfContributions:
    """Additive breakdown of a predicted noise reduction factor."""

    loss_term: float
    mismatch_term: float
    background_term: float
    efficiency_imbalance_term: float

    @property
    def total(self) -> float:
        return (
            self.loss_term
            + self.mismatch_term
            + self.background_term
            + self.efficiency_imbalance_term
        )


@dataclass(frozen=True)
class NrfReport:
    """Noise reduction factor with its provenance.

    Analytic predictions carry a contribution breakdown; Monte Carlo
    estimates carry a bootstrap confidence interval instead.
    """

    nrf: float
    mean_n1: float
    mean_n2: float
    contributions: NrfContributions | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    bootstrap_se: float | None = None
    low_signal: bool = False


def variance_difference(mean_photons: float, g: CorrelationTriple) -> float:
    """Variance of the photon-number difference of two equal-mean beams."""
    if mean_photons < 0:
        raise ValueError("mean_photons: must be >= 0")
    n = mean_photons
    return n * n * (g.g11 + g.g22 - 2.0 * g.g12) + 2.0 * n


def nrf_from_variance(variance: float, mean_n1: float, mean_n2: float) -> float:
    """Noise reduction factor: difference variance over summed means."""
    total = mean_n1 + mean_n2
    if total <= 0:
        raise ValueError("mean_n1 + mean_n2: must be > 0")
    return variance / total


def delta_unmatched(matched: int, unmatched: int, mean_photons: float) -> float:
    """NRF penalty of `unmatched` uncompensated modes among `matched` pairs.

    Equals unmatched * (mean + 1) / (matched + unmatched); with no matched
    pairs this reduces to the single-thermal-mode value mean + 1.
    """
    if matched + unmatched < 1:
        raise ValueError("matched + unmatched: must be >= 1")
    return unmatched * (mean_photons + 1.0) / (matched + unmatched)


def twin_beam_correlations(matched_pairs: int, mean_photons_per_mode: float) -> CorrelationTriple:
    """Correlation triple of an ideal lossless set of matched mode pairs.

    g11 = g22 = 1 + 1/m and g12 = 1 + (mean + 1) / (m * mean); plugging these
    into the difference variance gives exactly zero. A single pair recovers
    the textbook thermal values (2, 2, 2 + 1/mean).
    """
    if matched_pairs < 1:
        raise ValueError("matched_pairs: must be >= 1")
    if mean_photons_per_mode <= 0:
        raise ValueError("mean_photons_per_mode: must be > 0")
    m = matched_pairs
    n = mean_photons_per_mode
    return CorrelationTriple(
        g11=1.0 + 1.0 / m,
        g22=1.0 + 1.0 / m,
        g12=1.0 + (n + 1.0) / (m * n),
    )


def classicality_witness(g: CorrelationTriple) -> str:
    """Apply the Cauchy-Schwarz bound g11 + g22 - 2*g12 >= 0.

    Returns "nonclassical" when the bound is violated, otherwise
    "classical_compatible" (equality included).
    """
    return "nonclassical" if g.g11 + g.g22 - 2.0 * g.g12 < 0 else "classical_compatible"


def nrf_predict(config: ExperimentConfig) -> NrfReport:
    """Exact noise reduction factor of a configuration, decomposed.

    First and second moments of the detected counts follow from binomial
    thinning of the matched thermal sum (shared by both arms), thinned
    independent thermal modes per arm, and thinned Poisson backgrounds:

    * loss: m * mean * (eta1*(1-eta1) + eta2*(1-eta2))
    * efficiency imbalance: m * (mean**2 + mean) * (eta1 - eta2)**2
    * mismatch: per arm, k * (eta**2 * mean**2 + eta * mean)
    * background: per arm, eta * background

    divided by the summed detected means. Lossless matched configurations
    give exactly 0; equal efficiencies give 1 - eta; lossless unmatched
    modes reproduce the delta_unmatched penalty.
    """
    part = config.partition
    n = config.mean_photons_per_mode
    eta1 = config.signal_channel.efficiency
    eta2 = config.idler_channel.efficiency
    m = part.matched_pairs
    bunched = n * n + n  # per-mode thermal variance

    mean1 = config.mean_detected_signal
    mean2 = config.mean_detected_idler
    total = mean1 + mean2
    if total <= 0:
        raise ValueError("config: total detected mean is zero, NRF undefined")

    loss = m * n * (eta1 * (1.0 - eta1) + eta2 * (1.0 - eta2))
    imbalance = m * bunched * (eta1 - eta2) ** 2
    mismatch = part.unmatched_signal * (eta1 * eta1 * n * n + eta1 * n) + (
        part.unmatched_idler * (eta2 * eta2 * n * n + eta2 * n)
    )
    background = eta1 * config.background_signal + eta2 * config.background_idler

    contributions = NrfContributions(
        loss_term=loss / total,
        mismatch_term=mismatch / total,
        background_term=background / total,
        efficiency_imbalance_term=imbalance / total,
    )
    return NrfReport(
        nrf=(loss + imbalance + mismatch + background) / total,
        mean_n1=mean1,
        mean_n2=mean2,
        contributions=contributions,
    )


@dataclass(frozen=True)
class ExactMoments:
    """First and second moments of the detected counts, from enumeration."""

    mean_n1: float
    mean_n2: float
    var_n1: float
    var_n2: float
    cov: float

    @property
    def variance_difference(self) -> float:
        return self.var_n1 + self.var_n2 - 2.0 * self.cov

    @property
    def nrf(self) -> float:
        return nrf_from_variance(self.variance_difference, self.mean_n1, self.mean_n2)


def _thermal_pmf(mean: float, truncation: int) -> np.ndarray:
    n = np.arange(truncation + 1)
    if mean == 0:
        pmf = np.zeros(truncation + 1)
        pmf[0] = 1.0
        return pmf
    # P(n) = mean**n / (1+mean)**(n+1), evaluated in log space
    return np.exp(n * math.log(mean) - (n + 1) * math.log1p(mean))


def _poisson_pmf(rate: float, truncation: int) -> np.ndarray:
    n = np.arange(truncation + 1)
    if rate == 0:
        pmf = np.zeros(truncation + 1)
        pmf[0] = 1.0
        return pmf
    return stats.poisson.pmf(n, rate)


def _check_tail(pmf: np.ndarray, what: str, truncation: int) -> None:
    tail = 1.0 - pmf.sum()
    if tail >= ENUMERATION_TAIL:
        raise ValueError(
            f"truncation={truncation} leaves tail mass {tail:.3e} for {what}; "
            "increase the truncation"
        )


def _thinned_moments(pmf: np.ndarray, eta: float) -> tuple[float, float, float]:
    """(E[d], E[d^2], E[d|n] per n) of a binomially thinned enumerated count."""
    counts = np.arange(pmf.size, dtype=float)
    if eta == 1.0:
        cond_mean = counts
        cond_sq = counts * counts
    elif eta == 0.0:
        cond_mean = np.zeros_like(counts)
        cond_sq = np.zeros_like(counts)
    else:
        # Conditional thinning moments per source count n.
        kernel = stats.binom.pmf(counts[None, :], counts[:, None], eta)
        cond_mean = kernel @ counts
        cond_sq = kernel @ (counts * counts)
    mean = float(pmf @ cond_mean)
    second = float(pmf @ cond_sq)
    return mean, second, cond_mean


def enumerate_moments(config: ExperimentConfig, truncation: int = 200) -> ExactMoments:
    """Exact detected-count moments by summing per-mode distributions.

    Sums the truncated joint distribution of each mode class (matched thermal
    pairs, unmatched thermal modes, Poisson backgrounds) through binomial
    thinning, then composes identical independent modes by additivity of
    means, variances and covariances. Raises when the truncated tail mass of
    any source distribution is not below 1e-12.

    Intended for small per-mode means (a few photons); cost grows with the
    square of the truncation.
    """
    part = config.partition
    nbar = config.mean_photons_per_mode
    eta1 = config.signal_channel.efficiency
    eta2 = config.idler_channel.efficiency

    mean1 = mean2 = var1 = var2 = cov = 0.0

    if nbar > 0 and (part.matched_pairs or part.unmatched_signal or part.unmatched_idler):
        thermal = _thermal_pmf(nbar, truncation)
        _check_tail(thermal, "the thermal mode distribution", truncation)

        if part.matched_pairs:
            m1, s1, c1 = _thinned_moments(thermal, eta1)
            m2, s2, c2 = _thinned_moments(thermal, eta2)
            # Arms are conditionally independent given the shared count.
            cross = float(thermal @ (c1 * c2))
            pair_cov = cross - m1 * m2
            mean1 += part.matched_pairs * m1
            mean2 += part.matched_pairs * m2
            var1 += part.matched_pairs * (s1 - m1 * m1)
            var2 += part.matched_pairs * (s2 - m2 * m2)
            cov += part.matched_pairs * pair_cov

        if part.unmatched_signal:
            m1, s1, _ = _thinned_moments(thermal, eta1)
            mean1 += part.unmatched_signal * m1
            var1 += part.unmatched_signal * (s1 - m1 * m1)
        if part.unmatched_idler:
            m2, s2, _ = _thinned_moments(thermal, eta2)
            mean2 += part.unmatched_idler * m2
            var2 += part.unmatched_idler * (s2 - m2 * m2)

    if config.background_signal > 0:
        pois = _poisson_pmf(config.background_signal, truncation)
        _check_tail(pois, "the signal background distribution", truncation)
        m1, s1, _ = _thinned_moments(pois, eta1)
        mean1 += m1
        var1 += s1 - m1 * m1
    if config.background_idler > 0:
        pois = _poisson_pmf(config.background_idler, truncation)
        _check_tail(pois, "the idler background distribution", truncation)
        m2, s2, _ = _thinned_moments(pois, eta2)
        mean2 += m2
        var2 += s2 - m2 * m2

    return ExactMoments(mean_n1=mean1, mean_n2=mean2, var_n1=var1, var_n2=var2, cov=cov)
