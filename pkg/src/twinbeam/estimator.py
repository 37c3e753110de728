"""Statistics over sample sets: moments, correlations, NRF with bootstrap.

Second moments inside the correlation estimates are plug-in (divisor n) so
that inserting them back into the difference-variance identity reproduces
the plug-in variance exactly for equal-mean data. The variance and
covariance reported by `moments` are the unbiased (divisor n-1) versions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .analytic import CorrelationTriple, NrfReport
from .sampler import SampleSet

__all__ = [
    "MomentSummary",
    "moments",
    "g2_estimates",
    "nrf_estimate",
    "dark_noise_estimate",
]

# Keeps bootstrap resampling streams disjoint from the sampler's chunk keys.
_BOOTSTRAP_DOMAIN = 1 << 62
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class MomentSummary:
    mean1: float
    mean2: float
    var1: float
    var2: float
    cov: float

    @property
    def var_diff(self) -> float:
        return self.var1 + self.var2 - 2.0 * self.cov


def moments(samples: SampleSet) -> MomentSummary:
    """Sample means and unbiased variances/covariance of the two arms."""
    if samples.n_pulses < 2:
        raise ValueError("samples: need at least 2 records for variances")
    cov = np.cov(samples.n1, samples.n2, ddof=1)
    return MomentSummary(
        mean1=float(np.mean(samples.n1)),
        mean2=float(np.mean(samples.n2)),
        var1=float(cov[0, 0]),
        var2=float(cov[1, 1]),
        cov=float(cov[0, 1]),
    )


def g2_estimates(samples: SampleSet) -> CorrelationTriple:
    """Normalized second-order auto- and cross-correlations.

    Normally ordered: g11 = (<n1^2> - <n1>) / <n1>^2, and
    g12 = <n1 n2> / (<n1><n2>). Electronic noise inflates the
    autocorrelations; estimate on noise-free records when that matters.
    """
    x = samples.n1
    y = samples.n2
    mean1 = float(np.mean(x))
    mean2 = float(np.mean(y))
    if mean1 == 0.0 or mean2 == 0.0:
        raise ValueError("samples: zero mean count, correlations undefined")
    g11 = (float(np.mean(x * x)) - mean1) / (mean1 * mean1)
    g22 = (float(np.mean(y * y)) - mean2) / (mean2 * mean2)
    g12 = float(np.mean(x * y)) / (mean1 * mean2)
    return CorrelationTriple(g11=g11, g22=g22, g12=g12)


def _configured_noise_variance(samples: SampleSet) -> float:
    s1 = samples.config.signal_channel.electronic_noise_rms
    s2 = samples.config.idler_channel.electronic_noise_rms
    return s1 * s1 + s2 * s2


def nrf_estimate(
    samples: SampleSet,
    subtract_noise: bool = True,
    resamples: int = 1000,
    confidence: float = 0.95,
    bootstrap_seed: int = 0,
) -> NrfReport:
    """Noise reduction factor with a percentile bootstrap interval.

    NRF = (Var(n1 - n2) - sigma_e1^2 - sigma_e2^2) / (mean1 + mean2) when
    subtracting the configured electronic noise. A negative numerator is
    reported as-is with the low_signal flag set. Resample r draws its
    indices from a Philox stream keyed by (bootstrap_seed, r), so the
    interval is reproducible and order-independent. Pass resamples=0 to
    skip the interval.
    """
    ms = moments(samples)
    noise_var = _configured_noise_variance(samples) if subtract_noise else 0.0
    total_mean = ms.mean1 + ms.mean2
    if total_mean <= 0:
        raise ValueError("samples: total mean count must be > 0 for an NRF")
    numerator = ms.var_diff - noise_var
    nrf = numerator / total_mean

    ci_low = ci_high = se = None
    if resamples > 0:
        if samples.n_pulses < 100:
            raise ValueError("samples: need >= 100 records for a bootstrap interval")
        diff = samples.n1 - samples.n2
        total = samples.n1 + samples.n2
        n = samples.n_pulses
        values = np.empty(resamples)
        for r in range(resamples):
            key = np.array(
                [bootstrap_seed & _MASK64, (_BOOTSTRAP_DOMAIN + r) & _MASK64],
                dtype=np.uint64,
            )
            idx = Generator(Philox(key=key)).integers(0, n, size=n)
            d = diff[idx]
            values[r] = (np.var(d, ddof=1) - noise_var) / np.mean(total[idx])
        alpha = 100.0 * (1.0 - confidence) / 2.0
        ci_low = float(np.percentile(values, alpha))
        ci_high = float(np.percentile(values, 100.0 - alpha))
        se = float(np.std(values, ddof=1))

    return NrfReport(
        nrf=nrf,
        mean_n1=ms.mean1,
        mean_n2=ms.mean2,
        ci_low=ci_low,
        ci_high=ci_high,
        bootstrap_se=se,
        low_signal=numerator < 0,
    )


def dark_noise_estimate(samples: SampleSet) -> tuple[float, float]:
    """Per-arm electronic-noise RMS from a dark run (no photons configured).

    The configured noise subtraction uses known channel values; this is the
    calibration path for when the noise must come from detector data
    instead.
    """
    if samples.n_pulses < 2:
        raise ValueError("samples: need at least 2 records")
    return (
        float(np.std(samples.n1, ddof=1)),
        float(np.std(samples.n2, ddof=1)),
    )
