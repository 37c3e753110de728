"""Shared per-configuration sampling plan for both kernel backends.

A pulse consumes one row of a uniform block with a fixed column layout:

    0  matched pre-detection photon sum
    1  signal-arm thinning of the matched sum
    2  idler-arm thinning of the matched sum
    3  signal-arm unmatched detected total
    4  idler-arm unmatched detected total
    5  signal background detected count
    6  idler background detected count
    7  signal electronic noise
    8  idler electronic noise

Unused columns (eta = 1, no noise, ...) are simply ignored; the layout is
positional, so the same seed produces identical photon counts whether or not
electronic noise is enabled.

Both kernels must transform uniforms into counts using only operations whose
IEEE-754 results are platform- and implementation-independent: comparisons,
add/sub/mul/div, sqrt, rint/floor, and table lookups. The one exception is
libm log inside the Gaussian quantile tails, which the Python kernel calls
through scalar math.log to match the compiled kernel bit for bit. All tables
are built here, once, in ordinary numpy, and shared by both backends, so
their construction is free to use any math.

Distribution choices (equal in law to drawing every mode separately):

* matched pre-detection sum: negative binomial with `matched_pairs`
  successes, i.e. the sum of that many thermal modes;
* unmatched totals and backgrounds are sampled after thinning, using the
  closure of thermal and Poisson statistics under binomial loss;
* the matched sum is thinned per arm with an exact one-uniform binomial
  inversion (expanded outward from the mode), switching to a rounded
  Gaussian above EXACT_THINNING_LIMIT source photons;
* any component whose detected mean exceeds NORMAL_APPROX_MEAN is drawn
  from a rounded Gaussian instead of a table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..model import ExperimentConfig

NCOLS = 9
COL_MATCHED = 0
COL_THIN1 = 1
COL_THIN2 = 2
COL_UNMATCHED1 = 3
COL_UNMATCHED2 = 4
COL_BACKGROUND1 = 5
COL_BACKGROUND2 = 6
COL_NOISE1 = 7
COL_NOISE2 = 8

KIND_NONE = 0
KIND_TABLE = 1
KIND_GAUSS = 2

THIN_COPY = 0  # efficiency 1: detected = source
THIN_ZERO = 1  # efficiency 0: detected = 0
THIN_ACTIVE = 2

NORMAL_APPROX_MEAN = 10_000.0
EXACT_THINNING_LIMIT = 10_000
TABLE_TAIL = 1e-12
_MAX_TABLE = 1 << 24

_EMPTY = np.zeros(1)


@dataclass(frozen=True)
class ComponentPlan:
    """How to draw one independent count component from one uniform."""

    kind: int
    cdf: np.ndarray = field(default_factory=lambda: _EMPTY)
    mean: float = 0.0
    sd: float = 0.0


@dataclass(frozen=True)
class ThinningPlan:
    """How to thin the matched sum in one arm."""

    kind: int
    efficiency: float = 1.0
    p_small: float = 0.0  # min(eta, 1 - eta)
    odds: float = 0.0  # p_small / (1 - p_small)
    flipped: int = 0  # 1 when eta > 1/2 (we draw the lost photons)
    mode_pmf: np.ndarray = field(default_factory=lambda: _EMPTY)


@dataclass(frozen=True)
class KernelPlan:
    matched: ComponentPlan
    thin1: ThinningPlan
    thin2: ThinningPlan
    unmatched1: ComponentPlan
    unmatched2: ComponentPlan
    background1: ComponentPlan
    background2: ComponentPlan
    noise1: float
    noise2: float
    thinning_limit: int = EXACT_THINNING_LIMIT


def _cdf_table(logpmf_of, mean: float, sd: float) -> np.ndarray:
    """CDF table truncated once the missing tail mass drops below TABLE_TAIL.

    The running sum is accumulated in extended precision: plain float64
    cumsum roundoff (~n*eps) would mask the 1e-12 tail criterion for tables
    of a few thousand entries.
    """
    length = int(mean + 12.0 * sd) + 32
    while True:
        pmf = np.exp(logpmf_of(length))
        acc = np.cumsum(pmf.astype(np.longdouble))
        cdf = acc.astype(np.float64)
        tail_done = acc[-1] >= 1.0 - TABLE_TAIL
        if tail_done or pmf[-1] < 1e-300:
            # Either the tail target is met or the pmf has underflowed, in
            # which case extending the table cannot add any mass.
            stop = int(np.searchsorted(acc, 1.0 - TABLE_TAIL, side="left"))
            stop = min(stop, length - 1)
            return np.ascontiguousarray(cdf[: stop + 1])
        length *= 2
        if length > _MAX_TABLE:
            raise RuntimeError("count table exceeds the size cap; mean too large for table sampling")


def _negative_binomial_cdf(modes: int, per_mode_mean: float) -> np.ndarray:
    """CDF of a sum of `modes` thermal modes with the given mean each."""
    s = per_mode_mean / (1.0 + per_mode_mean)
    log_s = math.log(per_mode_mean) - math.log1p(per_mode_mean)
    lp0 = -modes * math.log1p(per_mode_mean)

    def logpmf(length):
        j = np.arange(length - 1, dtype=float)
        steps = log_s + np.log(j + modes) - np.log1p(j)
        out = np.empty(length)
        out[0] = lp0
        out[1:] = lp0 + np.cumsum(steps)
        return out

    mean = modes * per_mode_mean
    sd = math.sqrt(modes * per_mode_mean * (1.0 + per_mode_mean))
    return _cdf_table(logpmf, mean, sd)


def _poisson_cdf(rate: float) -> np.ndarray:
    log_rate = math.log(rate)

    def logpmf(length):
        j = np.arange(length - 1, dtype=float)
        steps = log_rate - np.log1p(j)
        out = np.empty(length)
        out[0] = -rate
        out[1:] = -rate + np.cumsum(steps)
        return out

    return _cdf_table(logpmf, rate, math.sqrt(rate))


def _thermal_component(modes: int, per_mode_mean: float) -> ComponentPlan:
    if modes == 0 or per_mode_mean == 0.0:
        return ComponentPlan(kind=KIND_NONE)
    mean = modes * per_mode_mean
    variance = modes * per_mode_mean * (1.0 + per_mode_mean)
    if mean > NORMAL_APPROX_MEAN:
        return ComponentPlan(kind=KIND_GAUSS, mean=mean, sd=math.sqrt(variance))
    return ComponentPlan(kind=KIND_TABLE, cdf=_negative_binomial_cdf(modes, per_mode_mean))


def _poisson_component(rate: float) -> ComponentPlan:
    if rate == 0.0:
        return ComponentPlan(kind=KIND_NONE)
    if rate > NORMAL_APPROX_MEAN:
        return ComponentPlan(kind=KIND_GAUSS, mean=rate, sd=math.sqrt(rate))
    return ComponentPlan(kind=KIND_TABLE, cdf=_poisson_cdf(rate))


def _binomial_mode_pmf(p_small: float, max_source: int) -> np.ndarray:
    """pmf at the distribution mode of Binomial(n, p_small) for each n.

    The kernels recompute the mode as floor((n + 1) * p_small); the table
    must use the identical expression.
    """
    n = np.arange(max_source + 1, dtype=float)
    mode = np.floor((n + 1.0) * p_small)
    return stats.binom.pmf(mode, n, p_small)


def _thinning_plan(efficiency: float, matched: ComponentPlan) -> ThinningPlan:
    if efficiency == 1.0:
        return ThinningPlan(kind=THIN_COPY, efficiency=1.0)
    if efficiency == 0.0:
        return ThinningPlan(kind=THIN_ZERO, efficiency=0.0)
    flipped = 1 if efficiency > 0.5 else 0
    p_small = 1.0 - efficiency if flipped else efficiency
    odds = p_small / (1.0 - p_small)
    if matched.kind == KIND_NONE:
        pmf = _EMPTY
    else:
        if matched.kind == KIND_TABLE:
            max_source = min(matched.cdf.size - 1, EXACT_THINNING_LIMIT)
        else:
            max_source = EXACT_THINNING_LIMIT
        pmf = _binomial_mode_pmf(p_small, max_source)
    return ThinningPlan(
        kind=THIN_ACTIVE,
        efficiency=efficiency,
        p_small=p_small,
        odds=odds,
        flipped=flipped,
        mode_pmf=pmf,
    )


def build_kernel_plan(config: ExperimentConfig) -> KernelPlan:
    part = config.partition
    nbar = config.mean_photons_per_mode
    eta1 = config.signal_channel.efficiency
    eta2 = config.idler_channel.efficiency

    matched = _thermal_component(part.matched_pairs, nbar)
    return KernelPlan(
        matched=matched,
        thin1=_thinning_plan(eta1, matched),
        thin2=_thinning_plan(eta2, matched),
        unmatched1=_thermal_component(part.unmatched_signal, eta1 * nbar),
        unmatched2=_thermal_component(part.unmatched_idler, eta2 * nbar),
        background1=_poisson_component(eta1 * config.background_signal),
        background2=_poisson_component(eta2 * config.background_idler),
        noise1=config.signal_channel.electronic_noise_rms,
        noise2=config.idler_channel.electronic_noise_rms,
    )
