"""Pure numpy sampling kernel.

Bit-identical to the compiled kernel in _kernel_cy.pyx: every per-draw
operation is either exact in IEEE-754 (comparisons, +-*/, sqrt, rint, floor,
table lookups) or routed through scalar libm (math.log) exactly like the C
code. Keep the two files in lockstep; the cross-backend test asserts
equality of whole sample sets.
"""

from __future__ import annotations

import math

import numpy as np

from ._plan import (
    COL_BACKGROUND1,
    COL_BACKGROUND2,
    COL_MATCHED,
    COL_NOISE1,
    COL_NOISE2,
    COL_THIN1,
    COL_THIN2,
    COL_UNMATCHED1,
    COL_UNMATCHED2,
    KIND_GAUSS,
    KIND_NONE,
    KIND_TABLE,
    THIN_ACTIVE,
    THIN_COPY,
    THIN_ZERO,
    ComponentPlan,
    KernelPlan,
    ThinningPlan,
)

BACKEND_NAME = "python"

# Wichura's AS241 (PPND16) rational approximations for the standard normal
# quantile. Coefficient order matters: evaluation is Horner from the last
# element, identically in both kernels.
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)

_TINY = 1e-300


def _poly(coeffs, x):
    acc = np.full_like(x, coeffs[-1]) if isinstance(x, np.ndarray) else coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def _log_scalar(values: np.ndarray) -> np.ndarray:
    # Scalar libm log: numpy's vectorized log differs in the last ulp on
    # SIMD builds, which would break cross-backend equality.
    return np.array([math.log(v) for v in values], dtype=np.float64)


def ndtri(u: np.ndarray) -> np.ndarray:
    """Standard normal quantile, elementwise, AS241 double precision."""
    u = np.maximum(u, _TINY)
    q = u - 0.5
    out = np.empty_like(u)

    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * (_poly(_A, r) / _poly(_B, r))

    tail = ~central
    if tail.any():
        qt = q[tail]
        ut = u[tail]
        r = np.where(qt < 0.0, ut, 1.0 - ut)
        r = np.sqrt(-_log_scalar(r))
        val = np.empty_like(r)
        near = r <= 5.0
        rn = r[near] - 1.6
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        far = ~near
        rf = r[far] - 5.0
        val[far] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0.0, -val, val)
    return out


def _table_draw(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, cdf.size - 1).astype(np.int64)


def _gauss_count(mean, sd, u: np.ndarray) -> np.ndarray:
    raw = np.rint(mean + sd * ndtri(u))
    return np.maximum(raw, 0.0).astype(np.int64)


def _draw_component(comp: ComponentPlan, u: np.ndarray) -> np.ndarray:
    if comp.kind == KIND_NONE:
        return np.zeros(u.size, dtype=np.int64)
    if comp.kind == KIND_TABLE:
        return _table_draw(comp.cdf, u)
    return _gauss_count(comp.mean, comp.sd, u)


def _binomial_exact(source: np.ndarray, u: np.ndarray, thin: ThinningPlan) -> np.ndarray:
    """Exact Binomial(source, p_small) by one-uniform inversion from the mode.

    The cumulative mass is accumulated over outcomes ordered mode, mode+1,
    mode-1, mode+2, ... with pmf values updated by the two-term recurrence.
    Must mirror the compiled kernel's loop exactly, including the order of
    the up/down steps and the exhaustion rules.
    """
    n = source
    pmf0 = thin.mode_pmf[n]
    mode = np.floor((n + 1.0) * thin.p_small).astype(np.int64)
    cdf = pmf0.copy()
    result = mode.copy()
    active = ~(u < cdf)
    active &= n > 0  # n == 0 always yields 0 (mode is 0)

    up_k = mode.copy()
    dn_k = mode.copy()
    up_f = pmf0.copy()
    dn_f = pmf0.copy()
    odds = thin.odds

    while active.any():
        can_up = active & (up_k < n)
        if can_up.any():
            iu = np.nonzero(can_up)[0]
            up_f[iu] = up_f[iu] * ((n[iu] - up_k[iu]) / (up_k[iu] + 1.0)) * odds
            up_k[iu] += 1
            cdf[iu] += up_f[iu]
            hit = iu[u[iu] < cdf[iu]]
            result[hit] = up_k[hit]
            active[hit] = False

        can_dn = active & (dn_k > 0)
        if can_dn.any():
            idn = np.nonzero(can_dn)[0]
            dn_f[idn] = dn_f[idn] * (dn_k[idn] / (n[idn] - dn_k[idn] + 1.0)) / odds
            dn_k[idn] -= 1
            cdf[idn] += dn_f[idn]
            hit = idn[u[idn] < cdf[idn]]
            result[hit] = dn_k[hit]
            active[hit] = False

        # Exhausted supports or pmf underflow: the residual mass is below
        # double resolution; fall back to the mode deterministically.
        stuck = active & (((up_k >= n) & (dn_k <= 0)) | ((up_f == 0.0) & (dn_f == 0.0)))
        if stuck.any():
            result[stuck] = mode[stuck]
            active[stuck] = False

    if thin.flipped:
        return n - result
    return result


def _thin(source: np.ndarray, thin: ThinningPlan, limit: int, u: np.ndarray) -> np.ndarray:
    if thin.kind == THIN_COPY:
        return source
    if thin.kind == THIN_ZERO:
        return np.zeros_like(source)
    out = np.zeros_like(source)
    eta = thin.efficiency

    big = source > limit
    if big.any():
        nb = source[big].astype(np.float64)
        mean = nb * eta
        sd = np.sqrt(nb * eta * (1.0 - eta))
        raw = np.rint(mean + sd * ndtri(u[big]))
        out[big] = np.minimum(np.maximum(raw, 0.0), nb).astype(np.int64)

    small = (~big) & (source > 0)
    if small.any():
        out[small] = _binomial_exact(source[small], u[small], thin)
    return out


def sample_chunk(plan: KernelPlan, u: np.ndarray, out1: np.ndarray, out2: np.ndarray) -> None:
    """Transform one uniform block (pulses x 9) into detected counts."""
    matched = _draw_component(plan.matched, u[:, COL_MATCHED])
    det1 = _thin(matched, plan.thin1, plan.thinning_limit, u[:, COL_THIN1])
    det2 = _thin(matched, plan.thin2, plan.thinning_limit, u[:, COL_THIN2])

    n1 = det1 + _draw_component(plan.unmatched1, u[:, COL_UNMATCHED1])
    n1 += _draw_component(plan.background1, u[:, COL_BACKGROUND1])
    n2 = det2 + _draw_component(plan.unmatched2, u[:, COL_UNMATCHED2])
    n2 += _draw_component(plan.background2, u[:, COL_BACKGROUND2])

    out1[:] = n1.astype(np.float64)
    out2[:] = n2.astype(np.float64)
    if plan.noise1 > 0.0:
        out1 += plan.noise1 * ndtri(u[:, COL_NOISE1])
    if plan.noise2 > 0.0:
        out2 += plan.noise2 * ndtri(u[:, COL_NOISE2])
