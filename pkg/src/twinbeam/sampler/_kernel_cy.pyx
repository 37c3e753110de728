# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernel.

Scalar twin of _kernel_py.py; the two must stay in lockstep so that both
backends emit bit-identical sample sets (the cross-backend test enforces
this). Only IEEE-exact operations plus libm log/sqrt are used per draw.
"""

from libc.math cimport fabs, floor, log, rint, sqrt

import numpy as np

from ._plan import (
    KIND_GAUSS,
    KIND_NONE,
    KIND_TABLE,
    THIN_ACTIVE,
    THIN_COPY,
    THIN_ZERO,
)

BACKEND_NAME = "cython"


cdef inline double _ndtri(double u) nogil:
    # Wichura AS241 (PPND16); coefficient order mirrors _kernel_py.py.
    cdef double q, r, num, den, val
    if u < 1e-300:
        u = 1e-300
    q = u - 0.5
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * (num / den)
    if q < 0.0:
        r = u
    else:
        r = 1.0 - u
    r = sqrt(-log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    if q < 0.0:
        return -val
    return val


cdef inline long long _upper_bound(const double[::1] cdf, double u) nogil:
    # First index with cdf[idx] > u, clamped into the table.
    cdef long long lo = 0
    cdef long long hi = cdf.shape[0]
    cdef long long mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    if lo >= cdf.shape[0]:
        lo = cdf.shape[0] - 1
    return lo


cdef inline long long _gauss_count(double mean, double sd, double u) nogil:
    cdef double raw = rint(mean + sd * _ndtri(u))
    if raw < 0.0:
        raw = 0.0
    return <long long> raw


cdef inline long long _draw_component(int kind, const double[::1] cdf,
                                      double mean, double sd, double u) nogil:
    if kind == 0:  # KIND_NONE
        return 0
    if kind == 1:  # KIND_TABLE
        return _upper_bound(cdf, u)
    return _gauss_count(mean, sd, u)


cdef inline long long _binom_exact(long long n, double u, double p_small,
                                   double odds, const double[::1] pm) nogil:
    cdef long long mode, up_k, dn_k, result
    cdef double pmf0, cdf, up_f, dn_f
    mode = <long long> floor((n + 1.0) * p_small)
    pmf0 = pm[n]
    cdf = pmf0
    if u < cdf or n == 0:
        return mode
    up_k = mode
    dn_k = mode
    up_f = pmf0
    dn_f = pmf0
    while True:
        if up_k < n:
            up_f = up_f * ((n - up_k) / (up_k + 1.0)) * odds
            up_k = up_k + 1
            cdf = cdf + up_f
            if u < cdf:
                return up_k
        if dn_k > 0:
            dn_f = dn_f * (dn_k / (n - dn_k + 1.0)) / odds
            dn_k = dn_k - 1
            cdf = cdf + dn_f
            if u < cdf:
                return dn_k
        if (up_k >= n and dn_k <= 0) or (up_f == 0.0 and dn_f == 0.0):
            return mode


cdef inline long long _thin_one(long long source, int kind, double eta,
                                double p_small, double odds, int flipped,
                                const double[::1] pm, long long limit,
                                double u) nogil:
    cdef double nb, mean, sd, raw
    cdef long long k
    if kind == 0:  # THIN_COPY
        return source
    if kind == 1:  # THIN_ZERO
        return 0
    if source == 0:
        return 0
    if source > limit:
        nb = <double> source
        mean = nb * eta
        sd = sqrt(nb * eta * (1.0 - eta))
        raw = rint(mean + sd * _ndtri(u))
        if raw < 0.0:
            raw = 0.0
        if raw > nb:
            raw = nb
        return <long long> raw
    k = _binom_exact(source, u, p_small, odds, pm)
    if flipped:
        return source - k
    return k


def sample_chunk(plan, double[:, ::1] u, double[::1] out1, double[::1] out2):
    """Transform one uniform block (pulses x 9) into detected counts."""
    cdef int m_kind = plan.matched.kind
    cdef const double[::1] m_cdf = plan.matched.cdf
    cdef double m_mean = plan.matched.mean
    cdef double m_sd = plan.matched.sd

    cdef int t1_kind = plan.thin1.kind
    cdef double t1_eta = plan.thin1.efficiency
    cdef double t1_p = plan.thin1.p_small
    cdef double t1_odds = plan.thin1.odds
    cdef int t1_flip = plan.thin1.flipped
    cdef const double[::1] t1_pm = plan.thin1.mode_pmf

    cdef int t2_kind = plan.thin2.kind
    cdef double t2_eta = plan.thin2.efficiency
    cdef double t2_p = plan.thin2.p_small
    cdef double t2_odds = plan.thin2.odds
    cdef int t2_flip = plan.thin2.flipped
    cdef const double[::1] t2_pm = plan.thin2.mode_pmf

    cdef int u1_kind = plan.unmatched1.kind
    cdef const double[::1] u1_cdf = plan.unmatched1.cdf
    cdef double u1_mean = plan.unmatched1.mean
    cdef double u1_sd = plan.unmatched1.sd

    cdef int u2_kind = plan.unmatched2.kind
    cdef const double[::1] u2_cdf = plan.unmatched2.cdf
    cdef double u2_mean = plan.unmatched2.mean
    cdef double u2_sd = plan.unmatched2.sd

    cdef int b1_kind = plan.background1.kind
    cdef const double[::1] b1_cdf = plan.background1.cdf
    cdef double b1_mean = plan.background1.mean
    cdef double b1_sd = plan.background1.sd

    cdef int b2_kind = plan.background2.kind
    cdef const double[::1] b2_cdf = plan.background2.cdf
    cdef double b2_mean = plan.background2.mean
    cdef double b2_sd = plan.background2.sd

    cdef double noise1 = plan.noise1
    cdef double noise2 = plan.noise2
    cdef long long limit = plan.thinning_limit

    cdef Py_ssize_t i, n_pulses = u.shape[0]
    cdef long long matched, n1, n2
    cdef double f1, f2

    with nogil:
        for i in range(n_pulses):
            matched = _draw_component(m_kind, m_cdf, m_mean, m_sd, u[i, 0])
            n1 = _thin_one(matched, t1_kind, t1_eta, t1_p, t1_odds, t1_flip,
                           t1_pm, limit, u[i, 1])
            n2 = _thin_one(matched, t2_kind, t2_eta, t2_p, t2_odds, t2_flip,
                           t2_pm, limit, u[i, 2])
            n1 = n1 + _draw_component(u1_kind, u1_cdf, u1_mean, u1_sd, u[i, 3])
            n2 = n2 + _draw_component(u2_kind, u2_cdf, u2_mean, u2_sd, u[i, 4])
            n1 = n1 + _draw_component(b1_kind, b1_cdf, b1_mean, b1_sd, u[i, 5])
            n2 = n2 + _draw_component(b2_kind, b2_cdf, b2_mean, b2_sd, u[i, 6])
            f1 = <double> n1
            f2 = <double> n2
            if noise1 > 0.0:
                f1 = f1 + noise1 * _ndtri(u[i, 7])
            if noise2 > 0.0:
                f2 = f2 + noise2 * _ndtri(u[i, 8])
            out1[i] = f1
            out2[i] = f2
