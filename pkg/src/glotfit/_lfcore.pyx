# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-cycle glottal kernels.

Same algorithm as ``_lfcore_py`` (the fallback): guaranteed brackets,
64 bisection steps, 3 clamped Newton polish steps. Per-sample units,
unit amplitude except for the explicit ee factor in fill_cycle.
"""

from libc.math cimport exp, sin, cos, log, fabs, M_PI, NAN

BACKEND = "compiled"


cpdef double solve_mu(double na, double d):
    cdef double lo, hi, mid, g, dg, mu, cand
    cdef int i
    if not na < d:
        return NAN
    lo = log(d / na) / d
    hi = 1.0 / na
    for i in range(64):
        mid = 0.5 * (lo + hi)
        g = mid * na - 1.0 + exp(-mid * d)
        if g > 0.0:
            hi = mid
        else:
            lo = mid
    mu = 0.5 * (lo + hi)
    for i in range(3):
        g = mu * na - 1.0 + exp(-mu * d)
        dg = na - d * exp(-mu * d)
        if dg != 0.0:
            cand = mu - g / dg
            if lo < cand < hi:
                mu = cand
    return mu


cdef inline double _area(double lam, double ne, double cos_ne, double sin_e,
                         double cos_w, double sin_w, double s_ret):
    cdef double enl, nr, el, ar, ai, den, qi
    enl = exp(-lam * ne)
    nr = cos_ne - enl
    el = exp(lam)
    ar = el * cos_w - 1.0
    ai = el * sin_w
    den = ar * ar + ai * ai
    qi = (sin_e * ar - nr * ai) / den
    return -qi / sin_e + s_ret


cpdef double solve_lambda(long ne, long np_, double mu, double na, long nc):
    cdef double omega, sin_e, cos_ne, cos_w, sin_w, d, e2, em, emd, s_ret
    cdef double cap, f0, lo, hi, flo, fhi, mid, f, lam, h, fp, fm, df, cand
    cdef int i
    omega = M_PI / np_
    sin_e = sin(omega * ne)
    cos_ne = cos(omega * ne)
    cos_w = cos(omega)
    sin_w = sin(omega)
    d = <double> (nc - ne)
    e2 = 1.0 / (mu * na)
    em = exp(-mu)
    emd = exp(-mu * d)
    s_ret = -e2 * ((1.0 - emd) / (1.0 - em) - d * emd)

    cap = 700.0 / ne
    f0 = _area(0.0, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
    if f0 == 0.0:
        return 0.0
    if f0 > 0.0:
        lo = 0.0
        flo = f0
        hi = 1.0 / ne
        fhi = _area(hi, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        while fhi > 0.0:
            lo = hi
            flo = fhi
            hi *= 2.0
            if hi > cap:
                return NAN
            fhi = _area(hi, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
    else:
        hi = 0.0
        fhi = f0
        lo = -1.0 / ne
        flo = _area(lo, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        while flo < 0.0:
            hi = lo
            fhi = flo
            lo *= 2.0
            if lo < -cap:
                return NAN
            flo = _area(lo, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)

    for i in range(64):
        mid = 0.5 * (lo + hi)
        f = _area(mid, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        if f > 0.0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    for i in range(3):
        h = 1e-7 * (1.0 + fabs(lam))
        fp = _area(lam + h, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        fm = _area(lam - h, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        df = (fp - fm) / (2.0 * h)
        if df != 0.0:
            f = _area(lam, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
            cand = lam - f / df
            if lo <= cand <= hi:
                lam = cand
    return lam


cpdef void fill_cycle(double lam, double mu, long ne, long np_, double na,
                      long nc, long n0, double ee, double[::1] out):
    cdef double omega, sin_e, scale, e2, emd
    cdef long n
    omega = M_PI / np_
    sin_e = sin(omega * ne)
    scale = -ee / sin_e
    e2 = ee / (mu * na)
    emd = exp(-mu * (nc - ne))
    for n in range(ne):
        out[n] = scale * exp(lam * (n - ne)) * sin(omega * n)
    for n in range(ne, nc):
        out[n] = -e2 * (exp(-mu * (n - ne)) - emd)
    for n in range(nc, n0):
        out[n] = 0.0
