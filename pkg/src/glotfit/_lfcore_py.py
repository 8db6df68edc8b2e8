"""Pure-Python/numpy fallback for the per-cycle glottal kernels.

Mirrors ``_lfcore.pyx`` operation for operation (same bracket construction,
64 bisection steps, 3 clamped Newton polish steps) so the two backends agree
to floating-point round-off. All quantities here are in per-sample units and
unit amplitude; callers scale by ee and convert to per-second units.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

_NAN = float("nan")


def solve_mu(na: float, d: float) -> float:
    """Positive root of mu*na - 1 + exp(-mu*d) = 0, or NaN if none exists.

    A positive root exists iff na < d; it lies in (log(d/na)/d, 1/na], with
    the lower end at the stationary point of the residual (guaranteed
    bracket).
    """
    if not na < d:
        return _NAN
    lo = math.log(d / na) / d
    hi = 1.0 / na
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        g = mid * na - 1.0 + math.exp(-mid * d)
        if g > 0.0:
            hi = mid
        else:
            lo = mid
    mu = 0.5 * (lo + hi)
    for _ in range(3):
        g = mu * na - 1.0 + math.exp(-mu * d)
        dg = na - d * math.exp(-mu * d)
        if dg != 0.0:
            cand = mu - g / dg
            if lo < cand < hi:
                mu = cand
    return mu


def _area(lam, ne, cos_ne, sin_e, cos_w, sin_w, s_ret):
    # Net area of one unit-amplitude cycle as a function of the open-phase
    # growth rate. Open-phase sum in closed form (geometric series), with
    # exp(-lam*ne) folded into the numerator so large lam cannot overflow.
    enl = math.exp(-lam * ne)
    nr = cos_ne - enl
    el = math.exp(lam)
    ar = el * cos_w - 1.0
    ai = el * sin_w
    den = ar * ar + ai * ai
    qi = (sin_e * ar - nr * ai) / den
    return -qi / sin_e + s_ret


def solve_lambda(ne: int, np_: int, mu: float, na: float, nc: int) -> float:
    """Growth rate making the discrete per-cycle sum vanish, or NaN."""
    omega = math.pi / np_
    sin_e = math.sin(omega * ne)
    cos_ne = math.cos(omega * ne)
    cos_w = math.cos(omega)
    sin_w = math.sin(omega)
    d = float(nc - ne)
    e2 = 1.0 / (mu * na)
    em = math.exp(-mu)
    emd = math.exp(-mu * d)
    s_ret = -e2 * ((1.0 - emd) / (1.0 - em) - d * emd)

    cap = 700.0 / ne
    f0 = _area(0.0, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
    if f0 == 0.0:
        return 0.0
    if f0 > 0.0:
        # area decreases with lam: expand to the right until it goes negative
        lo, flo = 0.0, f0
        hi = 1.0 / ne
        fhi = _area(hi, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        while fhi > 0.0:
            lo, flo = hi, fhi
            hi *= 2.0
            if hi > cap:
                return _NAN
            fhi = _area(hi, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
    else:
        hi, fhi = 0.0, f0
        lo = -1.0 / ne
        flo = _area(lo, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        while flo < 0.0:
            hi, fhi = lo, flo
            lo *= 2.0
            if lo < -cap:
                return _NAN
            flo = _area(lo, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)

    for _ in range(64):
        mid = 0.5 * (lo + hi)
        f = _area(mid, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        if f > 0.0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    for _ in range(3):
        h = 1e-7 * (1.0 + abs(lam))
        fp = _area(lam + h, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        fm = _area(lam - h, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
        df = (fp - fm) / (2.0 * h)
        if df != 0.0:
            f = _area(lam, ne, cos_ne, sin_e, cos_w, sin_w, s_ret)
            cand = lam - f / df
            if lo <= cand <= hi:
                lam = cand
    return lam


def fill_cycle(lam, mu, ne, np_, na, nc, n0, ee, out):
    """Write one glottal-derivative cycle (length n0) into ``out``."""
    omega = math.pi / np_
    sin_e = math.sin(omega * ne)
    scale = -ee / sin_e
    e2 = ee / (mu * na)
    emd = math.exp(-mu * (nc - ne))
    n = np.arange(ne, dtype=np.float64)
    out[:ne] = scale * np.exp(lam * (n - ne)) * np.sin(omega * n)
    m = np.arange(ne, nc, dtype=np.float64)
    out[ne:nc] = -e2 * (np.exp(-mu * (m - ne)) - emd)
    out[nc:n0] = 0.0
