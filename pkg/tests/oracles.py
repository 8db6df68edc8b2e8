"""Straight-line reference implementations used to cross-check the library.

Everything here is written the slow, obvious way (literal sums, generic
root brackets, per-sample loops) so agreement with the package is a real
dual-route check rather than the same code twice.
"""

import math

import numpy as np
from scipy.optimize import brentq
from scipy.signal import residuez


def round_half_up(x):
    return int(math.floor(x + 0.5))


def lf_grid(t0_s, tp, te, ta, tc, fs):
    t0n = t0_s * fs
    return {
        "n0": round_half_up(t0n),
        "np": round_half_up(tp * t0n),
        "ne": round_half_up(te * t0n),
        "na": round_half_up(ta * t0n),
        "nc": round_half_up(tc * t0n),
    }


def lf_cycle(t0_s, tp, te, ta, fs, tc=1.0, ee=1.0):
    """One glottal-derivative cycle via brentq roots and literal sums."""
    g = lf_grid(t0_s, tp, te, ta, tc, fs)
    n0, np_, ne, na, nc = g["n0"], g["np"], g["ne"], g["na"], g["nc"]
    d = nc - ne
    omega = math.pi / np_

    # decay rate: mu*na = 1 - exp(-mu*d), positive root only
    def f_mu(m):
        return m * na - 1.0 + math.exp(-m * d)

    mu = brentq(f_mu, 1e-14, 1.0 / na, xtol=1e-15, rtol=8.9e-16)
    e2 = ee / (mu * na)
    tail = math.exp(-mu * d)
    n_ret = np.arange(ne, nc)
    ret = -e2 * (np.exp(-mu * (n_ret - ne)) - tail)
    s_ret = float(ret.sum())

    # growth rate: whole cycle sums to zero
    n_open = np.arange(ne)
    sin_e = math.sin(omega * ne)

    def s_open(lam):
        e1 = -ee * math.exp(-lam * ne) / sin_e
        return float(np.sum(e1 * np.exp(lam * n_open) * np.sin(omega * n_open)))

    def f_lam(lam):
        return s_open(lam) + s_ret

    grid = np.linspace(-0.5, 0.5, 4001)
    vals = np.array([f_lam(v) for v in grid])
    sgn = np.sign(vals)
    jumps = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    assert jumps.size, "no sign change for the growth-rate root"
    j = jumps[np.argmin(np.abs(grid[jumps]))]
    lam = brentq(f_lam, grid[j], grid[j + 1], xtol=1e-15, rtol=8.9e-16)

    e1 = -ee * math.exp(-lam * ne) / sin_e
    out = np.zeros(n0)
    out[:ne] = e1 * np.exp(lam * n_open) * np.sin(omega * n_open)
    out[ne:nc] = ret
    return out, {"mu": mu, "lam": lam, "e1": e1, "e2": e2, "omega": omega,
                 **g}


def filter_loop(a, b, u):
    """ARMAX difference equation evaluated one sample at a time."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    u = np.asarray(u, float)
    s = np.zeros_like(u)
    for n in range(u.size):
        acc = 0.0
        for k in range(a.size):
            if n - 1 - k >= 0:
                acc -= a[k] * s[n - 1 - k]
        for k in range(b.size):
            if n - k >= 0:
                acc += b[k] * u[n - k]
        s[n] = acc
    return s


def filter_partial_fractions(a, b, n):
    """Impulse response by partial-fraction expansion of b(z)/(1+a(z))."""
    den = np.concatenate([[1.0], np.asarray(a, float)])
    r, p, k = residuez(np.asarray(b, float), den)
    ns = np.arange(n)
    h = np.zeros(n, dtype=complex)
    for ri, pi in zip(r, p):
        h += ri * pi ** ns
    for i, ki in enumerate(np.atleast_1d(k)):
        if i < n:
            h[i] += ki
    return h.real
