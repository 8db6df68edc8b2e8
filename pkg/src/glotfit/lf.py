"""Discrete-time LF glottal source model.

One cycle of the glottal flow derivative is a growing sinusoid over the open
phase, an exponential return phase, and (when tc < 1) a closed stretch of
exact zeros:

    u(n) = e1 * exp(lam*n*Ts) * sin(omega*n*Ts)            0    <= n < ne
    u(n) = -e2 * (exp(-mu*(n-ne)*Ts) - exp(-mu*(nc-ne)*Ts))  ne <= n < nc
    u(n) = 0                                               nc   <= n < n0

with the three derived constants pinned by the model constraints: the cycle
sums to zero (zero net flow), the return-phase decay satisfies
mu*Ta = 1 - exp(-mu*(Tc-Te)), and the open phase lands exactly on -ee at the
closure sample. Phase boundaries live on a rounded sample grid
(round half away from zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DegenerateGrid, InvalidParams, NoRoot
from .waveform import Waveform

__all__ = [
    "LFParams",
    "LFDirect",
    "DiscreteGrid",
    "solve_direct",
    "generate_cycle",
    "generate_train",
    "generate_periodic",
]

MIN_SAMPLES_PER_PERIOD = 16

# Reject shapes whose rounded grid puts the closure sample on a node of the
# open-phase sinusoid (te ~ 2*tp after rounding): e1 diverges there.
_SIN_NODE_TOL = 1e-6


def _round_count(x: float) -> int:
    """Round half away from zero (positive arguments)."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class LFParams:
    """Shape parameters of one glottal cycle.

    tp, te, ta, tc are fractions of the fundamental period t0_s; ee is the
    (positive) magnitude of the flow derivative at glottal closure.
    """

    t0_s: float
    tp: float
    te: float
    ta: float
    tc: float = 1.0
    ee: float = 1.0

    def __post_init__(self):
        if not self.t0_s > 0:
            raise InvalidParams(f"t0_s must be positive, got {self.t0_s}")
        if not (0.0 < self.tp < self.te < self.tc <= 1.0):
            raise InvalidParams(
                f"need 0 < tp < te < tc <= 1, got tp={self.tp} te={self.te} tc={self.tc}"
            )
        if not self.ta > 0:
            raise InvalidParams(f"ta must be positive, got {self.ta}")
        if not self.te + self.ta < self.tc:
            raise InvalidParams(
                f"return phase must fit before closure: te+ta={self.te + self.ta} >= tc={self.tc}"
            )
        if not self.ee > 0:
            raise InvalidParams(f"ee must be positive, got {self.ee}")


@dataclass(frozen=True)
class DiscreteGrid:
    """Per-cycle sample counts for the phase boundaries at a given rate."""

    fs_hz: float
    n0: int
    np_: int
    ne: int
    na: int
    nc: int

    @classmethod
    def from_params(cls, params: LFParams, fs_hz: float) -> "DiscreteGrid":
        if not fs_hz > 0:
            raise InvalidParams(f"fs_hz must be positive, got {fs_hz}")
        if fs_hz * params.t0_s < MIN_SAMPLES_PER_PERIOD:
            raise InvalidParams(
                f"period too short: {fs_hz * params.t0_s:.2f} samples, "
                f"need at least {MIN_SAMPLES_PER_PERIOD}"
            )
        t0n = params.t0_s * fs_hz
        n0 = _round_count(t0n)
        np_ = _round_count(params.tp * t0n)
        ne = _round_count(params.te * t0n)
        na = _round_count(params.ta * t0n)
        nc = _round_count(params.tc * t0n)
        if not (0 < np_ < ne < nc <= n0):
            raise DegenerateGrid(
                f"rounded boundaries collapsed: np={np_} ne={ne} nc={nc} n0={n0}"
            )
        if na < 1:
            raise DegenerateGrid(f"return-phase constant rounded to {na} samples")
        return cls(fs_hz=float(fs_hz), n0=n0, np_=np_, ne=ne, na=na, nc=nc)


@dataclass(frozen=True)
class LFDirect:
    """Derived synthesis constants, in per-second units."""

    e1: float
    e2: float
    lam: float
    mu: float
    omega: float


def _solve_sample_units(params: LFParams, fs_hz: float):
    """Solve mu and lam on the sample grid. Returns (grid, lam_d, mu_d)."""
    grid = DiscreteGrid.from_params(params, fs_hz)
    sin_e = math.sin(math.pi * grid.ne / grid.np_)
    if abs(sin_e) < _SIN_NODE_TOL:
        raise DegenerateGrid(
            f"closure sample on a sinusoid node: ne/np = {grid.ne}/{grid.np_}"
        )
    mu_d = kernels.solve_mu(float(grid.na), float(grid.nc - grid.ne))
    if math.isnan(mu_d):
        raise NoRoot(
            f"return-phase equation has no root (na={grid.na} >= nc-ne={grid.nc - grid.ne}); "
            "ta too large for the available return span"
        )
    lam_d = kernels.solve_lambda(grid.ne, grid.np_, mu_d, float(grid.na), grid.nc)
    if math.isnan(lam_d):
        raise NoRoot("area-balance equation has no root in the admissible range")
    return grid, lam_d, mu_d


def solve_direct(params: LFParams, fs_hz: float) -> LFDirect:
    """Derive (e1, e2, lam, mu, omega) for one cycle at rate fs_hz."""
    grid, lam_d, mu_d = _solve_sample_units(params, fs_hz)
    omega_d = math.pi / grid.np_
    sin_e = math.sin(omega_d * grid.ne)
    e1 = -params.ee * math.exp(-lam_d * grid.ne) / sin_e
    e2 = params.ee / (mu_d * grid.na)
    return LFDirect(
        e1=e1,
        e2=e2,
        lam=lam_d * fs_hz,
        mu=mu_d * fs_hz,
        omega=omega_d * fs_hz,
    )


def generate_cycle(params: LFParams, fs_hz: float) -> Waveform:
    """Synthesize one glottal-derivative cycle (n0 samples)."""
    grid, lam_d, mu_d = _solve_sample_units(params, fs_hz)
    out = np.empty(grid.n0, dtype=np.float64)
    kernels.fill_cycle(
        lam_d, mu_d, grid.ne, grid.np_, float(grid.na), grid.nc, grid.n0,
        params.ee, out,
    )
    return Waveform(out, fs_hz)


def generate_train(params_seq: Iterable[LFParams] | Sequence[LFParams],
                   fs_hz: float) -> Waveform:
    """Concatenate one cycle per parameter set into a pulse train."""
    cycles = [generate_cycle(p, fs_hz).samples for p in params_seq]
    if not cycles:
        raise InvalidParams("empty parameter sequence")
    return Waveform(np.concatenate(cycles), fs_hz)


def generate_periodic(params: LFParams, fs_hz: float, n_periods: int) -> Waveform:
    """Tile one cycle n_periods times (identical to concatenating copies)."""
    if n_periods < 1:
        raise InvalidParams(f"n_periods must be >= 1, got {n_periods}")
    cycle = generate_cycle(params, fs_hz)
    return Waveform(np.tile(cycle.samples, n_periods), fs_hz)
