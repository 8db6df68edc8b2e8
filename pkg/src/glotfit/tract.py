"""Pole-zero (ARMAX) vocal-tract model: filtering, fitting, resonances.

The tract obeys the difference equation

    s(n) = -sum_{i=1..p} a_i s(n-i) + sum_{j=0..q} b_j u(n-j) + e(n)

with a_0 = 1. Fitting minimizes ||e||^2 in closed form: stack delayed
speech columns s_1..s_p and negated excitation columns u_0..u_q into
F, then h = -(F^T F)^-1 F^T s_0 where s_0 is the zero-delay speech
column. The solve goes through an orthogonal factorization of the
ridge-augmented system rather than the normal equations. Rows whose
delays would reach before the window start are dropped, so a window cut
from the middle of a longer signal is fitted exactly (the recursion
holds on every retained row).

Resonance mapping for a pole at radius r, angle theta:
    freq = theta * fs / (2 pi)        bandwidth = -ln(r) * fs / pi
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.signal

from .errors import (
    InvalidParams,
    NyquistViolation,
    OrderTooLarge,
    SingularNormalEquations,
    UnstableFilterWarning,
)
from .waveform import Waveform, check_same_rate

__all__ = [
    "ArmaxModel",
    "FitDiagnostics",
    "ResonanceSet",
    "arma_filter",
    "fit_armax",
    "poles_zeros",
    "resonances",
    "resonance_to_model",
]

RIDGE_SCALE = 1e-10
DEFAULT_P = 14
DEFAULT_Q = 8


@dataclass(frozen=True)
class ArmaxModel:
    """Filter coefficients (a monic, b free) tied to a sample rate."""

    a: np.ndarray
    b: np.ndarray
    fs_hz: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        if a.ndim != 1 or b.ndim != 1:
            raise InvalidParams("coefficient vectors must be 1-D")
        if a.size < 1 or a[0] != 1.0:
            raise InvalidParams(f"a[0] must be exactly 1, got {a[:1]}")
        if b.size < 1:
            raise InvalidParams("b must have at least one coefficient")
        if not self.fs_hz > 0:
            raise InvalidParams(f"fs_hz must be positive, got {self.fs_hz}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "fs_hz", float(self.fs_hz))

    @property
    def p(self) -> int:
        return self.a.size - 1

    @property
    def q(self) -> int:
        return self.b.size - 1


@dataclass(frozen=True)
class FitDiagnostics:
    residual_power: float
    condition_estimate: float
    window_len: int
    n_rows: int
    rank_deficient: bool = False


@dataclass(frozen=True)
class ResonanceSet:
    """Formant and anti-formant (frequency_hz, bandwidth_hz) pairs.

    Frequencies are positive and ascending. Bandwidth sign is not
    constrained here: resonances of a fitted model can come out with
    non-positive bandwidth when a pole lands on or outside the unit
    circle, and hiding them would bias downstream error metrics.
    """

    formants: tuple
    antiformants: tuple = ()

    def __post_init__(self):
        for name, group in (("formants", self.formants),
                            ("antiformants", self.antiformants)):
            group = tuple((float(f), float(bw)) for f, bw in group)
            freqs = [f for f, _ in group]
            if any(f <= 0 for f in freqs):
                raise InvalidParams(f"{name} frequencies must be positive")
            if any(f2 <= f1 for f1, f2 in zip(freqs, freqs[1:])):
                raise InvalidParams(f"{name} must be strictly ascending in frequency")
            object.__setattr__(self, name, group)


def _check_stability(model: ArmaxModel) -> None:
    poles = np.roots(np.trim_zeros(model.a, "b"))
    if poles.size and np.max(np.abs(poles)) >= 1.0:
        warnings.warn(
            f"filter has a pole at radius {np.max(np.abs(poles)):.6f} >= 1",
            UnstableFilterWarning,
            stacklevel=3,
        )


def arma_filter(excitation: Waveform, model: ArmaxModel,
                initial_state: np.ndarray | None = None,
                return_state: bool = False,
                check_stability: bool = True):
    """Run the difference equation over an excitation signal.

    ``initial_state`` is the direct-form-II-transposed state vector of
    length max(p, q+1); pass the returned final state to continue a
    signal across chunk boundaries. Unstable models produce a warning,
    not an error: synthesis proceeds and the caller decides.
    """
    if excitation.fs_hz != model.fs_hz:
        raise InvalidParams(
            f"rate mismatch: excitation {excitation.fs_hz} vs model {model.fs_hz}"
        )
    if check_stability:
        _check_stability(model)
    if initial_state is None:
        # lfilter wants max(len(a), len(b)) - 1 state entries
        initial_state = np.zeros(max(model.a.size, model.b.size) - 1)
    y, zf = scipy.signal.lfilter(model.b, model.a, excitation.samples,
                                 zi=initial_state)
    out = Waveform(y, model.fs_hz)
    if return_state:
        return out, zf
    return out


def fit_armax(speech: Waveform, excitation: Waveform,
              p: int = DEFAULT_P, q: int = DEFAULT_Q):
    """Closed-form least-squares fit of an ARMAX model on one window.

    Returns (ArmaxModel, FitDiagnostics). The design matrix uses only
    rows with full delay context inside the window (rows max(p, q)
    onward), and the solve adds a Tikhonov ridge of
    RIDGE_SCALE * trace(F^T F) / (p + q + 1) before factorizing.
    """
    check_same_rate(speech, excitation)
    s = speech.samples
    u = excitation.samples
    if s.shape != u.shape:
        raise InvalidParams(
            f"window length mismatch: speech {s.shape[0]} vs excitation {u.shape[0]}"
        )
    if p < 1 or q < 0:
        raise InvalidParams(f"need p >= 1 and q >= 0, got p={p} q={q}")
    n = s.shape[0]
    ncols = p + q + 1
    if n <= p + q + 2:
        raise OrderTooLarge(f"window of {n} samples cannot fit orders p={p} q={q}")
    if not np.any(u):
        raise SingularNormalEquations("excitation is identically zero")

    d = max(p, q)
    m = n - d
    cols = np.empty((m, ncols), dtype=np.float64)
    for i in range(1, p + 1):
        cols[:, i - 1] = s[d - i:n - i]
    for j in range(0, q + 1):
        cols[:, p + j] = -u[d - j:n - j]
    s0 = s[d:n]

    h, _, _, sv = np.linalg.lstsq(cols, -s0, rcond=None)

    # Ridge policy: the trace-scaled ridge is a degeneracy guard, not a
    # blanket bias. A clean window is solved exactly: an unconditional
    # ridge of this size shifts coefficients by ~ridge/sigma_min^2, far
    # past the exact-recovery tolerance on strongly correlated delay
    # columns, and even cond ~ 1e6 windows solve to ~1e-11 without help
    # because the system is consistent. Machine-level collinearity splits
    # two ways: a degenerate excitation block (constant u, near-silent u)
    # leaves the filter unidentifiable and is rejected, while a healthy
    # excitation with a machine-singular joint matrix means the window is
    # consistent with a lower-order model than (p, q). lstsq has already
    # truncated the tiny singular values there, so h is the minimum-norm
    # solution whose surplus poles and zeros cancel; keep it and flag the
    # fit. Severely conditioned full-rank windows are re-solved with the
    # ridge added.
    ridge = RIDGE_SCALE * float(np.sum(sv * sv)) / ncols
    rank_deficient = bool(sv[0] == 0.0 or sv[-1] <= 1e-12 * sv[0])
    if rank_deficient:
        su = np.linalg.svd(cols[:, p:], compute_uv=False)
        if su[0] == 0.0 or su[-1] <= 1e-10 * su[0]:
            raise SingularNormalEquations(
                "excitation block rank deficient "
                f"(singular values {su[-1]:.3e}..{su[0]:.3e})"
            )
    elif sv[-1] <= 1e-8 * sv[0] and sv[-1] ** 2 <= ridge:
        aug = np.vstack([cols, math.sqrt(ridge) * np.eye(ncols)])
        rhs = np.concatenate([-s0, np.zeros(ncols)])
        h, _, _, _ = np.linalg.lstsq(aug, rhs, rcond=None)
    cond = float(sv[0] / max(sv[-1], np.finfo(np.float64).tiny))

    e = cols @ h + s0
    residual_power = float(e @ e)
    a = np.concatenate([[1.0], h[:p]])
    b = h[p:]
    model = ArmaxModel(a=a, b=b, fs_hz=speech.fs_hz)
    diag = FitDiagnostics(
        residual_power=residual_power,
        condition_estimate=cond,
        window_len=n,
        n_rows=m,
        rank_deficient=rank_deficient,
    )
    return model, diag


def poles_zeros(model: ArmaxModel, rtol: float = 1e-8):
    """Roots of the denominator and numerator polynomials (in z^-1).

    Trailing coefficients smaller than rtol * max|coef| are dropped
    before rooting. An order-inflated least-squares fit pads the true
    polynomials with near-zero high-order terms, and rooting those terms
    literally manufactures near-origin roots that carry no resonance
    content. Exact-order fits are untouched: their trailing coefficients
    are products of pole radii, many orders above the cutoff.
    """

    def _trim(c: np.ndarray) -> np.ndarray:
        c = np.trim_zeros(c, "b")
        if c.size:
            keep = np.nonzero(np.abs(c) > rtol * np.max(np.abs(c)))[0]
            c = c[:keep[-1] + 1] if keep.size else c[:1]
        return c

    a = _trim(model.a)
    b = _trim(model.b)
    poles = np.roots(a) if a.size > 1 else np.empty(0, dtype=np.complex128)
    zeros = np.roots(b) if b.size > 1 else np.empty(0, dtype=np.complex128)
    return poles, zeros


def _roots_to_pairs(roots: np.ndarray, fs_hz: float):
    pairs = []
    for z in roots:
        if z.imag <= 1e-12 * (1.0 + abs(z.real)):
            continue  # real roots and the conjugate halves carry no new resonance
        r = abs(z)
        theta = math.atan2(z.imag, z.real)
        freq = theta * fs_hz / (2.0 * math.pi)
        bw = -math.log(r) * fs_hz / math.pi if r > 0 else math.inf
        pairs.append((freq, bw))
    pairs.sort(key=lambda fb: fb[0])
    return tuple(pairs)


def resonances(model: ArmaxModel, cancel_tol: float = 1e-6) -> ResonanceSet:
    """Pole/zero pairs mapped to (frequency, bandwidth), ascending.

    A pole and zero within cancel_tol of each other cancel in the
    transfer function and are removed as a pair before mapping: fitting
    more orders than the data supports returns the true filter times a
    common polynomial factor, and the factor's roots are not resonances.
    """
    poles, zeros = poles_zeros(model)
    if cancel_tol > 0.0 and poles.size and zeros.size:
        alive = list(poles)
        kept = []
        for z in zeros:
            dist = np.abs(np.asarray(alive) - z) if alive else np.empty(0)
            k = int(np.argmin(dist)) if dist.size else -1
            if k >= 0 and dist[k] <= cancel_tol * (1.0 + abs(z)):
                alive.pop(k)
            else:
                kept.append(z)
        poles = np.asarray(alive, dtype=np.complex128)
        zeros = np.asarray(kept, dtype=np.complex128)
    return ResonanceSet(
        formants=_roots_to_pairs(poles, model.fs_hz),
        antiformants=_roots_to_pairs(zeros, model.fs_hz),
    )


def resonance_to_model(res: ResonanceSet, fs_hz: float,
                       gain: float = 1.0) -> ArmaxModel:
    """Build the filter whose conjugate pole/zero pairs sit at the given
    resonances. Orders come out as 2 x len(formants), 2 x len(antiformants)."""
    if not fs_hz > 0:
        raise InvalidParams(f"fs_hz must be positive, got {fs_hz}")

    def poly(pairs: Sequence[tuple]) -> np.ndarray:
        out = np.array([1.0])
        for freq, bw in pairs:
            if freq >= fs_hz / 2.0:
                raise NyquistViolation(
                    f"resonance at {freq} Hz >= Nyquist {fs_hz / 2.0} Hz"
                )
            if bw < 0:
                raise InvalidParams(f"bandwidth must be >= 0, got {bw}")
            r = math.exp(-math.pi * bw / fs_hz)
            theta = 2.0 * math.pi * freq / fs_hz
            out = np.convolve(out, [1.0, -2.0 * r * math.cos(theta), r * r])
        return out

    a = poly(res.formants)
    b = gain * poly(res.antiformants)
    return ArmaxModel(a=a, b=b, fs_hz=float(fs_hz))
