"""Analysis frontend: glottal closure detection, inverse filtering, windows.

GCI detection follows the mean-based-signal recipe: a smoothed (Blackman-
weighted) sliding mean of the speech oscillates at the fundamental, its
minima anchor one search interval per cycle, and the strongest negative
peak of the order-14 LP residual inside each interval marks the main
excitation of that cycle. Detected instants are then moved to the cycle
boundary (complete closure): the leaky-integrated residual approximates
glottal flow, which sits at a quiet level through the closed phase and
then ramps steeply upward when the next cycle opens; the base of that
ramp is the boundary. Period estimates are local (per ~100 ms segment)
so the tracker survives wide F0 sweeps.

IAIF runs the classic two-pass chain per 32 ms Hann frame (50 % overlap-
add): order-1 pre-emphasis estimate, vocal-tract LP, leaky integration,
order-4 glottal re-estimate, final vocal-tract LP; the frame inverse-
filtered by the final vocal-tract estimate is the glottal flow derivative.

Feature windows concatenate a period with both neighbours, normalize by
max-abs (gain recorded), and zero-pad the tail to exactly 1000 samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import DegenerateSignal, InvalidParams, NoVoicedRegion
from .waveform import Waveform

__all__ = [
    "GciTrack",
    "FeatureWindow",
    "detect_gci",
    "iaif",
    "make_windows",
    "WINDOW_SAMPLES",
]

WINDOW_SAMPLES = 1000
LP_ORDER = 14
IAIF_VT_ORDER = 14
IAIF_GLOTTAL_ORDER = 4
IAIF_LEAK = 0.99
FRAME_S = 0.032
MBS_PERIODS = 1.75
SEGMENT_S = 0.100


@dataclass(frozen=True)
class GciTrack:
    """Strictly increasing glottal-cycle boundary instants (sample indices)."""

    instants: np.ndarray
    source: str  # "detected" or "ground_truth"

    def __post_init__(self):
        inst = np.asarray(self.instants, dtype=np.int64)
        if inst.ndim != 1:
            raise InvalidParams("instants must be a 1-D index array")
        if inst.size >= 2 and not np.all(np.diff(inst) > 0):
            raise InvalidParams("instants must be strictly increasing")
        if self.source not in ("detected", "ground_truth"):
            raise InvalidParams(f"unknown source {self.source!r}")
        object.__setattr__(self, "instants", inst)


@dataclass
class FeatureWindow:
    """Three concatenated periods, max-abs normalized, zero-padded to 1000."""

    values: np.ndarray
    norm_gain: float
    t0_samples: int
    kind: str  # "sw" (speech waveform) or "gsd" (glottal source derivative)
    start: int = 0
    center_start: int = 0
    center_end: int = 0


def _lpc(frame: np.ndarray, order: int) -> np.ndarray:
    """Autocorrelation-method LP coefficients [1, a1..a_order]."""
    r = np.correlate(frame, frame, mode="full")[frame.size - 1:frame.size + order]
    if r[0] <= 0.0:
        raise DegenerateSignal("zero-energy frame")
    r = r.copy()
    r[0] *= 1.0 + 1e-9
    try:
        a = scipy.linalg.solve_toeplitz((r[:order], r[:order]), -r[1:order + 1])
    except np.linalg.LinAlgError as exc:
        raise DegenerateSignal(f"singular autocorrelation system: {exc}") from exc
    return np.concatenate([[1.0], a])


def _autocorr_period(x: np.ndarray, fs: float, f0_range) -> tuple[int, float]:
    """Dominant period (samples) and its normalized autocorrelation peak."""
    lag_min = max(2, int(round(fs / f0_range[1])))
    lag_max = int(round(fs / f0_range[0]))
    if x.size < 2 * lag_max:
        lag_max = max(lag_min + 1, x.size // 2)
    xw = x - x.mean()
    nfft = int(2 ** np.ceil(np.log2(x.size + lag_max + 1)))
    spec = np.fft.rfft(xw, nfft)
    ac = np.fft.irfft(spec * np.conj(spec), nfft)[:lag_max + 1]
    if ac[0] <= 0.0:
        return 0, 0.0
    ac = ac / ac[0]
    if lag_min >= ac.size:
        return 0, 0.0
    lag = lag_min + int(np.argmax(ac[lag_min:lag_max + 1]))
    return lag, float(ac[lag])


def _mbs(x: np.ndarray, period: int) -> np.ndarray:
    """Blackman-weighted sliding mean over ~1.75 periods."""
    width = max(5, int(round(MBS_PERIODS * period)))
    if width % 2 == 0:
        width += 1
    w = np.blackman(width)
    w = w / w.sum()
    return scipy.signal.fftconvolve(x, w, mode="same")


def _segment_peaks(x, resid, fs, seg_lo, seg_hi, period):
    """Excitation-peak candidates in one segment: MBS minima -> intervals ->
    strongest negative residual peak."""
    pad = int(2 * period)
    lo = max(0, seg_lo - pad)
    hi = min(x.size, seg_hi + pad)
    mbs = _mbs(x[lo:hi], period)
    # local minima of the mean-based signal
    interior = (mbs[1:-1] < mbs[:-2]) & (mbs[1:-1] <= mbs[2:])
    minima = np.nonzero(interior)[0] + 1
    peaks = []
    slack = max(1, int(round(0.10 * period)))
    for mi in minima:
        # interval: from the minimum to the next positive-going zero crossing
        j = mi
        while j < mbs.size - 1 and not (mbs[j] < 0.0 <= mbs[j + 1]):
            j += 1
            if j - mi > int(1.5 * period):
                break
        a = max(0, mi - slack)
        b = min(hi - lo, j + slack + 1)
        if b - a < 2:
            continue
        seg = resid[lo + a:lo + b]
        if seg.size == 0:
            continue
        m = lo + a + int(np.argmin(seg))
        if seg_lo <= m < seg_hi and resid[m] < 0.0:
            peaks.append(m)
    return peaks


def detect_gci(speech: Waveform, f0_range: tuple = (60.0, 500.0)) -> GciTrack:
    """Detect one cycle-boundary instant per glottal cycle.

    Raises NoVoicedRegion when no periodicity is found in f0_range.
    """
    x = speech.samples
    fs = speech.fs_hz
    if x.size == 0 or not np.any(np.abs(x) > 0.0):
        raise NoVoicedRegion("signal is silent")

    # LP residual of the whole utterance; its strong negative peaks mark the
    # main excitation instants.
    win = np.hanning(x.size) if x.size > 3 else np.ones(x.size)
    a_lp = _lpc(x * win, min(LP_ORDER, max(1, x.size // 4)))
    resid = scipy.signal.lfilter(a_lp, [1.0], x)
    # flow proxy: leaky-integrated residual
    flow = scipy.signal.lfilter([1.0], [1.0, -IAIF_LEAK], resid)

    # local period per ~100 ms segment
    seg = max(int(round(SEGMENT_S * fs)), int(round(4 * fs / f0_range[0])))
    seg = min(seg, x.size)
    starts = list(range(0, max(1, x.size - seg // 2), max(1, seg // 2)))
    peaks: list[int] = []
    voiced_any = False
    for s0 in starts:
        s1 = min(x.size, s0 + seg)
        period, strength = _autocorr_period(x[s0:s1], fs, f0_range)
        if period <= 0 or strength < 0.25:
            continue
        voiced_any = True
        peaks.extend(_segment_peaks(x, resid, fs, s0, s1, period))
    if not voiced_any:
        raise NoVoicedRegion(
            f"no periodicity with strength >= 0.25 in {f0_range[0]}-{f0_range[1]} Hz"
        )

    if not peaks:
        raise NoVoicedRegion("no excitation peaks found in voiced segments")
    peaks = np.unique(np.asarray(peaks, dtype=np.int64))

    # merge near-duplicates from overlapping segments: keep the deeper peak
    min_gap = int(round(0.6 * fs / f0_range[1]))
    merged: list[int] = []
    for m in peaks:
        if merged and m - merged[-1] < min_gap:
            if resid[m] < resid[merged[-1]]:
                merged[-1] = int(m)
        else:
            merged.append(int(m))
    peaks = np.asarray(merged, dtype=np.int64)
    if peaks.size < 2:
        raise NoVoicedRegion("fewer than two glottal cycles detected")

    # boundary refinement: between consecutive excitation peaks the flow
    # proxy holds a quiet level through closure, then ramps steeply upward
    # at the next opening; the base of that ramp is the cycle boundary.
    # Walking back from the ramp top stops at the first quiet-phase uptick.
    fsm = np.convolve(flow, np.ones(5) / 5.0, mode="same")
    max_gap = 1.8 * fs / f0_range[0]
    bounds: list[int] = []
    for mk, mk1 in zip(peaks[:-1], peaks[1:]):
        gap = mk1 - mk
        if gap > max_gap:
            continue
        a = int(mk) + 1
        b = int(mk1)
        if b - a < 4:
            continue
        j = a + int(np.argmax(fsm[a:b]))
        while j - 1 > a and fsm[j - 1] <= fsm[j]:
            j -= 1
        bounds.append(int(j))
    # one boundary per cycle means one more instant than inter-peak
    # intervals: extrapolate a local gap at each end when it stays in range
    if len(bounds) >= 2:
        first = 2 * bounds[0] - bounds[1]
        if first >= 0:
            bounds.insert(0, int(first))
        last = 2 * bounds[-1] - bounds[-2]
        if last < x.size:
            bounds.append(int(last))
    bounds_arr = np.asarray(sorted(set(bounds)), dtype=np.int64)
    if bounds_arr.size >= 2:
        keep = [0]
        for i in range(1, bounds_arr.size):
            if bounds_arr[i] - bounds_arr[keep[-1]] >= min_gap:
                keep.append(i)
        bounds_arr = bounds_arr[keep]
    if bounds_arr.size < 2:
        raise NoVoicedRegion("could not place cycle boundaries")
    return GciTrack(instants=bounds_arr, source="detected")


IAIF_MAX_BW_HZ = 650.0


def _keep_resonant(a: np.ndarray, r_min: float) -> np.ndarray:
    """Strip LP poles that cannot be vocal-tract resonances.

    Real-axis poles model source tilt and broad pairs (radius < r_min,
    i.e. bandwidth wider than any plausible formant) model the source
    envelope; inverting either whitens the glottal waveform itself.
    """
    roots = np.roots(a)
    keep = roots[(np.abs(roots.imag) > 1e-8) & (np.abs(roots) >= r_min)]
    if keep.size == 0:
        return np.array([1.0])
    return np.real(np.poly(keep))


def _iaif_frame(frame, ctx, vt_order, g_order, leak, win, r_min):
    """One IAIF pass over a Hann frame; ctx holds pre-context samples."""

    def ifilt(coeffs):
        y = scipy.signal.lfilter(coeffs, [1.0], np.concatenate([ctx, frame]))
        return y[ctx.size:]

    def integ(sig):
        return scipy.signal.lfilter([1.0], [1.0, -leak], sig)

    hg1 = _lpc(win * frame, 1)
    y1 = ifilt(hg1)
    hvt1 = _lpc(win * y1, vt_order)
    g1 = integ(ifilt(hvt1))
    hg2 = _lpc(win * g1, g_order)
    y2 = integ(ifilt(hg2))
    # plausibility filter on the final fit only: the bootstrap pass may
    # lock poles onto harmonics, but only the last inverse filter touches
    # the output, and pruning there is what keeps a source-only input
    # (nothing to invert) passing through unchanged
    hvt2 = _keep_resonant(_lpc(win * y2, vt_order), r_min)
    return ifilt(hvt2)


def iaif(speech: Waveform,
         vt_order: int = IAIF_VT_ORDER,
         glottal_order: int = IAIF_GLOTTAL_ORDER) -> Waveform:
    """Estimate the glottal source derivative by iterative inverse filtering."""
    x = speech.samples
    fs = speech.fs_hz
    n = x.size
    if n == 0 or not np.any(np.abs(x) > 0.0):
        raise DegenerateSignal("signal is silent")
    frame_len = int(round(FRAME_S * fs))
    frame_len -= frame_len % 2
    frame_len = max(frame_len, 4 * (vt_order + 1))
    hop = frame_len // 2
    # periodic Hann: complementary at 50 % overlap
    win = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(frame_len) / frame_len)
    r_min = float(np.exp(-np.pi * IAIF_MAX_BW_HZ / fs))

    out = np.zeros(n)
    wsum = np.zeros(n)
    any_ok = False
    energy_floor = 1e-14 * float(np.max(np.abs(x))) ** 2 * frame_len
    for start in range(0, n, hop):
        stop = min(n, start + frame_len)
        frame = np.zeros(frame_len)
        frame[:stop - start] = x[start:stop]
        if float(frame @ frame) <= energy_floor:
            continue
        ctx = x[max(0, start - vt_order):start]
        try:
            g = _iaif_frame(frame, ctx, vt_order, glottal_order, IAIF_LEAK,
                            win, r_min)
        except DegenerateSignal:
            continue
        any_ok = True
        out[start:stop] += (win * g)[:stop - start]
        wsum[start:stop] += win[:stop - start]
    if not any_ok:
        raise DegenerateSignal("every frame was degenerate")
    nz = wsum > 1e-8
    out[nz] /= wsum[nz]
    return Waveform(out, fs)


def make_windows(signal: Waveform, gcis: GciTrack, kind: str):
    """Cut one 3-period feature window per interior period.

    Returns (windows, skipped) where skipped records periods whose
    3-period span exceeds WINDOW_SAMPLES.
    """
    if kind not in ("sw", "gsd"):
        raise InvalidParams(f"kind must be 'sw' or 'gsd', got {kind!r}")
    x = signal.samples
    g = gcis.instants
    windows: list[FeatureWindow] = []
    skipped: list[dict] = []
    # periods are [g_i, g_{i+1}); interior ones have both neighbours
    for i in range(1, g.size - 2):
        start, c0, c1, end = int(g[i - 1]), int(g[i]), int(g[i + 1]), int(g[i + 2])
        if start < 0 or end > x.size:
            skipped.append({"center_start": c0, "reason": "out_of_signal"})
            continue
        span = end - start
        if span > WINDOW_SAMPLES:
            skipped.append({"center_start": c0, "reason": "overflow", "span": span})
            continue
        raw = x[start:end]
        gain = float(np.max(np.abs(raw))) if raw.size else 0.0
        values = np.zeros(WINDOW_SAMPLES)
        if gain > 0.0:
            values[:span] = raw / gain
        windows.append(FeatureWindow(
            values=values,
            norm_gain=gain,
            t0_samples=c1 - c0,
            kind=kind,
            start=start,
            center_start=c0,
            center_end=c1,
        ))
    return windows, skipped
